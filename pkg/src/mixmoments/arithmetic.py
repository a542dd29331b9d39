"""
Quadratic twists of an elliptic curve L-function: Frobenius traces, the
arithmetic factor of the ratios conjecture, the mixed-moment prediction and
the one-level density predictions with and without central-value excision.

The default curve is E11.a3, ``y^2 + y = x^3 - x^2`` (conductor 11, root
number +1). The special local factor at the conductor is implemented for
prime conductors with multiplicative reduction, which covers this family.

Sign convention
---------------
The oscillating term of :math:`\\mathcal{U}_E` enters with a minus sign:
:math:`\\lim_{\\epsilon\\to 0}\\zeta'(1+\\epsilon)/\\zeta(1+\\epsilon)^2 = -1`.
With this sign the bracket maps onto the SO(2N) bracket under
:math:`\\zeta(1+x) \\mapsto z(x)` and the one-level density is finite at the
origin.
"""

import csv
import os
from dataclasses import dataclass, field
from math import gcd, isqrt
from pathlib import Path

import numpy

from . import specfun
from .errors import EmptyDataset, NonConvergence, ParseError
from .excised import (DensityCurve, Normalization, _loop_roots,
                      _v_from_root, unit_area)

__all__ = [
    "CurveConfig", "E11A3", "ApTable", "TwistFamily", "ZeroDataset",
    "primes_up_to", "count_points_mod_p", "lambda_table", "a_e_tilde",
    "a_e_tilde_deriv", "euler_product_change", "kronecker",
    "is_fundamental_discriminant", "twist_family", "read_d_list",
    "mixed_bracket", "predict_U_lfun", "predict_mixed_lfun",
    "r0_density_lfun", "excised_prediction_lfun", "ingest_zero_data",
    "zero_histogram", "CACHE_ENV", "DEFAULT_PMAX",
]

CACHE_ENV = "RMT_CACHE_DIR"
DEFAULT_PMAX = 10_000
DERIV_STEP = 1e-4
_PHI_FLOOR = 1e-8


# ---------------
# Curve data
# ---------------

@dataclass(frozen=True)
class CurveConfig:
    """
    Attributes
    ----------
    weierstrass : tuple of int
        ``(a1, a2, a3, a4, a6)``.
    conductor_M : int
    omega_E : int
        Root number, +1 or -1.
    kappa_E : float, optional
        Central-value discretisation constant; no default is assumed.
    bad_primes : tuple of int
    label : str
    """

    weierstrass: tuple = (0, -1, 1, 0, 0)
    conductor_M: int = 11
    omega_E: int = 1
    kappa_E: float = None
    bad_primes: tuple = (11,)
    label: str = "11.a3"

    def __post_init__(self):
        object.__setattr__(self, "weierstrass",
                           tuple(int(a) for a in self.weierstrass))
        if len(self.weierstrass) != 5:
            raise ValueError("need five Weierstrass coefficients")
        if self.omega_E not in (1, -1):
            raise ValueError("omega_E must be +1 or -1")
        if any(self.conductor_M % p for p in self.bad_primes):
            raise ValueError("bad primes must divide the conductor")
        if self.kappa_E is not None and not self.kappa_E > 0:
            raise ValueError("kappa_E must be positive")

    def with_kappa(self, kappa):
        return CurveConfig(self.weierstrass, self.conductor_M, self.omega_E,
                           float(kappa), self.bad_primes, self.label)


E11A3 = CurveConfig()


def primes_up_to(n):
    """Primes ``p <= n`` by the sieve of Eratosthenes."""

    if n < 2:
        return numpy.zeros(0, dtype=numpy.int64)
    sieve = numpy.ones(n + 1, dtype=bool)
    sieve[:2] = False
    for p in range(2, isqrt(n) + 1):
        if sieve[p]:
            sieve[p * p::p] = False
    return numpy.nonzero(sieve)[0].astype(numpy.int64)


def count_points_mod_p(curve, p):
    """
    Projective point count of the curve over :math:`\\mathbb{F}_p`, including
    the point at infinity.

    For odd ``p > 3`` the equation is written as
    :math:`(2y + a_1 x + a_3)^2 = f(x)` and each ``x`` contributes
    ``1 + (f(x)/p)`` points; ``p = 2, 3`` are enumerated directly.

    Examples
    --------
    >>> count_points_mod_p(E11A3, 2)
    5
    """

    a1, a2, a3, a4, a6 = curve.weierstrass
    p = int(p)
    if p in (2, 3):
        x = numpy.arange(p)[:, None]
        y = numpy.arange(p)[None, :]
        lhs = y * y + a1 * x * y + a3 * y
        rhs = x ** 3 + a2 * x * x + a4 * x + a6
        return int(((lhs - rhs) % p == 0).sum()) + 1
    x = numpy.arange(p, dtype=numpy.int64)
    f = (4 * ((x * x % p) * x % p + a2 * x * x % p + a4 * x + a6)
         + (a1 * x + a3) ** 2) % p
    squares = numpy.zeros(p, dtype=numpy.int64)
    squares[(x * x) % p] = 1
    chi = numpy.where(f == 0, 0, 2 * squares[f] - 1)
    return int(p + chi.sum()) + 1


@dataclass(frozen=True)
class ApTable:
    """``lambda(p) = (p + 1 - N_p)/sqrt(p)`` for every prime ``p <= p_max``."""

    primes: numpy.ndarray = field(repr=False)
    lam: numpy.ndarray = field(repr=False)
    p_max: int = 0

    def __getitem__(self, p):
        i = numpy.searchsorted(self.primes, p)
        if i >= len(self.primes) or self.primes[i] != p:
            raise KeyError(p)
        return float(self.lam[i])

    def upto(self, p_max):
        k = numpy.searchsorted(self.primes, p_max, side="right")
        return ApTable(self.primes[:k], self.lam[:k], int(p_max))


def _cache_path(curve, cache_dir):
    base = cache_dir if cache_dir is not None else os.environ.get(CACHE_ENV)
    if not base:
        return None
    tag = "_".join(str(a) for a in curve.weierstrass)
    return Path(base) / f"lambda_{tag}.csv"


def _read_cache(path):
    primes, lam = [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        next(reader, None)
        for row in reader:
            primes.append(int(row[0]))
            lam.append(float(row[1]))
    return numpy.array(primes, dtype=numpy.int64), numpy.array(lam)


def _write_cache(path, primes, lam):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["p", "lambda"])
        for p, v in zip(primes, lam):
            w.writerow([int(p), format(float(v), ".17g")])


_MEMO = {}


def lambda_table(curve=E11A3, p_max=DEFAULT_PMAX, cache_dir=None):
    """
    :class:`ApTable` up to ``p_max``, memoised and cached on disk under
    ``$RMT_CACHE_DIR`` (or ``cache_dir``) as a ``p,lambda`` CSV.
    """

    key = curve.weierstrass
    have = _MEMO.get(key)
    if have is not None and have.p_max >= p_max:
        return have.upto(p_max)
    path = _cache_path(curve, cache_dir)
    if path is not None and path.exists():
        primes, lam = _read_cache(path)
        if len(primes) and primes[-1] >= primes_up_to(p_max)[-1]:
            table = ApTable(primes, lam, max(int(primes[-1]), p_max))
            _MEMO[key] = table
            return table.upto(p_max)
    primes = primes_up_to(p_max)
    lam = numpy.array([(p + 1 - count_points_mod_p(curve, p)) / numpy.sqrt(p)
                       for p in primes])
    table = ApTable(primes, lam, int(p_max))
    _MEMO[key] = table
    if path is not None:
        _write_cache(path, primes, lam)
    return table


# ----------------------------
# Arithmetic factor A_E
# ----------------------------

def _log_a_e(alpha, gamma, r, curve, table):
    """
    log of the Euler product at ``(0, ..., 0, alpha; gamma)`` with K = r + 1,
    broadcasting over an array ``r``.
    """

    a = complex(alpha)
    g = complex(gamma)
    r = numpy.asarray(r, dtype=complex)[..., None]
    p = table.primes.astype(float)
    lam = table.lam
    lp = numpy.log(p)
    pw = lambda s: numpy.exp(-s * lp)
    head = (r * numpy.log(1 - pw(1 + a)) + 0.5 * r * (r - 1) * numpy.log(1 - 1 / p)
            + numpy.log(1 - pw(1 + 2 * g)) - numpy.log(1 - pw(1 + a + g))
            - r * numpy.log(1 - pw(1 + g)))
    bad = numpy.isin(table.primes, curve.bad_primes)
    good = ~bad

    def pm(sign):
        num = 1 + sign * lam * pw(0.5 + g) + pw(1 + 2 * g)
        den = ((1 + sign * lam * pw(0.5 + a) + pw(1 + 2 * a))
               * numpy.exp(r * numpy.log(1 + sign * lam * pw(0.5) + 1 / p)))
        return num / den

    tail_good = numpy.log((0.5 * pm(-1) + 0.5 * pm(1) + 1 / p) / (1 + 1 / p))
    tail_bad = (numpy.log(1 - lam * pw(0.5 + g)) - numpy.log(1 - lam * pw(0.5 + a))
                - r * numpy.log(1 - lam * pw(0.5)))
    tail = numpy.where(good, tail_good, tail_bad)
    return (head + tail).sum(axis=-1)


def a_e_tilde(alpha, gamma, r, curve=E11A3, p_max=DEFAULT_PMAX, check=False,
              rtol=1e-6):
    """
    Truncated Euler product :math:`\\tilde A_E(\\alpha, \\gamma) =
    A_E(0, \\dots, 0, \\alpha; \\gamma)` over ``p <= p_max`` with ``K = r+1``.

    For ``p`` not dividing the conductor the local factor is

    .. math::

        \\frac{(1-p^{-1-\\alpha})^r(1-p^{-1})^{r(r-1)/2}(1-p^{-1-2\\gamma})}
        {(1-p^{-1-\\alpha-\\gamma})(1-p^{-1-\\gamma})^r}
        \\frac{1}{1+1/p}\\Big(\\tfrac12 P_- + \\tfrac12 P_+ + \\tfrac1p\\Big),

    :math:`P_\\mp = (1 \\mp \\lambda p^{-1/2-\\gamma} + p^{-1-2\\gamma}) /
    ((1 \\mp \\lambda p^{-1/2-\\alpha} + p^{-1-2\\alpha})
    (1 \\mp \\lambda p^{-1/2} + p^{-1})^r)`; at the conductor the last
    bracket is replaced by :math:`(1-\\lambda p^{-1/2-\\gamma}) /
    ((1-\\lambda p^{-1/2-\\alpha})(1-\\lambda p^{-1/2})^r)`.

    Parameters
    ----------
    alpha, gamma : complex
    r : complex or array_like
    curve : CurveConfig
    p_max : int
    check : bool, default=False
        Also evaluate at ``2 p_max`` and raise if the relative change
        exceeds ``rtol``.

    Raises
    ------
    NonConvergence
        Only when ``check`` is true.
    """

    table = lambda_table(curve, p_max)
    val = numpy.exp(_log_a_e(alpha, gamma, r, curve, table))
    if check:
        change = euler_product_change(alpha, gamma, r, curve, p_max)
        if numpy.max(change) > rtol:
            raise NonConvergence(
                f"Euler product moves by {numpy.max(change):.3g} when p_max doubles")
    return val[()] if numpy.ndim(val) == 0 else val


def euler_product_change(alpha, gamma, r, curve=E11A3, p_max=DEFAULT_PMAX):
    """Relative change of :func:`a_e_tilde` when ``p_max`` doubles."""

    lo = a_e_tilde(alpha, gamma, r, curve, p_max)
    hi = a_e_tilde(alpha, gamma, r, curve, 2 * p_max)
    return numpy.abs(hi - lo) / numpy.abs(hi)


def a_e_tilde_deriv(phi, r, curve=E11A3, p_max=DEFAULT_PMAX, h=DERIV_STEP,
                    tol=1e-5):
    """
    :math:`\\tilde A^1_E(\\phi) = \\partial_\\alpha \\tilde A_E(\\alpha,
    \\phi)|_{\\alpha = \\phi}` by central differences with one Richardson
    step, ``(4 D(h/2) - D(h))/3``.

    Raises
    ------
    NonConvergence
        If the extrapolations from ``(h, h/2)`` and ``(h/2, h/4)`` differ by
        more than ``tol`` (relative, floor 1).
    """

    phi = complex(phi)
    table = lambda_table(curve, p_max)

    def d(step):
        up = numpy.exp(_log_a_e(phi + step, phi, r, curve, table))
        dn = numpy.exp(_log_a_e(phi - step, phi, r, curve, table))
        return (up - dn) / (2 * step)

    d1, d2, d4 = d(h), d(h / 2), d(h / 4)
    rich = (4 * d2 - d1) / 3
    rich2 = (4 * d4 - d2) / 3
    if numpy.max(numpy.abs(rich - rich2) / numpy.maximum(1, numpy.abs(rich))) > tol:
        raise NonConvergence("Richardson derivative unstable")
    return rich[()] if numpy.ndim(rich) == 0 else rich


# ----------------
# Twist family
# ----------------

def kronecker(a, n):
    """
    Kronecker symbol :math:`(a/n)`.

    Examples
    --------
    >>> [kronecker(d, -11) for d in (1, 2, 3, 5, 12)]
    [1, -1, 1, 1, 1]
    """

    a, n = int(a), int(n)
    if n == 0:
        return 1 if abs(a) == 1 else 0
    if a % 2 == 0 and n % 2 == 0:
        return 0
    v = 0
    while n % 2 == 0:
        n //= 2
        v += 1
    k = 1
    if v % 2 and a % 8 in (3, 5):
        k = -1
    if n < 0:
        n = -n
        if a < 0:
            k = -k
    # Jacobi symbol (a/n) for odd positive n
    a %= n
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                k = -k
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            k = -k
        a %= n
    return k if n == 1 else 0


def _squarefree(m):
    if m < 1:
        return False
    for q in range(2, isqrt(m) + 1):
        if m % (q * q) == 0:
            return False
    return True


def is_fundamental_discriminant(d):
    """
    True for ``d = 1 mod 4`` squarefree or ``d = 4m`` with ``m = 2, 3 mod 4``
    squarefree (``d != 1``).
    """

    d = int(d)
    if d in (0, 1):
        return False
    if d % 4 == 1:
        return _squarefree(abs(d))
    if d % 4 == 0:
        m = d // 4
        return m % 4 in (2, 3) and _squarefree(abs(m))
    return False


@dataclass(frozen=True)
class TwistFamily:
    """
    Positive fundamental discriminants ``d <= X`` with
    :math:`\\omega_E\\chi_d(-M) = +1`, and their
    :math:`\\mathcal{N}_d = \\log(\\sqrt{M} d / 2\\pi)`.
    """

    X: float
    d_list: numpy.ndarray = field(repr=False)
    N_d: numpy.ndarray = field(repr=False)

    @classmethod
    def from_list(cls, d_list, curve=E11A3):
        d = numpy.asarray(sorted(int(x) for x in d_list), dtype=numpy.int64)
        if len(d) == 0:
            raise EmptyDataset("empty d-list")
        if numpy.any(d <= 0):
            raise ValueError("discriminants must be positive")
        nd = numpy.log(numpy.sqrt(curve.conductor_M) * d / (2 * numpy.pi))
        return cls(float(d[-1]), d, nd)

    def __len__(self):
        return len(self.d_list)


def twist_family(X, curve=E11A3):
    """
    Even quadratic twists with ``0 < d <= X``.

    Examples
    --------
    >>> twist_family(30).d_list.tolist()
    [5, 12]
    """

    if X < 3:
        raise ValueError("X must be >= 3")
    m = curve.conductor_M
    keep = [d for d in range(2, int(X) + 1)
            if gcd(d, m) == 1 and is_fundamental_discriminant(d)
            and curve.omega_E * kronecker(d, -m) == 1]
    if not keep:
        raise EmptyDataset("no admissible discriminants below X")
    fam = TwistFamily.from_list(keep, curve)
    return TwistFamily(float(X), fam.d_list, fam.N_d)


def read_d_list(path, curve=E11A3):
    """A :class:`TwistFamily` from a file with one integer per line."""

    out = []
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh, 1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            try:
                out.append(int(s))
            except ValueError:
                raise ParseError(f"not an integer: {s!r}", line=i) from None
    return TwistFamily.from_list(out, curve)


# -------------------------------
# Mixed moment and its pieces
# -------------------------------

def mixed_bracket(r, phi, n, zeta_one, logderiv_one, gamma_ratio, a_diag,
                  a_deriv, a_refl):
    """
    Generic leading-order bracket

    .. math::

        A^1 + A\\,r\\,L(\\phi) - A\\,L(2\\phi)
        - Z(2\\phi)\\Big(\\frac{Z(-\\phi)}{Z(\\phi)}\\Big)^r A^-\\, g\\,
          e^{-2N\\phi},

    where ``Z`` stands for :math:`\\zeta(1 + \\cdot)` and ``L`` for
    :math:`\\zeta'/\\zeta(1+\\cdot)`. With ``Z = z``, ``L(x) = z(-x)``,
    ``g = 1``, ``A = A^- = 1`` and ``A^1 = 0`` this is the leading SO(2N)
    bracket, which is how the L-function side is regression-tested.

    Parameters
    ----------
    r : complex or array
    phi : complex
        Already multiplied by i on the L-function side.
    n : float or array
        Matrix size or conductor logarithm.
    zeta_one, logderiv_one : callable
    gamma_ratio, a_diag, a_deriv, a_refl : complex or array
    """

    r = numpy.asarray(r, dtype=complex)
    n = numpy.asarray(n, dtype=float)
    power = numpy.exp(r * (numpy.log(zeta_one(-phi)) - numpy.log(zeta_one(phi))))
    osc = (zeta_one(2 * phi) * power * a_refl * gamma_ratio
           * numpy.exp(-2.0 * n * phi))
    return (a_deriv + a_diag * r * logderiv_one(phi)
            - a_diag * logderiv_one(2 * phi) - osc)


def _zeta_one(x):
    return specfun.zeta(1.0 + numpy.asarray(x, dtype=complex))


def _logderiv_one(x):
    s = 1.0 + numpy.asarray(x, dtype=complex)
    return specfun.zeta_prime(s) / specfun.zeta(s)


def _arith_parts(r, phi, curve, p_max):
    """A(i phi, i phi), A^1(i phi) and A(-i phi, i phi) for array r."""

    ip = 1j * complex(phi)
    table = lambda_table(curve, p_max)
    a_diag = numpy.exp(_log_a_e(ip, ip, r, curve, table))
    a_refl = numpy.exp(_log_a_e(-ip, ip, r, curve, table))
    a_der = a_e_tilde_deriv(ip, r, curve, p_max)
    return a_diag, a_der, a_refl


def predict_U_lfun(n_d, r, phi, curve=E11A3, p_max=DEFAULT_PMAX):
    """
    :math:`\\mathcal{U}_E(\\mathcal{N}_d, r, \\phi) = \\tilde A^1_E(i\\phi)
    + \\tilde A_E\\, r\\,\\frac{\\zeta'}{\\zeta}(1+i\\phi)
    - \\tilde A_E\\,\\frac{\\zeta'}{\\zeta}(1+2i\\phi)
    - \\zeta(1+2i\\phi)\\frac{\\zeta(1-i\\phi)^r}{\\zeta(1+i\\phi)^r}
      \\tilde A_E(-i\\phi, i\\phi)\\,g(i\\phi)\\,e^{-2i\\mathcal{N}_d\\phi}`.
    """

    a_diag, a_der, a_refl = _arith_parts(r, phi, curve, p_max)
    ip = 1j * complex(phi)
    out = mixed_bracket(r, ip, n_d, _zeta_one, _logderiv_one,
                        complex(specfun.gfun(ip)), a_diag, a_der, a_refl)
    return out[()] if numpy.ndim(out) == 0 else out


def _n_of(d, curve):
    return float(numpy.log(numpy.sqrt(curve.conductor_M) * d / (2 * numpy.pi)))


def predict_mixed_lfun(d, r, phi, curve=E11A3, p_max=DEFAULT_PMAX):
    """
    :math:`\\mathcal{V}(\\mathcal{N}_d, r)\\,\\mathcal{U}_E(\\mathcal{N}_d, r,
    \\phi)`, the predicted contribution of one twist to
    :math:`\\sum_d L_E'/L_E(1/2+i\\phi,\\chi_d)\\,L_E(1/2,\\chi_d)^r`.
    """

    from .moments import predict_V

    n_d = _n_of(d, curve)
    if n_d <= 0:
        raise ValueError("need log(sqrt(M) d / 2 pi) > 0")
    return complex(predict_V(n_d, r) * predict_U_lfun(n_d, r, phi, curve, p_max))


# -------------------------------
# One-level densities
# -------------------------------

def _family(X, curve):
    return X if isinstance(X, TwistFamily) else twist_family(X, curve)


def _chi_term(n_d, phi):
    # -X'/X(1/2 + i phi) = 2 N_d + psi(1 + i phi) + psi(1 - i phi)
    ip = 1j * phi
    return 2.0 * n_d + complex(specfun.digamma(1 + ip) + specfun.digamma(1 - ip))


def _riszero_bracket(n_d, phi, a_diag, a_der, a_refl):
    """
    -A zeta'/zeta(1+x) - A^- E zeta(1+x) + A^1 with x = 2 i phi, written with
    the regular parts of zeta so the 1/x poles cancel analytically.
    """

    x = 2j * phi
    reg = complex(specfun.zeta_regular(1 + x))
    dreg = complex(specfun.zeta_prime_regular(1 + x))
    log_e = (-2j * n_d * phi + complex(specfun.loggamma(1 - 1j * phi))
             - complex(specfun.loggamma(1 + 1j * phi)))
    ae = a_refl * numpy.exp(log_e)
    # (A - A^- E)/x = -A expm1(h)/x with h = log(A^- E / A)
    h = numpy.log(a_refl / a_diag) + log_e
    pole = -a_diag * numpy.expm1(h) / x
    return (pole - a_diag * (x * dreg + reg) / (1 + x * reg) - ae * reg + a_der)


def r0_density_lfun(X, phi_grid, curve=E11A3, p_max=DEFAULT_PMAX,
                    return_imag=False):
    """
    Ratios-conjecture one-level density summed over the family:

    .. math::

        \\frac{1}{2\\pi}\\sum_d \\mathrm{Re}\\Big[2\\mathcal{N}_d
        + \\Psi(1+i\\phi) + \\Psi(1-i\\phi)
        + 2\\Big(-\\tilde A_E\\frac{\\zeta'}{\\zeta}(1+2i\\phi)
        + \\tilde A^1_E(i\\phi)
        - e^{-2i\\mathcal{N}_d\\phi}g(i\\phi)\\zeta(1+2i\\phi)
          \\tilde A_E(-i\\phi, i\\phi)\\Big)\\Big]

    with all :math:`\\tilde A` at ``r = 0``. The zeta poles at the origin are
    cancelled analytically, so the curve is finite through ``phi = 0``;
    ``|phi| < 1e-8`` is evaluated at ``1e-8``.

    Parameters
    ----------
    X : float or TwistFamily
    phi_grid : array_like
    curve : CurveConfig
    p_max : int
    return_imag : bool
        Also return the discarded imaginary part of the sum.

    Returns
    -------
    DensityCurve
        Raw family sum (zeros per unit angle), not normalised.
    """

    fam = _family(X, curve)
    phi = numpy.asarray(phi_grid, dtype=float)
    out = numpy.empty(phi.shape, dtype=complex)
    for i, ph in enumerate(phi.ravel()):
        ph = ph if abs(ph) >= _PHI_FLOOR else _PHI_FLOOR
        a_diag, a_der, a_refl = (complex(v) for v in _arith_parts(0.0, ph, curve,
                                                                  p_max))
        tot = 0j
        for n_d in fam.N_d:
            tot += (_chi_term(n_d, ph)
                    + 2 * _riszero_bracket(n_d, ph, a_diag, a_der, a_refl))
        out.flat[i] = tot / (2 * numpy.pi)
    curve_out = DensityCurve(phi, out.real, Normalization.RawCount)
    return (curve_out, out.imag) if return_imag else curve_out


def _v_prefactor(r, roots):
    # V(N, r) without the N power: 2^{r^2/2} G(r+1) sqrt(radicand)
    return _v_from_root(1.0, r, roots)


def _lfun_circle(fam, phi, xi, center, radius, m, curve, p_max):
    path, roots, _ = _loop_roots(center, radius, m)
    pre = _v_prefactor(path, roots) / path
    a_diag, a_der, a_refl = _arith_parts(path, phi, curve, p_max)
    ip = 1j * phi
    # U_E = B(r) - C(r) exp(-2 i N_d phi)
    b = mixed_bracket(path, ip, 0.0, _zeta_one, _logderiv_one,
                      complex(specfun.gfun(ip)), a_diag, a_der, 0.0 * a_refl)
    c = b - mixed_bracket(path, ip, 0.0, _zeta_one, _logderiv_one,
                          complex(specfun.gfun(ip)), a_diag, a_der, a_refl)
    ln = numpy.log(fam.N_d)
    total = numpy.zeros(len(path), dtype=complex)
    for lo in range(0, len(fam.N_d), 4096):
        nd = fam.N_d[lo:lo + 4096]
        xd = xi[lo:lo + 4096]
        chi = numpy.array([_chi_term(v, phi) for v in nd])
        w = numpy.exp(-numpy.outer(path, xd)
                      + numpy.outer(0.5 * path * (path - 1), ln[lo:lo + 4096]))
        inner = (chi[None, :] + 2 * b[:, None]
                 - 2 * c[:, None] * numpy.exp(-2j * nd * phi)[None, :])
        total += (w * inner).sum(axis=1)
    vals = pre * total * (path - center)
    return vals.mean(), vals[::2].mean(), numpy.abs(vals).mean()


def _lfun_residue(fam, phi, xi, center, curve, p_max, radius=0.1, m=256,
                  rtol=1e-10):
    while True:
        full, half, size = _lfun_circle(fam, phi, xi, center, radius, m, curve,
                                        p_max)
        if abs(full - half) <= rtol * max(abs(full), 1e-3 * size, 1e-300):
            return full
        m *= 2
        if m > 4096:
            raise NonConvergence("L-function residue quadrature did not settle")


def _r0_direct(fam, phi, curve, p_max):
    # residue at r = 0: V(N, 0) = 1, so it is the bracket itself
    a_diag, a_der, a_refl = (complex(v) for v in _arith_parts(0.0, phi, curve,
                                                              p_max))
    ip = 1j * phi
    tot = 0j
    for n_d in fam.N_d:
        u = mixed_bracket(0.0, ip, n_d, _zeta_one, _logderiv_one,
                          complex(specfun.gfun(ip)), a_diag, a_der, a_refl)
        tot += _chi_term(n_d, phi) + 2 * complex(u)
    return tot


def excised_prediction_lfun(X, phi_grid, curve=E11A3, k_max=3,
                            p_max=DEFAULT_PMAX, kappa=None, return_terms=False):
    """
    Excised one-level density prediction: residues at ``r = 0`` and
    ``r = -(2k+1)/2`` for ``k = 0..k_max-1`` of

    .. math::

        \\sum_d \\big(-\\tfrac{\\mathcal{X}'}{\\mathcal{X}}(\\tfrac12 + i\\phi)
        + 2\\,\\mathcal{U}_E(\\mathcal{N}_d, r, \\phi)\\big)
        \\mathcal{V}(\\mathcal{N}_d, r)\\frac{e^{-\\xi_d r}}{r},
        \\qquad \\xi_d = \\log(\\kappa_E / \\sqrt{d}),

    divided by :math:`2\\pi`, real part. ``k_max`` counts the half-integer
    poles kept; ``k_max = 0`` keeps only ``r = 0``, evaluated directly from the
    bracket (an independent path from :func:`r0_density_lfun`).

    Parameters
    ----------
    X : float or TwistFamily
    phi_grid : array_like
        Points with ``phi != 0``.
    curve : CurveConfig
    k_max : int, default=3
        Poles ``r = -1/2, ..., -(2 k_max - 1)/2`` besides ``r = 0``.
    p_max : int
    kappa : float, optional
        Overrides ``curve.kappa_E``; required when ``k_max > 0``.
    return_terms : bool
        Also return the per-residue complex sums, shape ``(k_max + 1, grid)``.

    Raises
    ------
    ValueError
        If ``kappa`` is needed but missing.
    """

    fam = _family(X, curve)
    if int(k_max) != k_max or not 0 <= k_max <= 3:
        raise ValueError("k_max must be an integer in [0, 3]")
    kappa = curve.kappa_E if kappa is None else kappa
    if k_max > 0 and (kappa is None or not kappa > 0):
        raise ValueError("kappa_E is required for the higher residues")
    phi = numpy.asarray(phi_grid, dtype=float)
    xi = (numpy.log(kappa) - 0.5 * numpy.log(fam.d_list)) if k_max > 0 else None
    terms = numpy.zeros((k_max + 1, phi.size), dtype=complex)
    for i, ph in enumerate(phi.ravel()):
        if ph == 0:
            raise ValueError("phi = 0 is not supported; use r0_density_lfun")
        terms[0, i] = _r0_direct(fam, ph, curve, p_max)
        for k in range(k_max):
            terms[k + 1, i] = _lfun_residue(fam, ph, xi, -(2 * k + 1) / 2.0,
                                            curve, p_max)
    dens = terms.sum(axis=0).real.reshape(phi.shape) / (2 * numpy.pi)
    curve_out = DensityCurve(phi, dens, Normalization.RawCount)
    return (curve_out, terms) if return_terms else curve_out


# ----------------
# Zero data
# ----------------

@dataclass(frozen=True)
class ZeroDataset:
    """Records ``(d, gamma)`` of zero ordinates per discriminant."""

    d: numpy.ndarray = field(repr=False)
    gamma: numpy.ndarray = field(repr=False)

    def __len__(self):
        return len(self.d)


def ingest_zero_data(path):
    """
    Parse a ``d,gamma`` text file; blank lines and ``#`` lines are skipped.

    Raises
    ------
    ParseError
        With the offending line number.
    EmptyDataset
        If no records are present.
    """

    ds, gs = [], []
    with open(path, encoding="utf-8") as fh:
        for i, line in enumerate(fh, 1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            parts = s.split(",")
            if len(parts) != 2:
                raise ParseError(f"expected 'd,gamma', got {s!r}", line=i)
            try:
                d = int(parts[0])
                g = float(parts[1])
            except ValueError:
                raise ParseError(f"malformed record {s!r}", line=i) from None
            if not numpy.isfinite(g):
                raise ParseError("gamma must be finite", line=i)
            ds.append(d)
            gs.append(g)
    if not ds:
        raise EmptyDataset(f"no records in {path}")
    return ZeroDataset(numpy.array(ds, dtype=numpy.int64), numpy.array(gs))


def zero_histogram(dataset, bins, phi_max):
    """Unit-area histogram of the ordinates in ``(0, phi_max]``."""

    if bins < 1 or not phi_max > 0:
        raise ValueError("need bins >= 1 and phi_max > 0")
    g = dataset.gamma[(dataset.gamma > 0) & (dataset.gamma <= phi_max)]
    if g.size == 0:
        raise EmptyDataset("no ordinates in range")
    edges = numpy.linspace(0.0, phi_max, bins + 1)
    hist, _ = numpy.histogram(g, bins=edges)
    centres = 0.5 * (edges[1:] + edges[:-1])
    dens = hist / (g.size * (edges[1] - edges[0]))
    return DensityCurve(centres, unit_area(centres, dens), Normalization.UnitArea)
