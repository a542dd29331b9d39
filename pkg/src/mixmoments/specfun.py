"""
Complex special functions: Gamma, digamma, Barnes G, Riemann zeta and the
z-function used throughout the moment formulas.

All functions accept scalars or array_like input and broadcast with numpy.
Scalar input gives a numpy complex scalar back.
"""

from dataclasses import dataclass
from math import factorial

import numpy

from .errors import PoleError, ZeroOnPath

__all__ = [
    "POLE_TOL", "ZERO_FLOOR", "EULER_GAMMA", "ComplexPath",
    "gamma", "loggamma", "recip_gamma", "digamma", "barnes_g",
    "log_barnes_g", "zeta", "zeta_prime", "zeta_regular",
    "zeta_prime_regular", "zfun", "xzfun", "gfun", "double_factorial",
    "sqrt_continued",
]

# Default tolerances (overridable per call).
POLE_TOL = 1e-12
ZERO_FLOOR = 1e-300

EULER_GAMMA = 0.57721566490153286061
_LOG_2PI = 1.8378770664093454836
_ZETA_PRIME_MINUS_ONE = -0.16542114370045092921

# Lanczos coefficients, g = 7, n = 9.
_LANCZOS_G = 7.0
_LANCZOS_P = numpy.array([
    0.99999999999980993227684700473478,
    676.520368121885098567009190444019,
    -1259.13921672240287047156078755283,
    771.3234287776530788486528258894,
    -176.61502916214059906584551354,
    12.507343278686904814458936853,
    -0.13857109526572011689554707,
    9.984369578019570859563e-6,
    1.50563273514931155834e-7,
])

# Bernoulli numbers B_2, B_4, ..., B_20.
_BERNOULLI = numpy.array([
    1.0 / 6, -1.0 / 30, 1.0 / 42, -1.0 / 30, 5.0 / 66, -691.0 / 2730,
    7.0 / 6, -3617.0 / 510, 43867.0 / 798, -174611.0 / 330,
])


def _as_complex(z):
    arr = numpy.asarray(z, dtype=complex)
    return arr, arr.ndim == 0


def _ret(arr, scalar):
    return arr[()] if scalar else arr


def _near_nonpositive_integer(z, tol):
    k = numpy.round(z.real)
    return (k <= 0) & (numpy.abs(z - k) < tol)


# ---------
# Gamma
# ---------

def _loggamma_right(z):
    """Lanczos log-Gamma, valid for Re(z) >= 0.5."""

    zm = z - 1.0
    x = numpy.full(z.shape, _LANCZOS_P[0], dtype=complex)
    for i in range(1, len(_LANCZOS_P)):
        x = x + _LANCZOS_P[i] / (zm + i)
    t = zm + _LANCZOS_G + 0.5
    return 0.5 * _LOG_2PI + (zm + 0.5) * numpy.log(t) - t + numpy.log(x)


def loggamma(z, pole_tol=POLE_TOL):
    """
    Logarithm of the Gamma function.

    Parameters
    ----------
    z : complex or array_like
        Argument.
    pole_tol : float, default=1e-12
        Distance to a non-positive integer that counts as a pole.

    Returns
    -------
    complex or numpy.ndarray
        A logarithm of :math:`\\Gamma(z)`. The branch is continuous on
        :math:`\\mathrm{Re}(z) > 0`; to the left of that line it is only
        guaranteed that ``exp`` of the result is :math:`\\Gamma(z)`.

    Raises
    ------
    PoleError
        If any ``z`` lies within ``pole_tol`` of a non-positive integer.
    """

    z, scalar = _as_complex(z)
    if numpy.any(_near_nonpositive_integer(z, pole_tol)):
        raise PoleError("loggamma evaluated at a pole")
    out = numpy.empty(z.shape, dtype=complex)
    right = z.real >= 0.5
    out[right] = _loggamma_right(z[right])
    left = ~right
    if numpy.any(left):
        zl = z[left]
        out[left] = (numpy.log(numpy.pi) - numpy.log(numpy.sin(numpy.pi * zl))
                     - _loggamma_right(1.0 - zl))
    return _ret(out, scalar)


def gamma(z, pole_tol=POLE_TOL):
    """
    Gamma function for complex arguments.

    Uses a Lanczos approximation for :math:`\\mathrm{Re}(z) \\ge 1/2` and the
    reflection formula elsewhere.

    Parameters
    ----------
    z : complex or array_like
        Argument.
    pole_tol : float, default=1e-12
        Distance to a non-positive integer that counts as a pole.

    Returns
    -------
    complex or numpy.ndarray
        :math:`\\Gamma(z)`.

    Raises
    ------
    PoleError
        If any ``z`` lies within ``pole_tol`` of a non-positive integer.

    Examples
    --------
    >>> gamma(4.0)
    np.complex128(6.000000000000001+0j)
    """

    z, scalar = _as_complex(z)
    if numpy.any(_near_nonpositive_integer(z, pole_tol)):
        raise PoleError("gamma evaluated at a pole")
    out = numpy.empty(z.shape, dtype=complex)
    right = z.real >= 0.5
    out[right] = numpy.exp(_loggamma_right(z[right]))
    left = ~right
    if numpy.any(left):
        zl = z[left]
        out[left] = numpy.pi / (numpy.sin(numpy.pi * zl)
                                * numpy.exp(_loggamma_right(1.0 - zl)))
    return _ret(out, scalar)


def recip_gamma(z):
    """
    Reciprocal Gamma function :math:`1/\\Gamma(z)`, an entire function.

    Returns exactly zero at non-positive integers.
    """

    z, scalar = _as_complex(z)
    out = numpy.empty(z.shape, dtype=complex)
    right = z.real >= 0.5
    out[right] = numpy.exp(-_loggamma_right(z[right]))
    left = ~right
    if numpy.any(left):
        zl = z[left]
        out[left] = (numpy.sin(numpy.pi * zl)
                     * numpy.exp(_loggamma_right(1.0 - zl)) / numpy.pi)
    exact = (z.imag == 0) & (z.real <= 0) & (z.real == numpy.round(z.real))
    out[exact] = 0.0
    return _ret(out, scalar)


def digamma(z, pole_tol=POLE_TOL):
    """
    Digamma function :math:`\\Psi(z) = \\Gamma'(z)/\\Gamma(z)`.

    Recurrence up to :math:`\\mathrm{Re}(z) \\ge 10`, then the asymptotic
    series; reflection for :math:`\\mathrm{Re}(z) < 1/2`.

    Raises
    ------
    PoleError
        At non-positive integers.
    """

    z, scalar = _as_complex(z)
    if numpy.any(_near_nonpositive_integer(z, pole_tol)):
        raise PoleError("digamma evaluated at a pole")
    left = z.real < 0.5
    w = numpy.where(left, 1.0 - z, z)
    acc = numpy.zeros(z.shape, dtype=complex)
    for _ in range(12):
        m = w.real < 10.0
        if not numpy.any(m):
            break
        acc = acc - numpy.where(m, 1.0 / w, 0.0)
        w = numpy.where(m, w + 1.0, w)
    inv2 = 1.0 / (w * w)
    series = numpy.zeros(z.shape, dtype=complex)
    powk = numpy.ones(z.shape, dtype=complex)
    for k in range(1, 9):
        powk = powk * inv2
        series = series + _BERNOULLI[k - 1] / (2 * k) * powk
    psi = numpy.log(w) - 0.5 / w - series + acc
    if numpy.any(left):
        psi = numpy.where(left, psi - numpy.pi / numpy.tan(numpy.pi * z), psi)
    return _ret(psi, scalar)


# ----------
# Barnes G
# ----------

_G_SHIFT = 12.0


def _log_barnes_g_asym(w):
    """Asymptotic expansion of log G(w + 1) for large |w|."""

    logw = numpy.log(w)
    w2 = w * w
    out = (0.5 * w2 * logw - 0.75 * w2 + 0.5 * w * _LOG_2PI - logw / 12.0
           + _ZETA_PRIME_MINUS_ONE)
    inv2 = 1.0 / w2
    powk = numpy.ones(w.shape, dtype=complex)
    for k in range(1, 9):
        powk = powk * inv2
        out = out + _BERNOULLI[k] / (4.0 * k * (k + 1)) * powk
    return out


def _shift_count(z):
    return numpy.maximum(numpy.ceil(_G_SHIFT - z.real), 0).astype(int)


def log_barnes_g(z):
    """
    Logarithm of the Barnes G-function.

    Evaluated by the asymptotic expansion at :math:`\\mathrm{Re}(z) \\ge 12`
    and brought down by :math:`\\log G(z) = \\log G(z+1) - \\log\\Gamma(z)`.
    The branch is continuous on :math:`\\mathrm{Re}(z) > 0`.

    Raises
    ------
    PoleError
        At the zeros of :math:`G` (non-positive integers).
    """

    z, scalar = _as_complex(z)
    m = _shift_count(z)
    out = numpy.array(_log_barnes_g_asym(z + m - 1.0), dtype=complex)
    for j in range(int(m.max()) if m.size else 0):
        mask = j < m
        if numpy.any(mask):
            out[mask] = out[mask] - loggamma(z[mask] + j)
    return _ret(out, scalar)


def barnes_g(z):
    """
    Barnes G-function, :math:`G(z+1) = \\Gamma(z) G(z)`, :math:`G(1) = 1`.

    Parameters
    ----------
    z : complex or array_like
        Argument.

    Returns
    -------
    complex or numpy.ndarray
        :math:`G(z)`; exactly zero at non-positive integers.

    Examples
    --------
    >>> abs(barnes_g(4.0) - 2) < 1e-12
    np.True_
    """

    z, scalar = _as_complex(z)
    m = _shift_count(z)
    out = numpy.array(numpy.exp(_log_barnes_g_asym(z + m - 1.0)), dtype=complex)
    for j in range(int(m.max()) if m.size else 0):
        mask = j < m
        if numpy.any(mask):
            out[mask] = out[mask] * recip_gamma(z[mask] + j)
    return _ret(out, scalar)


# ---------------
# Riemann zeta
# ---------------

def _g2(y):
    """(1 - e^{-y}(1 + y)) / y^2, stable near y = 0."""

    out = numpy.empty(y.shape, dtype=complex)
    small = numpy.abs(y) < 0.1
    ys = y[small]
    acc = numpy.zeros(ys.shape, dtype=complex)
    for n in range(13, 1, -1):
        acc = acc * ys + (-1) ** n * (n - 1) / factorial(n)
    out[small] = acc
    yl = y[~small]
    out[~small] = (1.0 - numpy.exp(-yl) * (1.0 + yl)) / (yl * yl)
    return out


def _zeta_regular_parts(s):
    """
    Euler-Maclaurin evaluation of the parts of zeta and zeta' that are
    analytic at s = 1: zeta(s) - 1/(s-1) and zeta'(s) + 1/(s-1)^2.
    """

    n_cut = max(20, int(numpy.ceil(3.0 + numpy.abs(s.imag).max(initial=0.0))))
    logn_cut = numpy.log(n_cut)
    n = numpy.arange(1, n_cut, dtype=float)
    logn = numpy.log(n)
    terms = numpy.exp(-numpy.multiply.outer(s, logn))
    val = terms.sum(axis=-1)
    der = -(terms * logn).sum(axis=-1)

    x = s - 1.0
    y = x * logn_cut
    safe_x = numpy.where(x == 0, 1.0, x)
    pole_part = numpy.where(x == 0, -logn_cut, numpy.expm1(-y) / safe_x)
    val = val + pole_part
    der = der + logn_cut ** 2 * _g2(y)

    n_s = numpy.exp(-s * logn_cut)
    val = val + 0.5 * n_s
    der = der - 0.5 * logn_cut * n_s

    # Bernoulli corrections: B_{2k}/(2k)! * s(s+1)...(s+2k-2) * N^{-s-2k+1}
    poly = s.copy()
    dpoly = numpy.ones(s.shape, dtype=complex)
    npow = n_s / n_cut
    for k in range(1, len(_BERNOULLI) + 1):
        c = _BERNOULLI[k - 1] / factorial(2 * k)
        val = val + c * poly * npow
        der = der + c * (dpoly - logn_cut * poly) * npow
        a, b = s + 2 * k - 1, s + 2 * k
        dpoly = dpoly * a * b + poly * (a + b)
        poly = poly * a * b
        npow = npow / (n_cut * n_cut)
    return val, der


def _check_zeta_pole(s, tol):
    if numpy.any(numpy.abs(s - 1.0) < tol):
        raise PoleError("zeta evaluated at s = 1")


def zeta(s, pole_tol=POLE_TOL):
    """
    Riemann zeta function by Euler-Maclaurin summation.

    The direct sum runs to ``max(20, ceil(3 + |Im s|))`` and the Bernoulli
    corrections go through :math:`B_{20}`. Intended for
    :math:`\\mathrm{Re}(s) \\ge 1/2`, :math:`|\\mathrm{Im}(s)| \\le 100`.

    Raises
    ------
    PoleError
        At ``s = 1``.
    """

    s, scalar = _as_complex(s)
    _check_zeta_pole(s, pole_tol)
    val, _ = _zeta_regular_parts(s.reshape(-1))
    val = (val + 1.0 / (s.reshape(-1) - 1.0)).reshape(s.shape)
    return _ret(val, scalar)


def zeta_prime(s, pole_tol=POLE_TOL):
    """
    Derivative :math:`\\zeta'(s)` from the differentiated Euler-Maclaurin
    formula.

    Raises
    ------
    PoleError
        At ``s = 1``.
    """

    s, scalar = _as_complex(s)
    _check_zeta_pole(s, pole_tol)
    flat = s.reshape(-1)
    _, der = _zeta_regular_parts(flat)
    der = (der - 1.0 / (flat - 1.0) ** 2).reshape(s.shape)
    return _ret(der, scalar)


def zeta_regular(s):
    """:math:`\\zeta(s) - 1/(s-1)`, analytic at ``s = 1``."""

    s, scalar = _as_complex(s)
    val, _ = _zeta_regular_parts(s.reshape(-1))
    return _ret(val.reshape(s.shape), scalar)


def zeta_prime_regular(s):
    """:math:`\\zeta'(s) + 1/(s-1)^2`, analytic at ``s = 1``."""

    s, scalar = _as_complex(s)
    _, der = _zeta_regular_parts(s.reshape(-1))
    return _ret(der.reshape(s.shape), scalar)


# ------------------------
# z-function and friends
# ------------------------

def _check_lattice(x, tol):
    k = numpy.round(x.imag / (2.0 * numpy.pi))
    if numpy.any(numpy.abs(x - 2j * numpy.pi * k) < tol):
        raise PoleError("zfun evaluated on the lattice 2*pi*i*k")


def zfun(x, pole_tol=1e-8):
    """
    :math:`z(x) = 1/(1 - e^{-x})`.

    Raises
    ------
    PoleError
        Within ``pole_tol`` of :math:`2\\pi i k`.

    Examples
    --------
    >>> zfun(1j * numpy.pi)
    np.complex128(0.5+0j)
    """

    x, scalar = _as_complex(x)
    _check_lattice(x, pole_tol)
    return _ret(-1.0 / numpy.expm1(-x), scalar)


def xzfun(x):
    """
    :math:`x\\,z(x)`, analytic at the origin with value 1.

    A Taylor series is used for :math:`|x| < 10^{-3}`.
    """

    x, scalar = _as_complex(x)
    out = numpy.empty(x.shape, dtype=complex)
    small = numpy.abs(x) < 1e-3
    xs = x[small]
    x2 = xs * xs
    out[small] = 1.0 + xs / 2.0 + x2 / 12.0 - x2 * x2 / 720.0 + x2 ** 3 / 30240.0
    xl = x[~small]
    out[~small] = -xl / numpy.expm1(-xl)
    return _ret(out, scalar)


def gfun(s):
    """
    :math:`g(s) = \\Gamma(1-s)/\\Gamma(1+s)`.

    Raises
    ------
    PoleError
        At ``s`` a positive integer.
    """

    s, scalar = _as_complex(s)
    return _ret(gamma(1.0 - s) * recip_gamma(1.0 + s), scalar)


def double_factorial(n):
    """
    Double factorial ``n!!`` with ``0!! = (-1)!! = 1``.

    Examples
    --------
    >>> double_factorial(7)
    105
    """

    n = int(n)
    if n < -1:
        raise ValueError("double factorial undefined below -1")
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


# ---------------------------
# Branch-tracked square root
# ---------------------------

@dataclass(frozen=True)
class ComplexPath:
    """
    Equally spaced points on a circle, the first at angle zero.

    Attributes
    ----------
    center : complex
    radius : float
    points : numpy.ndarray
    """

    center: complex
    radius: float
    points: numpy.ndarray

    @classmethod
    def circle(cls, center, radius, count):
        if count < 16 or count % 2:
            raise ValueError("circle needs an even point count >= 16")
        if radius <= 0:
            raise ValueError("radius must be positive")
        theta = 2.0 * numpy.pi * numpy.arange(count) / count
        return cls(complex(center), float(radius),
                   complex(center) + radius * numpy.exp(1j * theta))


def sqrt_continued(path_values, closed=True, zero_floor=ZERO_FLOOR):
    """
    Square roots continued along a path of values.

    The argument is unwrapped cumulatively so consecutive outputs never jump
    by a sign. Consecutive inputs must differ in argument by less than
    :math:`\\pi`.

    Parameters
    ----------
    path_values : array_like
        Ordered complex values along the path.
    closed : bool, default=True
        Treat the path as a loop whose last point is followed by the first.
        The closure residual then compares the root continued back to the
        start with the root the path started from. For an open path the
        residual compares the last and the first root directly.
    zero_floor : float, default=1e-300
        Moduli below this count as zero.

    Returns
    -------
    roots : numpy.ndarray
        Continued square roots, ``roots[0]`` is the principal root.
    closure_residual : float
        ``|continued - first| / |first|``; about 0 when the branch closes and
        about 2 when it flips sign.

    Raises
    ------
    ZeroOnPath
        If some value has modulus below ``zero_floor``.

    Examples
    --------
    >>> theta = numpy.linspace(0, 2 * numpy.pi, 65)[:-1]
    >>> _, res = sqrt_continued(numpy.exp(1j * theta))
    >>> round(res, 6)
    2.0
    """

    v = numpy.asarray(path_values, dtype=complex).reshape(-1)
    if v.size == 0:
        return v, 0.0
    mod = numpy.abs(v)
    if numpy.any(mod < zero_floor):
        raise ZeroOnPath("square root continued through zero")
    seq = numpy.append(v, v[0]) if closed else v
    phase = numpy.unwrap(numpy.angle(seq))
    roots = numpy.sqrt(numpy.abs(seq)) * numpy.exp(0.5j * phase)
    residual = float(abs(roots[-1] - roots[0]) / abs(roots[0]))
    if closed:
        roots = roots[:-1]
    return roots, residual
