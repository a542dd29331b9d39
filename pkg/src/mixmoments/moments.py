"""
Closed-form predictors and Monte Carlo estimators for mixed moments and
ratio averages of characteristic polynomials over SO(2N) and USp(2N).

Conventions
-----------
The mixed moment is

.. math::

    \\int -e^{-\\phi}\\, \\Lambda(1)^r\\,
    \\frac{\\Lambda'(e^{-\\phi})}{\\Lambda(e^{-\\phi})}\\, dA
    \\approx \\mathcal{V}(N, r)\\, \\mathcal{U}(N, r, \\phi),

with :math:`z(x) = 1/(1 - e^{-x})`. Square roots of Gamma and Barnes G
values use the logarithm that is continuous on :math:`\\mathrm{Re}(r) > 0`
and real on the positive axis; elsewhere :math:`\\mathcal{V}` is continued
analytically from there.

Variants
--------
``variant="printed"`` (the default) uses the next-order factors as printed.
``variant="consistent"`` uses ``r (r-1)^2 / (4N)`` for the SO(2N) moment
correction, which is what differentiating the ratio formula gives and what
the exact finite-N values follow. For USp(2N),
``variant="classical"`` replaces the printed constant
``2^{r(r-2)/2}`` by the classical ``2^{r^2/2}``.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy

from . import specfun
from .charpoly import log_lambda_1
from .errors import GuardError, PoleError
from .haar import EnsembleKind, SamplerConfig, SamplerMethod, sample_batch

__all__ = [
    "MomentSpec", "MCEstimate", "PredictionBreakdown", "predict_V",
    "log_V", "predict_V_usp", "predict_U_so", "predict_mixed_so",
    "predict_mixed_usp", "predict_ratio_so", "predict_moment_so",
    "mc_mixed_moment", "mc_ratio_moment", "mc_statistic",
    "v_radicand", "DEFAULT_CHUNK",
]

DEFAULT_CHUNK = 256
_HALF_INT_TOL = 1e-12
_CONT_STEP = 0.005


# ---------------
# Data carriers
# ---------------

@dataclass(frozen=True)
class MomentSpec:
    """Ensemble, half-dimension ``n``, power ``r`` and evaluation ``phi``."""

    ensemble: EnsembleKind
    n: int
    r: complex
    phi: complex

    def __post_init__(self):
        object.__setattr__(self, "ensemble", EnsembleKind.parse(self.ensemble))
        if self.n < 1:
            raise ValueError("n must be >= 1")


@dataclass(frozen=True)
class MCEstimate:
    """
    Complex sample mean with componentwise standard errors.

    Attributes
    ----------
    mean : complex
    stderr_re, stderr_im : float
        Sample standard deviation of each component over ``sqrt(count)``.
    count : int
    """

    mean: complex
    stderr_re: float
    stderr_im: float
    count: int

    def zscores(self, value):
        """
        Componentwise ``(re, im)`` distance to ``value`` in stderr units. A
        component with zero spread (a real statistic) counts as matching when
        the gap is at rounding level.
        """

        d = self.mean - complex(value)
        tiny = 1e-12 * max(abs(self.mean), abs(complex(value)), 1.0)

        def z(gap, err):
            if err > 0:
                return abs(gap) / err
            return 0.0 if abs(gap) <= tiny else numpy.inf

        return z(d.real, self.stderr_re), z(d.imag, self.stderr_im)

    def within(self, value, k):
        """True when both components lie within ``k`` standard errors."""

        return max(self.zscores(value)) <= k


@dataclass(frozen=True)
class PredictionBreakdown:
    """
    Analytic mixed moment split into its parts.

    ``total = v_factor * u_factor``, and ``u_factor = leading + correction +
    oscillatory`` where ``correction`` collects the 1/N terms of the
    non-oscillating part and ``oscillatory`` is the full
    :math:`e^{-2N\\phi}` term.
    """

    v_factor: complex
    u_factor: complex
    total: complex
    includes_next_order: bool
    leading: complex
    correction: complex
    oscillatory: complex


# ------------------------
# The V(N, r) prefactors
# ------------------------

def v_radicand(r):
    """
    :math:`\\Gamma(2r+1) / (G(2r+1)\\Gamma(r+1))`, the quantity under the
    square root in :math:`\\mathcal{V}(N, r)`.

    All its zeros and poles have even order, so its square root is
    single-valued (meromorphic) in ``r``.
    """

    r = numpy.asarray(r, dtype=complex)
    g = specfun.barnes_g(2.0 * r + 1.0)
    return specfun.gamma(2.0 * r + 1.0, pole_tol=0.0) * specfun.recip_gamma(
        r + 1.0) / g


def _continuation_path(r):
    """Polyline from r = 1 to ``r`` that keeps clear of the real axis."""

    r = complex(r)
    side = 1.0 if r.imag >= 0 else -1.0
    lift = side * max(0.5, abs(r.imag))
    corners = [1.0 + 0j, 1.0 + 1j * lift, r.real + 1j * lift, r]
    pts = [corners[0]]
    for a, b in zip(corners[:-1], corners[1:]):
        m = max(2, int(numpy.ceil(abs(b - a) / _CONT_STEP)))
        pts.extend(a + (b - a) * numpy.arange(1, m + 1) / m)
    return numpy.array(pts)


def sqrt_v_radicand(r):
    """
    Square root of :func:`v_radicand` on the branch that is positive on the
    positive real axis, continued analytically to any ``r`` away from the
    negative half-integers and integers.
    """

    r = complex(r)
    if r.real > -0.25:
        val = numpy.exp(0.5 * (specfun.loggamma(2 * r + 1)
                               - specfun.log_barnes_g(2 * r + 1)
                               - specfun.loggamma(r + 1)))
        return complex(val)
    path = _continuation_path(r)
    roots, _ = specfun.sqrt_continued(v_radicand(path), closed=False)
    return complex(roots[-1])


def _check_half_integer(r):
    r = complex(r)
    k = numpy.round(r.real - 0.5) + 0.5
    if k < 0 and abs(r - k) < _HALF_INT_TOL:
        raise PoleError("V(N, r) has a pole at negative half-integer r")


def log_V(n, r):
    """
    :math:`\\log\\mathcal{V}(N, r)` on :math:`\\mathrm{Re}(r) > -1/4`.
    """

    r = complex(r)
    return complex(0.5 * r * (r - 1) * numpy.log(n) + 0.5 * r * r * numpy.log(2)
                   + specfun.log_barnes_g(r + 1)
                   + 0.5 * specfun.loggamma(2 * r + 1)
                   - 0.5 * specfun.log_barnes_g(2 * r + 1)
                   - 0.5 * specfun.loggamma(r + 1))


def predict_V(n, r):
    """
    :math:`\\mathcal{V}(N,r) = N^{r(r-1)/2} 2^{r^2/2}
    \\frac{G(r+1)\\sqrt{\\Gamma(2r+1)}}{\\sqrt{G(2r+1)\\Gamma(r+1)}}`.

    Parameters
    ----------
    n : int or float
        Matrix half-dimension N (any positive real is accepted).
    r : complex

    Raises
    ------
    PoleError
        At negative half-integer ``r``.

    Examples
    --------
    >>> round(abs(predict_V(10, 2)), 10)
    40.0
    """

    r = complex(r)
    _check_half_integer(r)
    if r.real > -0.25:
        return complex(numpy.exp(log_V(n, r)))
    pre = numpy.exp(0.5 * r * (r - 1) * numpy.log(n) + 0.5 * r * r * numpy.log(2))
    return complex(pre * specfun.barnes_g(r + 1) * sqrt_v_radicand(r))


def predict_V_usp(n, r, variant="printed"):
    """
    Symplectic prefactor :math:`2^{r(r-2)/2} N^{r(r+1)/2}
    \\frac{G(r+1)\\sqrt{\\Gamma(r+1)}}{\\sqrt{G(2r+1)\\Gamma(2r+1)}}`.

    ``variant="classical"`` uses :math:`2^{r^2/2}` instead of
    :math:`2^{r(r-2)/2}`.
    """

    r = complex(r)
    if variant == "printed":
        two = 0.5 * r * (r - 2)
    elif variant == "classical":
        two = 0.5 * r * r
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return complex(numpy.exp(two * numpy.log(2) + 0.5 * r * (r + 1) * numpy.log(n)
                             + specfun.log_barnes_g(r + 1)
                             + 0.5 * specfun.loggamma(r + 1)
                             - 0.5 * specfun.log_barnes_g(2 * r + 1)
                             - 0.5 * specfun.loggamma(2 * r + 1)))


# ------------------------
# Bracket terms (U)
# ------------------------

def _moment_coeff(n, r, variant):
    if variant == "printed":
        return r * (r - 1) ** 2 / (2.0 * n)
    if variant == "consistent":
        return r * (r - 1) ** 2 / (4.0 * n)
    raise ValueError(f"unknown variant {variant!r}")


def _zpow_ratio(r, phi):
    """(z(-phi)/z(phi))^r as exp(r (log z(-phi) - log z(phi)))."""

    zp = specfun.zfun(phi)
    zm = specfun.zfun(-phi)
    return numpy.exp(r * (numpy.log(zm) - numpy.log(zp)))


def _u_so_parts(n, r, phi, variant="printed"):
    r = numpy.asarray(r, dtype=complex)
    phi = numpy.asarray(phi, dtype=complex)
    z = specfun.zfun
    zp, zm = z(phi), z(-phi)
    lead = r * zm - z(-2 * phi)
    corr = (lead * _moment_coeff(n, r, variant)
            - zp * zm * r * (r - 1) / (2.0 * n))
    osc0 = -numpy.exp(-2.0 * n * phi) * z(2 * phi) * _zpow_ratio(r, phi)
    osc1 = osc0 * r * (r - 1) / (2.0 * n) * (zp - zm + (r - 1) / 2.0)
    return lead, corr, osc0, osc1


def predict_U_so(n, r, phi, next_order=True, variant="printed"):
    """
    The SO(2N) bracket :math:`\\mathcal{U}(N, r, \\phi)`.

    .. math::

        (r z(-\\phi) - z(-2\\phi))(1 + \\tfrac{r(r-1)^2}{2N})
        - z(\\phi)z(-\\phi)\\tfrac{r(r-1)}{2N}
        - e^{-2N\\phi} z(2\\phi)\\frac{z(-\\phi)^r}{z(\\phi)^r}
          \\Big(1 + \\tfrac{r(r-1)}{2N}(z(\\phi) - z(-\\phi)
          + \\tfrac{r-1}{2})\\Big)

    Broadcasts over array ``r`` and ``phi``.

    Parameters
    ----------
    n : int
    r, phi : complex or array_like
    next_order : bool, default=True
        Include the 1/N terms.
    variant : {"printed", "consistent"}
    """

    lead, corr, osc0, osc1 = _u_so_parts(n, r, phi, variant)
    out = lead + osc0
    if next_order:
        out = out + corr + osc1
    return out[()] if numpy.ndim(out) == 0 else out


def predict_mixed_so(n, r, phi, next_order=True, variant="printed"):
    """
    :math:`\\mathcal{V}(N,r)\\,\\mathcal{U}(N,r,\\phi)`, the predicted
    :math:`\\int -e^{-\\phi}\\Lambda(1)^r\\Lambda'/\\Lambda(e^{-\\phi})\\,dA`
    over SO(2N).

    Examples
    --------
    >>> b = predict_mixed_so(100, 1, 2 + 3.5j)
    >>> round(b.total.real, 6), round(b.total.imag, 7)
    (0.255807, -0.0993974)
    """

    v = predict_V(n, r)
    lead, corr, osc0, osc1 = (complex(x) for x in _u_so_parts(n, r, phi, variant))
    if not next_order:
        corr, osc1 = 0.0, 0.0
    u = lead + corr + osc0 + osc1
    return PredictionBreakdown(v, u, v * u, next_order, lead, corr, osc0 + osc1)


def predict_mixed_usp(n, r, phi, next_order=True, variant="printed"):
    """
    Symplectic analogue of :func:`predict_mixed_so`:

    .. math::

        (2z(2\\phi)z(-2\\phi) + r z(-\\phi) - z(-2\\phi))
        (1 + \\tfrac{r(r-1)(r+1)}{2N})
        - z(2\\phi)z(\\phi)z(-\\phi)\\tfrac{r(r+1)}{2N}
        + e^{-2N\\phi} z(2\\phi)z(-2\\phi)\\frac{z(-\\phi)^r}{z(\\phi)^r}
          \\Big(1 + \\tfrac{r(r+1)}{2N}(z(\\phi) - z(-\\phi)
          + \\tfrac{r+1}{2})\\Big)

    times :func:`predict_V_usp`.
    """

    r = complex(r)
    phi = complex(phi)
    z = specfun.zfun
    zp, zm, z2p, z2m = (complex(z(x)) for x in (phi, -phi, 2 * phi, -2 * phi))
    lead = 2 * z2p * z2m + r * zm - z2m
    corr = (lead * r * (r - 1) * (r + 1) / (2.0 * n)
            - z2p * zp * zm * r * (r + 1) / (2.0 * n))
    osc0 = numpy.exp(-2.0 * n * phi) * z2p * z2m * complex(_zpow_ratio(r, phi))
    osc1 = osc0 * r * (r + 1) / (2.0 * n) * (zp - zm + (r + 1) / 2.0)
    if not next_order:
        corr, osc1 = 0.0, 0.0
    v = predict_V_usp(n, r, variant)
    u = lead + corr + osc0 + osc1
    return PredictionBreakdown(v, u, v * u, next_order, lead, corr, osc0 + osc1)


def predict_ratio_so(n, r, alpha, gamma, guard=1e-8):
    """
    Leading plus next-order prediction of
    :math:`\\int\\Lambda(1)^r\\Lambda(e^{-\\alpha})/\\Lambda(e^{-\\gamma})\\,dA`
    over SO(2N):

    .. math::

        \\mathcal{V}(N,r)\\Big[
        \\frac{z(2\\gamma)z(\\alpha)^r}{z(\\alpha+\\gamma)z(\\gamma)^r}
        \\Big(1 + \\tfrac{r(r-1)}{2N}(z(-\\alpha) - z(-\\gamma)
        + \\tfrac{r-1}{2})\\Big)
        + e^{-2N\\alpha}
        \\frac{z(2\\gamma)z(-\\alpha)^r}{z(-\\alpha+\\gamma)z(\\gamma)^r}
        \\Big(1 + \\tfrac{r(r-1)}{2N}(z(\\alpha) - z(-\\gamma)
        + \\tfrac{r-1}{2})\\Big)\\Big]

    Raises
    ------
    GuardError
        If ``|alpha - gamma| < guard``; use :func:`predict_moment_so` or the
        mixed-moment predictor there.
    """

    r, a, g = complex(r), complex(alpha), complex(gamma)
    if abs(a - g) < guard:
        raise GuardError("alpha and gamma coincide; the ratio form is singular")
    z = lambda x: complex(specfun.zfun(x))
    lz = lambda x: numpy.log(z(x))
    c = r * (r - 1) / (2.0 * n)
    t1 = (z(2 * g) / z(a + g) * numpy.exp(r * (lz(a) - lz(g)))
          * (1 + c * (z(-a) - z(-g) + (r - 1) / 2)))
    t2 = (numpy.exp(-2.0 * n * a) * z(2 * g) / z(g - a)
          * numpy.exp(r * (lz(-a) - lz(g)))
          * (1 + c * (z(a) - z(-g) + (r - 1) / 2)))
    return complex(predict_V(n, r) * (t1 + t2))


def predict_moment_so(n, r, variant="printed"):
    """
    :math:`\\mathcal{V}(N, r)(1 + r(r-1)^2/(2N))`, the SO(2N) moment of
    :math:`\\Lambda(1)^r` to next order.

    Examples
    --------
    >>> predict_moment_so(50, 1)
    (2.0000000000000004+0j)
    """

    r = complex(r)
    return complex(predict_V(n, r) * (1 + _moment_coeff(n, r, variant)))


# ---------------
# Monte Carlo
# ---------------

class _Accumulator:
    """Streaming mean and second moments, merged with Chan's formula."""

    def __init__(self, count=0, mean=0j, m2re=0.0, m2im=0.0):
        self.count, self.mean, self.m2re, self.m2im = count, mean, m2re, m2im

    @classmethod
    def of(cls, x):
        x = numpy.asarray(x, dtype=complex)
        if x.size == 0:
            return cls()
        m = x.mean()
        return cls(x.size, complex(m), float(((x.real - m.real) ** 2).sum()),
                   float(((x.imag - m.imag) ** 2).sum()))

    def merge(self, other):
        if other.count == 0:
            return self
        if self.count == 0:
            return other
        n = self.count + other.count
        d = other.mean - self.mean
        mean = self.mean + d * other.count / n
        w = self.count * other.count / n
        return _Accumulator(n, mean, self.m2re + other.m2re + d.real ** 2 * w,
                            self.m2im + other.m2im + d.imag ** 2 * w)

    def estimate(self):
        if self.count < 2:
            raise ValueError("need at least two samples")
        n = self.count
        return MCEstimate(self.mean, float(numpy.sqrt(self.m2re / (n - 1) / n)),
                          float(numpy.sqrt(self.m2im / (n - 1) / n)), n)


def mc_statistic(kind, n, fn, n_samples, cfg=None, chunk=DEFAULT_CHUNK,
                 threads=1):
    """
    Monte Carlo mean of ``fn(angles)`` over Haar samples.

    Parameters
    ----------
    kind : EnsembleKind or str
    n : int
    fn : callable
        Maps a ``(batch, n)`` angle array to ``(values, valid)`` where
        invalid entries are rejected and replaced by further draws.
    n_samples : int
    cfg : SamplerConfig, optional
    chunk : int
        Samples per chunk. Chunks are keyed by index, and partial results
        are merged in chunk order, so the estimate is independent of
        ``threads``.
    threads : int

    Returns
    -------
    MCEstimate
    """

    cfg = cfg or SamplerConfig()
    if cfg.method is SamplerMethod.JpdfMcmc:
        chunk = max(chunk, n_samples)

    def run(start, count):
        ang = sample_batch(kind, n, cfg, start, count)
        vals, ok = fn(ang)
        return numpy.asarray(vals, dtype=complex)[ok]

    acc = _Accumulator()
    start = 0
    pool = ThreadPoolExecutor(threads) if threads > 1 else None
    try:
        while acc.count < n_samples:
            need = n_samples - acc.count
            nchunks = -(-need // chunk)
            starts = [start + i * chunk for i in range(nchunks)]
            counts = [min(chunk, need - i * chunk) for i in range(nchunks)]
            if pool is None:
                results = map(run, starts, counts)
            else:
                results = pool.map(run, starts, counts)
            for vals in results:
                acc = acc.merge(_Accumulator.of(vals))
            start += need
    finally:
        if pool is not None:
            pool.shutdown()
    return acc.estimate()


def _mixed_values(r, phi):
    r = complex(r)
    s = numpy.exp(-complex(phi))

    def fn(ang):
        logl, bad = log_lambda_1(ang, return_flag=True)
        c = numpy.cos(ang)
        ld = ((2.0 * s - 2.0 * c) / (1.0 - 2.0 * s * c + s * s)).sum(axis=1)
        return -s * numpy.exp(r * logl) * ld, ~bad
    return fn


def mc_mixed_moment(spec, n_samples, cfg=None, chunk=DEFAULT_CHUNK, threads=1):
    """
    Monte Carlo estimate of
    :math:`\\int -e^{-\\phi}\\Lambda(1)^r\\Lambda'(e^{-\\phi})/
    \\Lambda(e^{-\\phi})\\,dA`.

    Samples whose :math:`\\log\\Lambda(1)` underflows are rejected and
    replaced.
    """

    if n_samples < 100:
        raise ValueError("n_samples must be >= 100")
    return mc_statistic(spec.ensemble, spec.n, _mixed_values(spec.r, spec.phi),
                        n_samples, cfg, chunk, threads)


def mc_ratio_moment(ensemble, n, k, alpha, gamma, n_samples, cfg=None,
                    chunk=DEFAULT_CHUNK, threads=1):
    """
    Monte Carlo estimate of
    :math:`\\int\\Lambda(1)^{K-1}\\Lambda(e^{-\\alpha})/\\Lambda(e^{-\\gamma})
    \\,dA` for integer ``k >= 1``.
    """

    if int(k) != k or k < 1:
        raise ValueError("k must be an integer >= 1")
    if complex(gamma).real <= 0:
        raise ValueError("need Re(gamma) > 0")
    sa = numpy.exp(-complex(alpha))
    sg = numpy.exp(-complex(gamma))

    def fn(ang):
        logl, bad = log_lambda_1(ang, return_flag=True)
        c = numpy.cos(ang)
        lr = (numpy.log(1 - 2 * sa * c + sa * sa)
              - numpy.log(1 - 2 * sg * c + sg * sg)).sum(axis=1)
        return numpy.exp((k - 1) * logl + lr), ~bad

    return mc_statistic(ensemble, n, fn, n_samples, cfg, chunk, threads)
