"""
One-level density of the excised orthogonal ensemble: SO(2N) restricted to
matrices with :math:`\\log\\Lambda(1) > \\chi`.

The analytic density is a sum of residues in ``r`` of

.. math::

    F(r) = \\frac{e^{-\\chi r}}{r}\\,\\mathcal{V}(N, r)
    \\big(2N(1 + \\tfrac{r(r-1)^2}{2N}) + 2\\,\\mathcal{U}(N, r, i\\phi)\\big),

taken at ``r = 0`` and at the negative half-integers. The residue at zero
gives the full SO(2N) density; the others come from the poles of
:math:`\\sqrt{\\Gamma(2r+1)/G(2r+1)}`, evaluated here by trapezoid
quadrature on small circles with the square root carried around the loop.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum

import numpy

from . import specfun
from .charpoly import log_lambda_1
from .errors import BranchNotClosed, NonConvergence, PoleError, TooFewAccepted
from .haar import EnsembleKind, SamplerConfig, SamplerMethod, sample_batch
from .moments import predict_U_so, sqrt_v_radicand, v_radicand

__all__ = [
    "Normalization", "ExcisedConfig", "DensityCurve", "ResidueTerm",
    "r0_density", "excised_integrand", "residue_at", "residue_at_point",
    "excised_density_series", "mc_excised_density", "unit_area",
    "BRANCH_TOL", "MIN_ACCEPTED",
]

BRANCH_TOL = 1e-6
MIN_ACCEPTED = 100
DEFAULT_RADIUS = 0.1
DEFAULT_POINTS = 256
_MAX_POINTS = 4096


class Normalization(Enum):
    UnitArea = "unit_area"
    RawCount = "raw"


@dataclass(frozen=True)
class ExcisedConfig:
    """
    Attributes
    ----------
    n : int
        Half the matrix dimension.
    chi : float
        Cut-off; matrices with :math:`\\log\\Lambda(1) \\le \\chi` are removed.
    bins : int
        Histogram bins on (0, pi).
    n_samples : int
        Haar draws before excision.
    phi_grid : tuple of float, optional
        Evaluation grid for series curves; defaults to the bin centres.
    """

    n: int
    chi: float
    bins: int = 100
    n_samples: int = 10_000
    phi_grid: tuple = None

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.bins < 10:
            raise ValueError("bins must be >= 10")
        if self.phi_grid is not None:
            g = numpy.asarray(self.phi_grid, dtype=float)
            if numpy.any((g <= 0) | (g >= numpy.pi)):
                raise ValueError("phi_grid must lie in (0, pi)")
            object.__setattr__(self, "phi_grid", tuple(g))

    def grid(self):
        if self.phi_grid is not None:
            return numpy.asarray(self.phi_grid)
        edges = numpy.linspace(0.0, numpy.pi, self.bins + 1)
        return 0.5 * (edges[1:] + edges[:-1])


@dataclass(frozen=True)
class ResidueTerm:
    """
    Residue of the density integrand at ``r = -(2k+1)/2`` (``k_index = k``)
    or at ``r = 0`` (``k_index = -1``) on a grid of ``phi``.
    """

    k_index: int
    values: numpy.ndarray = field(repr=False)
    chi_factor: float = 1.0


@dataclass(frozen=True)
class DensityCurve:
    """
    Attributes
    ----------
    phi : numpy.ndarray
    density : numpy.ndarray
    normalization : Normalization
    terms : tuple of ResidueTerm
        Residue terms that built the curve (series curves only).
    flagged : int
        Samples whose :math:`\\log\\Lambda(1)` underflowed (MC curves only).
    """

    phi: numpy.ndarray = field(repr=False)
    density: numpy.ndarray = field(repr=False)
    normalization: Normalization = Normalization.RawCount
    terms: tuple = ()
    flagged: int = 0

    def area(self):
        return float(numpy.trapezoid(self.density, self.phi))


def unit_area(phi, values):
    """Scale ``values`` so its trapezoid integral over ``phi`` is one."""

    values = numpy.asarray(values, dtype=float)
    area = numpy.trapezoid(values, phi)
    if not area > 0:
        raise ValueError("curve has non-positive area")
    return values / area


# ----------------
# Analytic side
# ----------------

def r0_density(n, phi):
    """
    Full SO(2N) one-level density
    :math:`(2N - 1 + \\sin((2N-1)\\phi)/\\sin\\phi)/(2\\pi)`, with the limit
    ``(4N - 2)/(2 pi)`` at multiples of pi.

    Examples
    --------
    >>> round(r0_density(1, 0.7) * numpy.pi, 12)
    1.0
    """

    phi = numpy.asarray(phi, dtype=float)
    m = 2 * n - 1
    s = numpy.sin(phi)
    small = numpy.abs(s) < 1e-12
    safe = numpy.where(small, 1.0, s)
    # near phi = k pi the Dirichlet kernel tends to m * cos(k pi)^(m-1) = m
    ratio = numpy.where(small, m * numpy.cos(phi) ** (m - 1),
                        numpy.sin(m * phi) / safe)
    out = (m + ratio) / (2.0 * numpy.pi)
    return out[()] if out.ndim == 0 else out


def _bracket(n, r, phi, variant):
    """2N(1 + r(r-1)^2/(2N)) + 2 U(N, r, i phi), broadcasting r against phi."""

    c = 2.0 if variant == "printed" else 4.0
    return (2.0 * n * (1.0 + r * (r - 1) ** 2 / (c * n))
            + 2.0 * predict_U_so(n, r, 1j * phi, variant=variant))


def _v_from_root(n, r, root):
    return (numpy.exp(0.5 * r * (r - 1) * numpy.log(n)
                      + 0.5 * r * r * numpy.log(2.0))
            * specfun.barnes_g(r + 1.0) * root)


def excised_integrand(n, chi, r, phi, variant="printed", root=None):
    """
    :math:`F(r) = e^{-\\chi r}/r \\cdot \\mathcal{V}(N,r)\\,
    (2N(1 + r(r-1)^2/(2N)) + 2\\mathcal{U}(N,r,i\\phi))`.

    Parameters
    ----------
    n : int
    chi : float
    r : complex
    phi : float or array_like
    variant : {"printed", "consistent"}
    root : complex, optional
        Square root of :func:`~mixmoments.moments.v_radicand` at ``r`` on
        the wanted branch; by default the continuation from ``r = 1``.

    Raises
    ------
    PoleError
        At ``r = 0`` or a negative half-integer.
    """

    r = complex(r)
    if abs(r) < specfun.POLE_TOL:
        raise PoleError("integrand has a pole at r = 0")
    k = numpy.round(r.real - 0.5) + 0.5
    if k < 0 and abs(r - k) < specfun.POLE_TOL:
        raise PoleError("integrand has a pole at negative half-integer r")
    if root is None:
        root = sqrt_v_radicand(r)
    v = complex(_v_from_root(n, r, root))
    out = numpy.exp(-chi * r) / r * v * _bracket(n, r, numpy.asarray(phi), variant)
    return out[()] if numpy.ndim(out) == 0 else out


def _loop_roots(center, radius, m):
    path = specfun.ComplexPath.circle(center, radius, m).points
    roots, residual = specfun.sqrt_continued(v_radicand(path), closed=True)
    if residual > BRANCH_TOL:
        raise BranchNotClosed(
            f"square root does not close around r = {center} "
            f"(residual {residual:.3g})")
    anchor = sqrt_v_radicand(path[0])
    if abs(roots[0] + anchor) < abs(roots[0] - anchor):
        roots = -roots
    return path, roots, residual


def _loop_sums(n, chi, phi, center, radius, m, variant):
    path, roots, residual = _loop_roots(center, radius, m)
    v = _v_from_root(n, path, roots)
    br = _bracket(n, path[:, None], phi[None, :], variant)
    vals = (numpy.exp(-chi * path) / path * v)[:, None] * br
    # residue = (1/2 pi i) * loop integral = mean of f(r) (r - c)
    vals = vals * (path - center)[:, None]
    full = vals.mean(axis=0)
    half = vals[::2].mean(axis=0)
    return full, half, residual, numpy.abs(vals).mean(axis=0)


def residue_at_point(n, chi, phi, center, radius=DEFAULT_RADIUS,
                     circle_points=DEFAULT_POINTS, variant="printed", rtol=1e-10,
                     return_residual=False):
    """
    Residue of :func:`excised_integrand` at ``center`` by trapezoid
    quadrature on a circle, with the square root continued around the loop.

    Parameters
    ----------
    n : int
    chi : float
    phi : float or array_like
    center : complex
    radius : float, default=0.1
    circle_points : int, default=256
        Doubled until the result and its half-grid estimate agree.
    variant : {"printed", "consistent"}
    rtol : float
        Relative to ``max(|residue|)`` over the grid, with a floor of 1e-3
        times the mean integrand size on the circle so that vanishing
        residues still settle.
    return_residual : bool
        Also return the branch closure residual.

    Raises
    ------
    BranchNotClosed
        If the continued square root does not return to its start (residual
        above 1e-6).
    NonConvergence
    """

    phi_arr = numpy.atleast_1d(numpy.asarray(phi, dtype=float))
    m = circle_points
    while True:
        full, half, residual, size = _loop_sums(
            n, chi, phi_arr, complex(center), radius, m, variant)
        scale = max(numpy.abs(full).max(), 1e-3 * size.max(), 1e-300)
        if numpy.abs(full - half).max() <= rtol * scale:
            break
        m *= 2
        if m > _MAX_POINTS:
            raise NonConvergence("residue quadrature did not settle")
    out = full if numpy.ndim(phi) else full[0]
    return (out, residual) if return_residual else out


def residue_at(n, chi, phi, k, circle_points=DEFAULT_POINTS, variant="printed",
               radius=DEFAULT_RADIUS, return_residual=False):
    """
    Residue of :func:`excised_integrand` at ``r = -(2k+1)/2``.

    Examples
    --------
    >>> v = residue_at(12, 0.0, 1.0, 0)
    >>> bool(numpy.isfinite(v))
    True
    """

    if int(k) != k or not 0 <= k <= 8:
        raise ValueError("k must be an integer in [0, 8]")
    return residue_at_point(n, chi, phi, -(2 * k + 1) / 2.0, radius,
                            circle_points, variant,
                            return_residual=return_residual)


def _r0_term(n, phi, variant):
    # residue at r = 0 in closed form: V(N, 0) = 1 and 1/r is simple
    return 2.0 * n + 2.0 * predict_U_so(n, 0.0, 1j * numpy.asarray(phi),
                                        variant=variant)


def excised_density_series(n, chi, phi_grid, k_max=3, normalize=False,
                           variant="printed"):
    """
    Residue-series density
    :math:`\\frac{1}{2\\pi}\\mathrm{Re}[\\mathrm{res}_0 +
    \\sum_{k=0}^{k_{max}}\\mathrm{res}_{-(2k+1)/2}]`.

    Parameters
    ----------
    n : int
    chi : float
    phi_grid : array_like
        Points in (0, pi).
    k_max : int, default=3
    normalize : bool
        Scale to unit trapezoid area over the grid.
    variant : {"printed", "consistent"}

    Returns
    -------
    DensityCurve
    """

    if int(k_max) != k_max or not -1 <= k_max <= 8:
        raise ValueError("k_max must be an integer in [-1, 8]")
    phi = numpy.asarray(phi_grid, dtype=float)
    terms = [ResidueTerm(-1, numpy.asarray(_r0_term(n, phi, variant)), 1.0)]
    for k in range(int(k_max) + 1):
        terms.append(ResidueTerm(k, numpy.asarray(
            residue_at(n, chi, phi, k, variant=variant)),
            float(numpy.exp((k + 0.5) * chi))))
    total = sum(t.values for t in terms)
    dens = total.real / (2.0 * numpy.pi)
    norm = Normalization.RawCount
    if normalize:
        dens = unit_area(phi, dens)
        norm = Normalization.UnitArea
    return DensityCurve(phi, dens, norm, tuple(terms))


# ----------------
# Monte Carlo
# ----------------

def mc_excised_density(cfg, sampler=None, chunk=1024, threads=1,
                       normalize=True):
    """
    Histogram of eigenangles over matrices with :math:`\\log\\Lambda(1) >
    \\chi`.

    Parameters
    ----------
    cfg : ExcisedConfig
    sampler : SamplerConfig, optional
    chunk : int
        Samples per chunk; counts are summed in chunk order.
    threads : int
    normalize : bool, default=True
        Unit trapezoid area over the bin centres; otherwise counts per unit
        angle per accepted matrix.

    Returns
    -------
    curve : DensityCurve
        Evaluated at the bin centres.
    acceptance_rate : float

    Raises
    ------
    TooFewAccepted
        Fewer than 100 matrices pass the cut.
    """

    if cfg.n_samples < 10_000:
        raise ValueError("n_samples must be >= 10000")
    sampler = sampler or SamplerConfig()
    if sampler.method is SamplerMethod.JpdfMcmc:
        chunk = cfg.n_samples
    edges = numpy.linspace(0.0, numpy.pi, cfg.bins + 1)

    def run(start):
        count = min(chunk, cfg.n_samples - start)
        ang = sample_batch(EnsembleKind.SpecialOrthogonalEven, cfg.n, sampler,
                           start, count)
        logl, bad = log_lambda_1(ang, return_flag=True)
        keep = (logl > cfg.chi) & ~bad
        hist, _ = numpy.histogram(ang[keep].ravel(), bins=edges)
        return hist, int(keep.sum()), int(bad.sum())

    starts = range(0, cfg.n_samples, chunk)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(run, starts))
    else:
        results = [run(s) for s in starts]
    hist = numpy.zeros(cfg.bins, dtype=numpy.int64)
    accepted = flagged = 0
    for h, a, b in results:
        hist += h
        accepted += a
        flagged += b
    if accepted < MIN_ACCEPTED:
        raise TooFewAccepted(f"only {accepted} matrices passed the cut")
    centres = 0.5 * (edges[1:] + edges[:-1])
    width = edges[1] - edges[0]
    dens = hist / (accepted * width)
    norm = Normalization.RawCount
    if normalize:
        dens = unit_area(centres, dens)
        norm = Normalization.UnitArea
    curve = DensityCurve(centres, dens, norm, (), flagged)
    return curve, accepted / cfg.n_samples
