"""
Numerical evaluation of the multiple contour integrals for SO(2N) ratio
averages, their decomposition over pole assignments, and the M and J
integrals that govern the one-pole contribution.

All contours are circles, integrated with the tensor-product trapezoid rule,
which converges geometrically for integrands analytic near the circles. The
product :math:`\\prod_{j<k} z(w_j + w_k)\\,\\Delta(w^2)^2` is always evaluated
in the grouped form :math:`\\prod_{j<k} x z(x)|_{x = w_j + w_k}
(w_k - w_j)^2 (w_k + w_j)`, so the removable singularities at
:math:`w_j = -w_k` never divide by small numbers.
"""

import itertools
from dataclasses import dataclass
from math import factorial

import numpy

from . import specfun
from .errors import NonConvergence, PoleError

__all__ = [
    "NestedContourSpec", "PoleAssignment", "ratios_integrand_so",
    "nested_contour_integral", "ratios_contour_so", "ratios_coefficient",
    "residue_decomposition_so", "m_integral", "j_integral",
    "moment_contour_so", "default_spec",
]

DEFAULT_POINTS = 256
MIN_POINTS = 64
_CHUNK = 1 << 18
_MAX_GRID = 1 << 27


@dataclass(frozen=True)
class NestedContourSpec:
    """
    Concentric circles about ``center``; ``radii[i]`` carries ``w_{i+1}``.

    Attributes
    ----------
    radii : tuple of float
        Strictly decreasing, so the ``w_i`` circle encloses ``w_j`` for
        ``j > i``.
    center : complex
    points_per_circle : int
    """

    radii: tuple
    center: complex = 0j
    points_per_circle: int = DEFAULT_POINTS

    def __post_init__(self):
        radii = tuple(float(r) for r in self.radii)
        object.__setattr__(self, "radii", radii)
        if not radii or any(r <= 0 for r in radii):
            raise ValueError("radii must be positive")
        if any(a <= b for a, b in zip(radii[:-1], radii[1:])):
            raise ValueError("radii must be strictly decreasing")
        if self.points_per_circle < MIN_POINTS:
            raise ValueError(f"points_per_circle must be >= {MIN_POINTS}")

    @property
    def k(self):
        return len(self.radii)


@dataclass(frozen=True)
class PoleAssignment:
    """Which pole (0, +alpha or -alpha) each variable's small circle encloses."""

    epsilon: tuple
    circle_radius: float

    def __post_init__(self):
        object.__setattr__(self, "epsilon",
                           tuple(complex(e) for e in self.epsilon))
        if self.circle_radius <= 0:
            raise ValueError("circle_radius must be positive")

    @property
    def off_zero(self):
        """Number of variables circling a pole away from zero."""

        return sum(1 for e in self.epsilon if e != 0)


def default_spec(k, alpha, points_per_circle=DEFAULT_POINTS):
    """Radii ``(0.9, 0.7, 0.5)[:k] * (2|alpha| + 0.5)``."""

    if not 1 <= k <= 3:
        raise ValueError("default radii are defined for k <= 3")
    big = 2.0 * abs(complex(alpha)) + 0.5
    return NestedContourSpec(tuple(f * big for f in (0.9, 0.7, 0.5)[:k]),
                             0j, points_per_circle)


# -------------------
# Integrand pieces
# -------------------

def _pair_product(w):
    """Grouped prod_{j<k} z(w_j+w_k) Delta(w^2)^2 for rows of ``w``."""

    k = w.shape[-1]
    out = numpy.ones(w.shape[:-1], dtype=complex)
    for j in range(k):
        for m in range(j + 1, k):
            s = w[..., j] + w[..., m]
            d = w[..., m] - w[..., j]
            out = out * specfun.xzfun(s) * d * d * s
    return out


def ratios_coefficient(n, k, alpha, gamma):
    """
    :math:`e^{-N\\alpha}(-1)^{K(K-1)/2}2^K z(2\\gamma)/((2\\pi i)^K K!)`.
    """

    sign = -1 if (k * (k - 1) // 2) % 2 else 1
    return complex(numpy.exp(-n * complex(alpha)) * sign * 2.0 ** k
                   * specfun.zfun(2 * complex(gamma))
                   / ((2j * numpy.pi) ** k * factorial(k)))


def _ratios_raw(w, n, k, alpha, gamma):
    w = numpy.asarray(w, dtype=complex)
    a, g = complex(alpha), complex(gamma)
    per = (numpy.exp(n * w) * w ** (3 - 2 * k) * (1.0 - numpy.exp(-(w + g)))
           / ((w - a) * (w + a)))
    return _pair_product(w) * per.prod(axis=-1)


def ratios_integrand_so(w, n, k, alpha, gamma):
    """
    Full ratios integrand including the coefficient ``C``:

    .. math::

        C \\prod_{j<k} z(w_j + w_k)\\,\\Delta(w_1^2,\\dots,w_K^2)^2
        \\prod_n \\frac{e^{N w_n} w_n^{3-2K}}
        {z(w_n + \\gamma)(w_n - \\alpha)(w_n + \\alpha)}

    Parameters
    ----------
    w : array_like
        Shape ``(..., k)``.

    Raises
    ------
    PoleError
        If some ``w_i`` is at 0 or at ``+-alpha``.
    """

    w = numpy.asarray(w, dtype=complex)
    if w.shape[-1] != k:
        raise ValueError("last axis of w must have length k")
    a = complex(alpha)
    if numpy.any(numpy.minimum.reduce([abs(w), abs(w - a), abs(w + a)])
                 < specfun.POLE_TOL):
        raise PoleError("integrand evaluated on a pole")
    return ratios_coefficient(n, k, alpha, gamma) * _ratios_raw(w, n, k,
                                                                alpha, gamma)


# -------------------
# Quadrature
# -------------------

def _circle_sums(f, centers, radii, m):
    """
    Trapezoid sums on the product of circles with ``m`` points each, and the
    same sum restricted to the even sub-grid (``m/2`` points each), and
    a rounding floor proportional to the L1 norm of the summands.
    """

    k = len(radii)
    if m ** k > _MAX_GRID:
        raise NonConvergence("quadrature grid too large")
    t = numpy.exp(2j * numpy.pi * numpy.arange(m) / m)
    pts = [c + r * t for c, r in zip(centers, radii)]
    jac = [r * t * (2j * numpy.pi / m) for r in radii]
    total = 0j
    half = 0j
    l1 = 0.0
    size = m ** k
    for lo in range(0, size, _CHUNK):
        idx = numpy.unravel_index(numpy.arange(lo, min(lo + _CHUNK, size)),
                                  (m,) * k)
        w = numpy.stack([pts[i][idx[i]] for i in range(k)], axis=-1)
        wt = numpy.prod([jac[i][idx[i]] for i in range(k)], axis=0)
        v = f(w) * wt
        even = numpy.all([ix % 2 == 0 for ix in idx], axis=0)
        total += v.sum()
        half += v[even].sum()
        l1 += numpy.abs(v).sum()
    return total, half * 2 ** k, 4 * numpy.finfo(float).eps * l1


def _adaptive(f, centers, radii, m, rtol, atol, max_points):
    while True:
        full, half, floor = _circle_sums(f, centers, radii, m)
        if abs(full - half) <= max(rtol * abs(full), atol, floor):
            return complex(full)
        if 2 * m > max_points:
            raise NonConvergence(
                f"contour quadrature unsettled at {m} points per circle "
                f"(change {abs(full - half):.3g})")
        m *= 2


def nested_contour_integral(integrand, spec, rtol=1e-10, atol=0.0,
                            max_points=1024):
    """
    :math:`\\oint\\cdots\\oint f(w_1,\\dots,w_K)\\,dw_1\\cdots dw_K` over the
    circles of ``spec``, without the :math:`(2\\pi i)^{-K}` factor.

    The result at ``m`` points is compared with the sub-grid result at
    ``m/2``; ``m`` doubles until they agree.

    Parameters
    ----------
    integrand : callable
        Maps an array of shape ``(P, K)`` to ``(P,)``.
    spec : NestedContourSpec
    rtol, atol : float
    max_points : int

    Raises
    ------
    NonConvergence

    Examples
    --------
    >>> s = NestedContourSpec((1.0,), points_per_circle=64)
    >>> v = nested_contour_integral(lambda w: 1 / w[:, 0], s)
    >>> abs(v - 2j * numpy.pi) < 1e-12
    True
    """

    centers = [complex(spec.center)] * spec.k
    return _adaptive(integrand, centers, spec.radii, spec.points_per_circle,
                     rtol, atol, max_points)


def _check_ratio_args(k, alpha, gamma, spec):
    if int(k) != k or not 1 <= k <= 3:
        raise ValueError("k must be 1, 2 or 3")
    if complex(gamma).real <= 0:
        raise ValueError("need Re(gamma) > 0")
    if spec.k != k:
        raise ValueError("spec must carry k radii")
    if min(spec.radii) <= abs(complex(alpha)):
        raise ValueError("every radius must exceed |alpha|")
    if 2 * max(spec.radii) >= 2 * numpy.pi:
        raise ValueError("radii must keep w_j + w_k off the z-pole lattice")


def ratios_contour_so(n, k, alpha, gamma, spec=None, rtol=1e-10):
    """
    Exact finite-N value of
    :math:`\\int_{SO(2N)}\\Lambda(1)^{K-1}\\Lambda(e^{-\\alpha})/
    \\Lambda(e^{-\\gamma})\\,dA` from the nested contour integral.

    Cancellation grows like :math:`e^{N(R - \\mathrm{Re}\\,\\alpha)}` for
    outer radius R, so large ``n`` is better served by
    :func:`residue_decomposition_so`.

    Examples
    --------
    >>> round(abs(ratios_contour_so(4, 1, 0.3, 0.3, default_spec(1, 0.3, 64))), 10)
    1.0
    """

    spec = spec or default_spec(k, alpha)
    _check_ratio_args(k, alpha, gamma, spec)
    raw = nested_contour_integral(
        lambda w: _ratios_raw(w, n, k, alpha, gamma), spec, rtol)
    return ratios_coefficient(n, k, alpha, gamma) * raw


def residue_decomposition_so(n, k, alpha, gamma, circle_radius=None,
                             points_per_circle=MIN_POINTS, rtol=1e-12):
    """
    Split the ratios integral into the :math:`3^K` terms in which variable
    ``i`` runs over a small circle about ``epsilon_i`` in ``{0, alpha, -alpha}``.

    Parameters
    ----------
    n, k : int
    alpha, gamma : complex
    circle_radius : float, optional
        Defaults to ``|alpha| / 4``; must be below ``|alpha| / 2``.
    points_per_circle : int
    rtol : float
        Relative accuracy per term, measured against the largest term.

    Returns
    -------
    dict
        ``PoleAssignment -> complex``, each value including the coefficient C.
    """

    a = complex(alpha)
    if abs(a) == 0:
        raise ValueError("alpha must be nonzero")
    if int(k) != k or not 1 <= k <= 3:
        raise ValueError("k must be 1, 2 or 3")
    rho = abs(a) / 4 if circle_radius is None else float(circle_radius)
    if not 0 < rho < abs(a) / 2:
        raise ValueError("circle_radius must lie in (0, |alpha|/2)")
    coeff = ratios_coefficient(n, k, alpha, gamma)

    def f(w):
        return _ratios_raw(w, n, k, alpha, gamma)

    raw = {}
    for eps in itertools.product((0j, a, -a), repeat=k):
        raw[eps] = _circle_sums(f, eps, [rho] * k, points_per_circle)
    scale = max(abs(v[0]) for v in raw.values())
    out = {}
    for eps, (full, half, floor) in raw.items():
        m = points_per_circle
        while abs(full - half) > max(rtol * scale, floor):
            m *= 2
            if m > 1024:
                raise NonConvergence("pole-assignment quadrature unsettled")
            full, half, floor = _circle_sums(f, eps, [rho] * k, m)
        out[PoleAssignment(eps, rho)] = coeff * complex(full)
    return out


# -------------------
# M, J and moments
# -------------------

def _mj_raw(w, extra_sum):
    k = w.shape[-1] + 1
    out = numpy.ones(w.shape[:-1], dtype=complex)
    for j in range(k - 1):
        for m in range(j + 1, k - 1):
            d = w[..., m] - w[..., j]
            out = out * d * d * (w[..., m] + w[..., j])
    out = out * numpy.exp(w.sum(axis=-1)) * (w ** (3 - 2 * k)).prod(axis=-1)
    if extra_sum:
        out = out * w.sum(axis=-1)
    return out


def _mj(k, extra_sum):
    if int(k) != k or not 2 <= k <= 6:
        raise ValueError("k must be an integer in [2, 6]")
    k = int(k)
    radii = [1.0] * (k - 1)
    f = lambda w: _mj_raw(w, extra_sum)
    # e^{sum w} times a Laurent polynomial: aliasing at m points is of
    # order 1/m!, so two small non-nested grids give a reliable check
    lo, _, _ = _circle_sums(f, [0j] * (k - 1), radii, 20)
    hi, _, _ = _circle_sums(f, [0j] * (k - 1), radii, 24)
    if abs(hi - lo) > max(1e-12 * abs(hi), 1e-13 * (2 * numpy.pi) ** (k - 1)):
        raise NonConvergence("M/J quadrature unsettled")
    return complex(hi)


def m_integral(k):
    """
    :math:`\\oint\\cdots\\oint \\prod_{j<l}(w_l - w_j)^2(w_l + w_j)
    e^{\\sum w}\\prod w^{3-2K}\\,dw` over ``K-1`` variables.

    Examples
    --------
    >>> abs(m_integral(2) - 2j * numpy.pi) < 1e-12
    True
    """

    return _mj(k, False)


def j_integral(k):
    """:func:`m_integral` with an extra factor :math:`\\sum_m w_m`."""

    return _mj(k, True)


def moment_contour_so(n, k):
    """
    Exact :math:`\\int_{SO(2N)}\\Lambda(1)^{K-1}\\,dA` from its
    ``(K-1)``-fold contour integral about zero.

    Examples
    --------
    >>> round(moment_contour_so(7, 2).real, 10)
    2.0
    """

    if int(k) != k or not 1 <= k <= 4:
        raise ValueError("k must be an integer in [1, 4]")
    k = int(k)
    if k == 1:
        return 1.0 + 0j
    sign = -1 if ((k - 1) * (k - 2) // 2) % 2 else 1
    pre = sign * 2.0 ** (k - 1) / ((2j * numpy.pi) ** (k - 1) * factorial(k - 1))
    # saddle of e^{N w} w^{3-2K} sits at |w| = (2K-3)/N
    rho = min(1.0, (2 * k - 3) / n)

    def f(w):
        per = numpy.exp(n * w) * w ** (3 - 2 * k)
        return _pair_product(w) * per.prod(axis=-1)

    val = _adaptive(f, [0j] * (k - 1), [rho] * (k - 1), 64, 1e-11, 0.0, 512)
    return complex(pre * val)
