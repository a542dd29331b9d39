"""
Exact finite-N ensemble averages through Heine's identity.

For a class function :math:`\\prod_j f(\\theta_j)` the SO(2N) and USp(2N)
averages are ratios of N x N Gram determinants of Chebyshev-type bases:

.. math::

    \\mathbb{E}\\Big[\\prod_j f(\\theta_j)\\Big]
    = \\frac{\\det[\\int_0^\\pi b_i b_j f\\, d\\theta]}
           {\\det[\\int_0^\\pi b_i b_j\\, d\\theta]},

with :math:`b_i = \\cos(i\\theta)` for SO(2N) and
:math:`b_i = \\sin((i+1)\\theta)` for USp(2N). A linear statistic is
obtained by differentiating :math:`f e^{t h}` at :math:`t = 0`, which gives
the trace term :math:`\\mathrm{tr}(G_f^{-1} H)`.

This is an independent oracle for Monte Carlo and contour results; it is
deterministic and its error is controlled by the quadrature order.
"""

import numpy
from numpy.polynomial.legendre import leggauss

from .haar import EnsembleKind
from .errors import NonConvergence

__all__ = [
    "exact_mixed_moment", "exact_moment", "exact_ratio",
    "exact_linear_statistic",
]

_MAP_POWER = 6


def _nodes(count):
    # theta = pi * s^m clusters nodes at theta = 0 where (2 - 2 cos)^r is
    # not smooth for non-integer r
    s, w = leggauss(count)
    s = 0.5 * (s + 1.0)
    w = 0.5 * w
    th = numpy.pi * s ** _MAP_POWER
    return th, numpy.pi * _MAP_POWER * s ** (_MAP_POWER - 1) * w


def _basis(kind, n, th):
    idx = numpy.arange(n)
    if kind is EnsembleKind.SpecialOrthogonalEven:
        return numpy.cos(numpy.outer(idx, th))
    return numpy.sin(numpy.outer(idx + 1, th))


def _evaluate(kind, n, logf, h, count):
    th, w = _nodes(count)
    b = _basis(kind, n, th)
    lf = logf(th)
    f = numpy.exp(lf)
    g0 = (b * w) @ b.T
    gf = (b * (w * f)) @ b.T
    sign_f, log_f = numpy.linalg.slogdet(gf)
    sign_0, log_0 = numpy.linalg.slogdet(g0)
    mean = sign_f / sign_0 * numpy.exp(log_f - log_0)
    if h is None:
        return mean
    hm = (b * (w * f * h(th))) @ b.T
    return mean * numpy.trace(numpy.linalg.solve(gf, hm))


def _refined(fn, count, rtol):
    a = fn(count)
    b = fn(2 * count)
    if abs(b - a) > rtol * max(abs(b), 1e-300):
        c = fn(4 * count)
        if abs(c - b) > rtol * max(abs(c), 1e-300):
            raise NonConvergence("Heine quadrature did not settle")
        return c
    return b


def _default_count(n):
    return max(400, 12 * n)


def exact_linear_statistic(kind, n, logf, h=None, count=None, rtol=1e-9):
    """
    Exact :math:`\\mathbb{E}[\\prod_j f(\\theta_j) \\sum_j h(\\theta_j)]`, or
    :math:`\\mathbb{E}[\\prod_j f(\\theta_j)]` when ``h`` is None.

    Parameters
    ----------
    kind : EnsembleKind or str
    n : int
    logf : callable
        Vectorised :math:`\\log f(\\theta)` on :math:`[0, \\pi]`.
    h : callable, optional
        Vectorised :math:`h(\\theta)`.
    count : int, optional
        Quadrature nodes; doubled until the result settles to ``rtol``.
    rtol : float, default=1e-9
        Raised to the rounding floor ``1e-12 n^3`` of the Gram determinants
        when that is larger.
    """

    kind = EnsembleKind.parse(kind)
    count = count or _default_count(n)
    return complex(_refined(lambda c: _evaluate(kind, n, logf, h, c),
                            count, max(rtol, 1e-12 * n ** 3)))


def _log_lambda1_weight(r):
    r = complex(r)

    def logf(th):
        with numpy.errstate(divide="ignore"):
            return r * numpy.log(4.0 * numpy.sin(0.5 * th) ** 2)
    return logf


def exact_moment(kind, n, r, **kw):
    """Exact :math:`\\mathbb{E}[\\Lambda(1)^r]`."""

    return exact_linear_statistic(kind, n, _log_lambda1_weight(r), **kw)


def exact_mixed_moment(kind, n, r, phi, **kw):
    """
    Exact :math:`\\mathbb{E}[-e^{-\\phi}\\Lambda(1)^r
    \\Lambda'(e^{-\\phi})/\\Lambda(e^{-\\phi})]`.
    """

    s = numpy.exp(-complex(phi))

    def h(th):
        c = numpy.cos(th)
        return -s * (2.0 * s - 2.0 * c) / (1.0 - 2.0 * s * c + s * s)

    return exact_linear_statistic(kind, n, _log_lambda1_weight(r), h, **kw)


def exact_ratio(kind, n, r, alpha, gamma, **kw):
    """
    Exact :math:`\\mathbb{E}[\\Lambda(1)^r \\Lambda(e^{-\\alpha}) /
    \\Lambda(e^{-\\gamma})]`.
    """

    sa = numpy.exp(-complex(alpha))
    sg = numpy.exp(-complex(gamma))
    base = _log_lambda1_weight(r)

    def logf(th):
        c = numpy.cos(th)
        return (base(th) + numpy.log(1.0 - 2.0 * sa * c + sa * sa)
                - numpy.log(1.0 - 2.0 * sg * c + sg * sg))

    return exact_linear_statistic(kind, n, logf, **kw)
