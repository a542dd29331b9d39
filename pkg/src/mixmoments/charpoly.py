"""
Characteristic polynomial :math:`\\Lambda(s) = \\prod_j (1 - s e^{-i\\theta_j})
(1 - s e^{i\\theta_j})` evaluated from eigenangles.

Functions accept a :class:`~mixmoments.haar.SpectrumSample` or a raw array of
angles. Arrays of shape ``(batch, n)`` are handled row-wise.
"""

import numpy

from .errors import DegenerateSpectrum, NearEigenvalue

__all__ = [
    "lambda_at", "log_lambda_1", "log_deriv", "lambda_pow", "LOG_FLOOR",
]

LOG_FLOOR = -700.0
EIGEN_TOL = 1e-10
ZERO_ANGLE_TOL = 1e-12


def _angles(sample):
    return numpy.asarray(getattr(sample, "angles", sample), dtype=float)


def lambda_at(sample, s):
    """
    :math:`\\Lambda(s)`, accumulated as a sum of logarithms with one final
    exponential.

    Examples
    --------
    >>> import numpy
    >>> complex(lambda_at([numpy.pi / 2], 1.0))
    (2.0000000000000004+0j)
    """

    th = _angles(sample)
    s = complex(s)
    e = numpy.exp(1j * th)
    with numpy.errstate(divide="ignore"):
        logs = numpy.log(1.0 - s * e.conj()) + numpy.log(1.0 - s * e)
    return numpy.exp(logs.sum(axis=-1))


def log_lambda_1(sample, floor=LOG_FLOOR, return_flag=False):
    """
    :math:`\\log\\Lambda(1) = \\sum_j \\log(2 - 2\\cos\\theta_j)`.

    Parameters
    ----------
    sample : SpectrumSample or array_like
    floor : float, default=-700
        Value returned where some angle is within 1e-12 of zero.
    return_flag : bool, default=False
        If true, return ``(value, degenerate_mask)`` instead of raising.

    Raises
    ------
    DegenerateSpectrum
        If an angle is within 1e-12 of zero and ``return_flag`` is false.
    """

    th = _angles(sample)
    bad = (numpy.abs(th) < ZERO_ANGLE_TOL).any(axis=-1)
    # 2 - 2 cos t = 4 sin^2(t/2), accurate for small t
    with numpy.errstate(divide="ignore"):
        val = numpy.log(4.0 * numpy.sin(0.5 * th) ** 2).sum(axis=-1)
    val = numpy.where(bad, floor, val)
    if return_flag:
        return val, bad
    if numpy.any(bad):
        raise DegenerateSpectrum("eigenangle at 0; log Lambda(1) diverges")
    return val[()] if numpy.ndim(val) == 0 else val


def log_deriv(sample, s):
    """
    :math:`\\Lambda'(s)/\\Lambda(s) = \\sum_j (2s - 2\\cos\\theta_j) /
    (1 - 2s\\cos\\theta_j + s^2)`.

    Raises
    ------
    NearEigenvalue
        If ``s`` is within 1e-10 of some :math:`e^{\\pm i\\theta_j}`.

    Examples
    --------
    >>> import numpy
    >>> complex(log_deriv([numpy.pi / 2], 2.0))
    (0.8+0j)
    """

    th = _angles(sample)
    s = complex(s)
    e = numpy.exp(1j * th)
    if numpy.any(numpy.minimum(numpy.abs(s - e), numpy.abs(s - e.conj()))
                 < EIGEN_TOL):
        raise NearEigenvalue("log derivative requested at an eigenvalue")
    c = numpy.cos(th)
    return ((2.0 * s - 2.0 * c) / (1.0 - 2.0 * s * c + s * s)).sum(axis=-1)


def lambda_pow(sample, r):
    """
    :math:`\\Lambda(1)^r = \\exp(r \\log\\Lambda(1))` with the real logarithm.

    Raises
    ------
    DegenerateSpectrum
        Propagated from :func:`log_lambda_1`.
    """

    return numpy.exp(complex(r) * log_lambda_1(sample))
