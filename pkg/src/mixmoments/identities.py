"""
Exact checks of the reciprocal-Gamma determinant identities behind the
one-pole contribution to the SO(2N) ratios sum.

All determinants are evaluated over the rationals with fraction-free
(Bareiss) elimination. Values that carry a power of :math:`2\\pi i` are
returned as :class:`TwoPiIMultiple`.
"""

from dataclasses import dataclass
from fractions import Fraction
from math import factorial, prod

import numpy

from . import specfun

__all__ = [
    "TwoPiIMultiple", "recip_gamma_int", "bareiss_det", "m_matrix",
    "j_matrix", "all_zero_matrix", "m_gamma_det", "m_closed_form",
    "m_barnes_form", "j_gamma_det", "interesting_det_relation_check",
    "vandermondian_check", "all_zero_det_check", "MAX_K",
]

MAX_K = 40


@dataclass(frozen=True)
class TwoPiIMultiple:
    """
    ``coefficient * (2 pi i) ** power`` with an exact rational coefficient.

    Examples
    --------
    >>> TwoPiIMultiple(Fraction(-2), 2) == m_gamma_det(3)
    True
    """

    coefficient: Fraction
    power: int

    def __complex__(self):
        return complex(float(self.coefficient) * (2j * numpy.pi) ** self.power)

    def __truediv__(self, other):
        if not isinstance(other, TwoPiIMultiple) or other.power != self.power:
            return NotImplemented
        return self.coefficient / other.coefficient

    def scaled(self, factor):
        return TwoPiIMultiple(self.coefficient * Fraction(factor), self.power)


def recip_gamma_int(m):
    """Exact :math:`1/\\Gamma(m)` for integer ``m``; zero when ``m <= 0``."""

    m = int(m)
    return Fraction(0) if m <= 0 else Fraction(1, factorial(m - 1))


def bareiss_det(rows):
    """
    Determinant of a square matrix of rationals by fraction-free elimination.

    Examples
    --------
    >>> bareiss_det([[1, 1], [1, 4]])
    Fraction(3, 1)
    """

    a = [[Fraction(x) for x in row] for row in rows]
    n = len(a)
    if any(len(row) != n for row in a):
        raise ValueError("matrix must be square")
    if n == 0:
        return Fraction(1)
    sign = 1
    prev = Fraction(1)
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
            if swap is None:
                return Fraction(0)
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def _check_k(k, lo=2, hi=MAX_K):
    if int(k) != k or not lo <= k <= hi:
        raise ValueError(f"k must be an integer in [{lo}, {hi}]")
    return int(k)


def m_matrix(k):
    """(K-1) x (K-1) matrix with entries ``1/Gamma(2K-3-(i-1)-2(j-1))``."""

    k = _check_k(k)
    return [[recip_gamma_int(2 * k - 3 - i - 2 * j) for j in range(k - 1)]
            for i in range(k - 1)]


def j_matrix(k):
    """:func:`m_matrix` with the last row arguments lowered by one more."""

    k = _check_k(k)
    rows = m_matrix(k)
    rows[-1] = [recip_gamma_int(k - 2 - 2 * j) for j in range(k - 1)]
    return rows


def all_zero_matrix(k):
    """K x K matrix ``1/Gamma(2K-3-(i-1)-2(j-1))``; its last column is zero."""

    k = _check_k(k)
    return [[recip_gamma_int(2 * k - 3 - i - 2 * j) for j in range(k)]
            for i in range(k)]


def m_gamma_det(k):
    """
    :math:`(2\\pi i)^{K-1}(K-1)!\\det[1/\\Gamma(2K-3-(i-1)-2(j-1))]`.

    Examples
    --------
    >>> m_gamma_det(2)
    TwoPiIMultiple(coefficient=Fraction(1, 1), power=1)
    """

    k = _check_k(k)
    return TwoPiIMultiple(factorial(k - 1) * bareiss_det(m_matrix(k)), k - 1)


def j_gamma_det(k):
    """The J determinant: :func:`j_matrix` times :math:`(K-1)!(2\\pi i)^{K-1}`."""

    k = _check_k(k)
    return TwoPiIMultiple(factorial(k - 1) * bareiss_det(j_matrix(k)), k - 1)


def m_closed_form(k):
    """
    :math:`(-1)^{(K-1)(K-2)/2}(2\\pi i)^{K-1}(K-1)!
    \\prod_{j=1}^{K-2} 1/(2j-1)!!`.
    """

    k = _check_k(k)
    sign = -1 if ((k - 1) * (k - 2) // 2) % 2 else 1
    denom = prod(specfun.double_factorial(2 * j - 1) for j in range(1, k - 1))
    return TwoPiIMultiple(Fraction(sign * factorial(k - 1), denom), k - 1)


def m_barnes_form(k):
    """
    :math:`(-1)^{(K-1)(K-2)/2}(2\\pi i)^{K-1} 2^{(K-1)(K-3)/2}
    G(K)\\sqrt{\\Gamma(2K-1)\\Gamma(K)}/\\sqrt{G(2K-1)}` in floating point,
    evaluated through logarithms.
    """

    k = _check_k(k, 2, 20)
    sign = -1 if ((k - 1) * (k - 2) // 2) % 2 else 1
    logmag = (0.5 * (k - 1) * (k - 3) * numpy.log(2.0)
              + specfun.log_barnes_g(k)
              + 0.5 * (specfun.loggamma(2 * k - 1) + specfun.loggamma(k))
              - 0.5 * specfun.log_barnes_g(2 * k - 1))
    return complex(sign * numpy.exp(complex(logmag).real) * (2j * numpy.pi) ** (k - 1))


def interesting_det_relation_check(k):
    """
    True iff :math:`\\frac{(K-1)(K-2)}{2}\\det M = \\det J` exactly.
    """

    k = _check_k(k, 2, 20)
    lhs = Fraction((k - 1) * (k - 2), 2) * bareiss_det(m_matrix(k))
    return lhs == bareiss_det(j_matrix(k))


def vandermondian_check(x):
    """
    True iff :math:`\\det(1, x, \\dots, x^{n-2}, x^n) =
    (\\sum x)\\,\\Delta(x)` exactly.

    Raises
    ------
    ValueError
        If the entries are not distinct.
    """

    x = [Fraction(v) for v in x]
    n = len(x)
    if n < 1:
        raise ValueError("need at least one value")
    if len(set(x)) != n:
        raise ValueError("values must be distinct")
    powers = list(range(n - 1)) + [n]
    lhs = bareiss_det([[v ** p for v in x] for p in powers])
    vdm = bareiss_det([[v ** p for v in x] for p in range(n)])
    return lhs == sum(x) * vdm


def all_zero_det_check(k):
    """True iff the all-zero-residue determinant vanishes exactly."""

    k = _check_k(k)
    return bareiss_det(all_zero_matrix(k)) == 0
