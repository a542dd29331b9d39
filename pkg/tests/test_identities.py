from fractions import Fraction
from math import factorial

import pytest
import sympy
from hypothesis import given, strategies as st

from mixmoments import identities as ident
from mixmoments.identities import TwoPiIMultiple

KS = range(2, 13)


@pytest.mark.parametrize("k,coef", [(2, 1), (3, -2), (5, Fraction(24, 45))])
def test_m_examples(k, coef):
    assert ident.m_gamma_det(k) == TwoPiIMultiple(Fraction(coef), k - 1)
    assert ident.m_closed_form(k) == TwoPiIMultiple(Fraction(coef), k - 1)


@pytest.mark.parametrize("k", KS)
def test_m_gamma_det_equals_closed_form(k):
    assert ident.m_gamma_det(k) == ident.m_closed_form(k)


@pytest.mark.parametrize("k", KS)
def test_j_over_m(k):
    assert ident.j_gamma_det(k) / ident.m_gamma_det(k) == Fraction((k - 1) * (k - 2), 2)


def test_j_examples():
    assert ident.j_gamma_det(3) == TwoPiIMultiple(Fraction(-2), 2)
    assert ident.j_gamma_det(6) / ident.m_gamma_det(6) == 10


@pytest.mark.parametrize("k", list(KS) + [20])
def test_interesting_relation(k):
    assert ident.interesting_det_relation_check(k)


@pytest.mark.parametrize("k", KS)
def test_all_zero_det(k):
    assert ident.all_zero_det_check(k)
    assert all(row[-1] == 0 for row in ident.all_zero_matrix(k))


@pytest.mark.parametrize("k", range(2, 9))
def test_barnes_form(k):
    exact = complex(ident.m_gamma_det(k))
    assert abs(ident.m_barnes_form(k) - exact) <= 1e-9 * abs(exact)


@pytest.mark.parametrize("k", [4, 7, 10])
def test_determinant_against_sympy(k):
    rows = ident.m_matrix(k)
    ref = sympy.Matrix([[sympy.Rational(x.numerator, x.denominator) for x in r]
                        for r in rows]).det()
    got = ident.bareiss_det(rows)
    assert sympy.Rational(got.numerator, got.denominator) == ref


def test_bareiss_pivoting_and_errors():
    assert ident.bareiss_det([[0, 1], [1, 0]]) == -1
    assert ident.bareiss_det([[0, 0], [1, 2]]) == 0
    with pytest.raises(ValueError):
        ident.bareiss_det([[1, 2]])


def test_recip_gamma_int():
    assert ident.recip_gamma_int(-3) == 0
    assert ident.recip_gamma_int(0) == 0
    assert ident.recip_gamma_int(5) == Fraction(1, factorial(4))


def test_vandermondian_examples():
    assert ident.bareiss_det([[1, 1], [1, 4]]) == 3
    assert ident.vandermondian_check([1, 2])
    assert ident.vandermondian_check([1, 2, 3])
    with pytest.raises(ValueError):
        ident.vandermondian_check([2, 2])


fractions = st.fractions(min_value=-20, max_value=20, max_denominator=12)


@given(st.lists(fractions, min_size=1, max_size=6, unique=True))
def test_vandermondian_random(xs):
    assert ident.vandermondian_check(xs)


def test_k_range():
    with pytest.raises(ValueError):
        ident.m_gamma_det(1)
    with pytest.raises(ValueError):
        ident.m_gamma_det(41)


def test_two_pi_i_multiple_value():
    v = TwoPiIMultiple(Fraction(-2), 2)
    assert abs(complex(v) - (-2) * (2j * 3.141592653589793) ** 2) < 1e-12
    assert v.scaled(3) == TwoPiIMultiple(Fraction(-6), 2)
