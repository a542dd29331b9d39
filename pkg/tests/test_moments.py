import numpy
import pytest
from hypothesis import given, strategies as st

from mixmoments import specfun
from mixmoments.errors import GuardError, PoleError
from mixmoments.exact import exact_mixed_moment, exact_moment, exact_ratio
from mixmoments.haar import SamplerConfig
from mixmoments.moments import (MCEstimate, MomentSpec, mc_mixed_moment,
                                mc_ratio_moment, predict_mixed_so,
                                predict_mixed_usp, predict_moment_so,
                                predict_ratio_so, predict_U_so, predict_V,
                                predict_V_usp, sqrt_v_radicand, v_radicand)

PHI = 2 + 3.5j
z = specfun.zfun

# Predicted column of the reference table, keyed by the r that reproduces it.
REFERENCE_PREDICTED = {
    1: 0.255807 - 0.0993974j,
    2: 97.3408 - 35.0436j,
    1 + 1j: -0.031109 - 0.0273784j,
    0.5: 0.049486 - 0.021654j,
}

# Heine-Gram determinant oracle (exact.py), frozen.
EXACT_SO_N20 = {
    1: 0.2558074414530992 - 0.09939735770473838j,
    2: 19.430707742059397 - 7.0209400045298445j,
    3: 8425.76299798927 - 2967.6825957612496j,
    0.5: 0.0610144082982064 - 0.026629471240818547j,
    1 + 1j: -0.09161411165454476 + 0.009843639101604875j,
}


def sig_close(a, b, digits):
    return abs(a - b) <= 0.5 * 10 ** (1 - digits) * abs(b)


@pytest.mark.parametrize("r,value", list(REFERENCE_PREDICTED.items()))
def test_reference_predicted_column(r, value):
    assert sig_close(predict_mixed_so(100, r, PHI).total, value, 5)


def test_reference_row_with_misprinted_real_part():
    # tabulated -0.002565+0.007075i; the imaginary part agrees
    v = predict_mixed_so(100, 0.5 + 1j, PHI).total
    assert abs(v.imag - 0.007075) < 1e-6
    assert abs(v.real - (-0.0024657)) < 1e-6


@pytest.mark.parametrize("r", [1, 2, 3, 0.5, 1 + 1j])
def test_consistent_variant_against_exact(r):
    pred = predict_mixed_so(20, r, PHI, variant="consistent").total
    ref = EXACT_SO_N20[r]
    # next-order prediction leaves O(N^-2)
    assert abs(pred - ref) <= 3.0 / 20 ** 2 * abs(ref)


def test_frozen_exact_values_reproduce():
    for r in (1, 0.5):
        assert abs(exact_mixed_moment("so", 20, r, PHI) - EXACT_SO_N20[r]) < 1e-9


def test_V_examples():
    assert predict_V(7, 0) == pytest.approx(1)
    assert predict_V(7, 1) == pytest.approx(2, rel=1e-13)
    assert predict_V(10, 2) == pytest.approx(40, rel=1e-12)


def test_V_matches_exact_moment_leading_order():
    # E Lambda(1)^r over SO(2N) ~ V(N, r)(1 + r(r-1)^2/(4N)) for real r > -1/2
    for r in (-0.3, 0.7, 1.5):
        ref = exact_moment("so", 12, r)
        assert abs(predict_moment_so(12, r, variant="consistent") - ref) < 2e-3 * abs(ref)


def test_V_is_continuous_across_the_continuation_switch():
    for r in (-0.25 + 0.1j, -0.25 - 0.3j):
        a = predict_V(9, r - 1e-7)
        b = predict_V(9, r + 1e-7)
        assert abs(a - b) < 1e-5 * abs(a)


def test_V_pole_at_negative_half_integers():
    with pytest.raises(PoleError):
        predict_V(5, -1.5)


def test_sqrt_radicand_principal_on_right():
    for r in (0.3, 1.7 + 0.4j, -0.8 + 0.2j):
        assert abs(sqrt_v_radicand(r) ** 2 - v_radicand(r)) < 1e-12 * abs(v_radicand(r))
    assert sqrt_v_radicand(0.3).real > 0


def test_moment_examples():
    assert predict_moment_so(30, 0) == pytest.approx(1)
    assert predict_moment_so(30, 1) == pytest.approx(2, rel=1e-13)
    lead = predict_V(1, 3)
    assert lead == pytest.approx(8 / 3, rel=1e-12)


def test_r_zero_reduction():
    for n in (5, 40):
        ref = -z(-2 * PHI) - numpy.exp(-2 * n * PHI) * z(2 * PHI)
        assert abs(predict_mixed_so(n, 0, PHI).total - ref) < 1e-15
    ref = (2 * z(2 * PHI) * z(-2 * PHI) - z(-2 * PHI)
           + numpy.exp(-2 * 30 * PHI) * z(2 * PHI) * z(-2 * PHI))
    assert abs(predict_mixed_usp(30, 0, PHI).total - ref) < 1e-15


@given(st.floats(0.1, 3), st.floats(0.2, 3), st.floats(0.05, 3), st.booleans())
def test_schwarz_symmetry(r, a, b, flip):
    # real phi sits on the cut of the principal power (z(-phi)/z(phi))^r
    phi = complex(a, -b if flip else b)
    if min(abs(phi - 2j * numpy.pi * k) for k in range(-1, 2)) < 0.05:
        return
    for fn in (predict_mixed_so, predict_mixed_usp):
        lhs = fn(15, r, phi.conjugate()).total
        rhs = numpy.conj(fn(15, r, phi).total)
        assert abs(lhs - rhs) <= 1e-12 * max(1, abs(rhs))


def test_U_broadcasts():
    r = numpy.array([0.5, 1.0, 2.0])
    vals = predict_U_so(30, r, 1j * 0.7)
    assert vals.shape == (3,)
    assert numpy.isclose(vals[1], predict_U_so(30, 1.0, 0.7j))


def test_usp_prefactor_variants():
    r = 1.5
    ratio = predict_V_usp(10, r, "classical") / predict_V_usp(10, r)
    assert ratio == pytest.approx(2 ** r)


def test_ratio_prediction_matches_exact():
    assert predict_ratio_so(3, 1, 0.3, 0.4) == pytest.approx(2.271853356591, rel=1e-10)
    ref = exact_ratio("so", 3, 1, 0.3, 0.4)
    assert predict_ratio_so(3, 1, 0.3, 0.4) == pytest.approx(ref, rel=0.15)


def test_ratio_tightens_with_n():
    ref = exact_ratio("so", 50, 1.5, 0.3, 0.4)
    assert abs(predict_ratio_so(50, 1.5, 0.3, 0.4) - ref) <= 1e-3 * abs(ref)


def test_ratio_near_diagonal_matches_moment():
    a = predict_ratio_so(40, 2, 0.5 + 1e-6, 0.5)
    assert abs(a - predict_moment_so(40, 2)) < 0.05 * abs(a)


def test_ratio_guard():
    with pytest.raises(GuardError):
        predict_ratio_so(5, 1, 0.4, 0.4)


def test_mc_estimate_zscores():
    est = MCEstimate(1 + 1j, 0.1, 0.0, 100)
    assert est.zscores(1.2 + 1j) == pytest.approx((2.0, 0.0))
    assert est.zscores(1 + 1.1j)[1] == numpy.inf
    assert est.within(1.05 + 1j, 1)


def test_mc_mixed_small_n_against_exact():
    spec = MomentSpec("so", 4, 1.5, PHI)
    est = mc_mixed_moment(spec, 20_000, SamplerConfig(seed=3))
    assert est.within(exact_mixed_moment("so", 4, 1.5, PHI), 4)


def test_mc_r_zero_matches_prediction():
    est = mc_mixed_moment(MomentSpec("so", 6, 0, PHI), 5_000, SamplerConfig(seed=1))
    assert est.within(predict_mixed_so(6, 0, PHI).total, 3)


def test_mc_usp_against_exact():
    spec = MomentSpec("usp", 5, 1, PHI)
    est = mc_mixed_moment(spec, 20_000, SamplerConfig(seed=2))
    assert est.within(exact_mixed_moment("usp", 5, 1, PHI), 4)


def test_mc_thread_and_chunk_determinism():
    spec = MomentSpec("so", 5, 1, PHI)
    a = mc_mixed_moment(spec, 1000, SamplerConfig(seed=7), chunk=128, threads=1)
    b = mc_mixed_moment(spec, 1000, SamplerConfig(seed=7), chunk=128, threads=3)
    assert a == b


def test_mc_ratio_trivial_and_oracle():
    one = mc_ratio_moment("so", 4, 1, 0.3, 0.3, 200, SamplerConfig(seed=0))
    assert abs(one.mean - 1) < 1e-12
    est = mc_ratio_moment("so", 2, 1, 0.2, 0.5, 20_000, SamplerConfig(seed=5))
    assert est.within(exact_ratio("so", 2, 0, 0.2, 0.5), 3)


def test_mc_minimum_samples():
    with pytest.raises(ValueError):
        mc_mixed_moment(MomentSpec("so", 3, 1, PHI), 10)
