import numpy
import pytest

from mixmoments.errors import PoleError, TooFewAccepted
from mixmoments.excised import (ExcisedConfig, Normalization,
                                excised_density_series, excised_integrand,
                                mc_excised_density, r0_density, residue_at,
                                residue_at_point, unit_area)
from mixmoments.haar import SamplerConfig
from mixmoments.moments import predict_U_so, predict_V

N = 12
CHI = numpy.log(1e-4)
GRID = numpy.linspace(0.1, 3.0, 9)


def periodic_integral(f, m=4096):
    # trapezoid rule is spectrally accurate for smooth periodic integrands
    phi = -numpy.pi + 2 * numpy.pi * numpy.arange(m) / m
    return f(phi).sum() * 2 * numpy.pi / m


def test_r0_density_examples():
    assert r0_density(12, 0.0) == pytest.approx(46 / (2 * numpy.pi), rel=1e-14)
    assert r0_density(12, 1e-13) == pytest.approx(46 / (2 * numpy.pi), rel=1e-12)
    assert numpy.allclose(r0_density(1, GRID), 1 / numpy.pi, rtol=1e-13)


@pytest.mark.parametrize("n", [1, 5, 12, 40])
def test_r0_density_counts_eigenvalues(n):
    assert abs(periodic_integral(lambda p: r0_density(n, p)) - 2 * n) < 1e-8


def test_integrand_matches_moment_factors():
    for r in (0.5, 1.0, 2.3):
        for phi in (0.4, 1.7):
            ref = (numpy.exp(-CHI * r) / r * predict_V(N, r)
                   * (2 * N + r * (r - 1) ** 2 + 2 * predict_U_so(N, r, 1j * phi)))
            assert abs(excised_integrand(N, CHI, r, phi) - ref) < 1e-12 * abs(ref)


@pytest.mark.parametrize("r", [0.0, -0.5, -2.5])
def test_integrand_poles(r):
    with pytest.raises(PoleError):
        excised_integrand(N, CHI, r, 1.0)


def test_residue_at_zero_closed_form():
    res = residue_at_point(N, CHI, GRID, 0.0)
    ref = 2 * N + 2 * predict_U_so(N, 0.0, 1j * GRID)
    assert numpy.max(numpy.abs(res - ref)) < 1e-8 * numpy.max(numpy.abs(ref))


@pytest.mark.parametrize("center", [-1.0, -2.0])
def test_no_residue_at_negative_integers(center):
    near = numpy.abs(residue_at(N, CHI, GRID, 0))
    assert numpy.all(numpy.abs(residue_at_point(N, CHI, GRID, center)) <= 1e-8 * near)


@pytest.mark.parametrize("k", [0, 1, 2])
def test_branch_closes(k):
    _, residual = residue_at(N, CHI, 1.0, k, return_residual=True)
    assert residual < 1e-6


def test_leading_residue_chi_scaling():
    a = residue_at(N, CHI, GRID, 0)
    b = residue_at(N, 0.0, GRID, 0)
    assert numpy.allclose(a, numpy.exp(0.5 * CHI) * b, rtol=1e-6, atol=0)


def test_residue_k_range():
    with pytest.raises(ValueError):
        residue_at(N, CHI, 1.0, 9)


def test_series_tends_to_r0_for_loose_cut():
    curve = excised_density_series(N, -60.0, GRID, k_max=3)
    assert numpy.allclose(curve.density, r0_density(N, GRID), rtol=1e-10)
    assert curve.normalization is Normalization.RawCount
    assert [t.k_index for t in curve.terms] == [-1, 0, 1, 2, 3]


def test_series_unit_area():
    phi = numpy.linspace(0.05, 3.1, 200)
    curve = excised_density_series(N, CHI, phi, k_max=3, normalize=True)
    assert abs(curve.area() - 1) < 1e-9
    assert curve.normalization is Normalization.UnitArea


def test_series_term_chi_factor():
    curve = excised_density_series(N, CHI, GRID, k_max=2)
    for t in curve.terms[1:]:
        assert t.chi_factor == pytest.approx(numpy.exp((t.k_index + 0.5) * CHI))


def test_unit_area_rejects_empty_curve():
    with pytest.raises(ValueError):
        unit_area(GRID, numpy.zeros_like(GRID))


def test_config_validation():
    with pytest.raises(ValueError):
        ExcisedConfig(12, CHI, bins=5)
    with pytest.raises(ValueError):
        ExcisedConfig(12, CHI, phi_grid=(0.0, 1.0))
    assert len(ExcisedConfig(12, CHI, bins=10).grid()) == 10


def test_mc_needs_enough_samples():
    with pytest.raises(ValueError):
        mc_excised_density(ExcisedConfig(4, CHI, n_samples=100))


def test_mc_too_few_accepted():
    with pytest.raises(TooFewAccepted):
        mc_excised_density(ExcisedConfig(4, 50.0, n_samples=10_000))


def test_mc_loose_cut_reproduces_full_ensemble():
    cfg = ExcisedConfig(N, -1e9, bins=100, n_samples=100_000)
    curve, rate = mc_excised_density(cfg, SamplerConfig(seed=11))
    assert rate == 1.0
    width = numpy.pi / cfg.bins
    mc_cdf = numpy.cumsum(curve.density) * width
    fine = numpy.linspace(0.0, numpy.pi, 20001)
    dens = r0_density(N, fine)
    cdf = numpy.concatenate([[0.0], numpy.cumsum(0.5 * (dens[1:] + dens[:-1])
                                                 * numpy.diff(fine))])
    cdf /= cdf[-1]
    edges = numpy.linspace(0.0, numpy.pi, cfg.bins + 1)[1:]
    ks = numpy.max(numpy.abs(mc_cdf - numpy.interp(edges, fine, cdf)))
    assert ks < 0.02


def test_mc_deterministic_and_repelled():
    cfg = ExcisedConfig(N, CHI, bins=50, n_samples=20_000)
    a, ra = mc_excised_density(cfg, SamplerConfig(seed=3), normalize=False)
    b, rb = mc_excised_density(cfg, SamplerConfig(seed=3), normalize=False)
    assert ra == rb and numpy.array_equal(a.density, b.density)
    assert 0 < ra < 1
    assert a.density[0] < r0_density(N, a.phi[0])
