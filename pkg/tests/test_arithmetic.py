import numpy
import pytest
from hypothesis import given, strategies as st

from mixmoments import arithmetic as ar
from mixmoments import specfun
from mixmoments.arithmetic import (E11A3, CurveConfig, TwistFamily, a_e_tilde,
                                   a_e_tilde_deriv, count_points_mod_p,
                                   excised_prediction_lfun, ingest_zero_data,
                                   is_fundamental_discriminant, kronecker,
                                   lambda_table, mixed_bracket,
                                   predict_mixed_lfun, predict_U_lfun,
                                   primes_up_to, r0_density_lfun, read_d_list,
                                   twist_family, zero_histogram)
from mixmoments.errors import EmptyDataset, NonConvergence, ParseError
from mixmoments.moments import predict_U_so, predict_V

# a_p of the curve 11.a3 from its q-expansion
KNOWN_AP = {2: -2, 3: -1, 5: 1, 7: -2, 11: 1, 13: 4, 17: -2, 19: 0}


def brute_count(curve, p):
    a1, a2, a3, a4, a6 = curve.weierstrass
    x = numpy.arange(p)[:, None]
    y = numpy.arange(p)[None, :]
    lhs = y * y + a1 * x * y + a3 * y
    rhs = x ** 3 + a2 * x * x + a4 * x + a6
    return int(((lhs - rhs) % p == 0).sum()) + 1


def legendre(a, p):
    v = pow(a % p, (p - 1) // 2, p)
    return -1 if v == p - 1 else v


@pytest.fixture
def fresh_memo(monkeypatch):
    monkeypatch.setattr(ar, "_MEMO", {})


# ---------- point counts ----------

def test_point_counts_match_brute_force():
    for p in primes_up_to(200):
        assert count_points_mod_p(E11A3, p) == brute_count(E11A3, p), p


def test_known_traces():
    for p, a in KNOWN_AP.items():
        assert p + 1 - count_points_mod_p(E11A3, p) == a


def test_hasse_bound():
    table = lambda_table(E11A3, 1000)
    good = ~numpy.isin(table.primes, E11A3.bad_primes)
    assert numpy.all(numpy.abs(table.lam[good]) <= 2)
    assert table[2] == pytest.approx(-numpy.sqrt(2), rel=1e-15)


def test_primes_up_to():
    assert primes_up_to(30).tolist() == [2, 3, 5, 7, 11, 13, 17, 19, 23, 29]
    assert primes_up_to(1).size == 0


def test_ap_table_lookup():
    table = lambda_table(E11A3, 100)
    with pytest.raises(KeyError):
        table[4]
    assert table.upto(10).primes.tolist() == [2, 3, 5, 7]


def test_cache_round_trip(tmp_path, monkeypatch, fresh_memo):
    built = lambda_table(E11A3, 500, cache_dir=tmp_path)
    files = list(tmp_path.iterdir())
    assert len(files) == 1 and files[0].read_text().startswith("p,lambda")
    monkeypatch.setattr(ar, "_MEMO", {})
    monkeypatch.setattr(ar, "count_points_mod_p", None)
    loaded = lambda_table(E11A3, 500, cache_dir=tmp_path)
    assert numpy.array_equal(built.primes, loaded.primes)
    assert numpy.array_equal(built.lam, loaded.lam)


def test_curve_validation():
    with pytest.raises(ValueError):
        CurveConfig(omega_E=0)
    with pytest.raises(ValueError):
        CurveConfig(bad_primes=(3,))
    assert E11A3.with_kappa(2.0).kappa_E == 2.0


# ---------- Euler product ----------

def test_empty_product_is_one():
    assert a_e_tilde(0.1, 0.2, 1.5, p_max=1) == 1
    assert a_e_tilde_deriv(0.1j, 1.0, p_max=1) == 0


def test_trivial_point():
    assert abs(a_e_tilde(0.2, 0.2, 0.0) - 1) < 1e-14


def test_conjugate_symmetry():
    a, g = 0.1 + 0.2j, 0.15 - 0.1j
    assert abs(a_e_tilde(a.conjugate(), g.conjugate(), 1.3)
               - numpy.conj(a_e_tilde(a, g, 1.3))) < 1e-13


def test_vectorised_r():
    rs = numpy.array([0.0, 0.5, 2.0])
    vec = a_e_tilde(0.1, 0.1j, rs, p_max=500)
    assert numpy.allclose(vec, [a_e_tilde(0.1, 0.1j, r, p_max=500) for r in rs],
                          rtol=1e-14)


def test_check_flag_raises_on_tight_tolerance():
    with pytest.raises(NonConvergence):
        a_e_tilde(0.1, 0.1, 1.0, p_max=200, check=True, rtol=1e-12)


def test_derivative_matches_secant():
    phi = 0.3j
    step = 1e-3
    sec = (a_e_tilde(phi + step, phi, 1.0) - a_e_tilde(phi - step, phi, 1.0)) / (2 * step)
    assert abs(a_e_tilde_deriv(phi, 1.0) - sec) < 1e-4


# ---------- family ----------

def test_kronecker_against_euler_criterion():
    for d in range(1, 200):
        assert kronecker(d, -11) == legendre(d, 11)
        assert kronecker(d, 7) == legendre(d, 7)


@given(st.integers(-500, 500), st.integers(1, 300))
def test_kronecker_multiplicative_in_top(a, n):
    b = 7
    assert kronecker(a * b, 2 * n + 1) == kronecker(a, 2 * n + 1) * kronecker(b, 2 * n + 1)


def test_fundamental_discriminants():
    fund = [d for d in range(1, 45) if is_fundamental_discriminant(d)]
    assert fund == [5, 8, 12, 13, 17, 21, 24, 28, 29, 33, 37, 40, 41, 44]


def test_family_residues_and_size():
    fam = twist_family(100)
    squares = {x * x % 11 for x in range(1, 11)}
    assert squares == {1, 3, 4, 5, 9}
    assert all(d % 11 in squares for d in fam.d_list)
    brute = [d for d in range(2, 101) if d % 11 in squares
             and is_fundamental_discriminant(d)]
    assert fam.d_list.tolist() == brute
    assert 1 not in fam.d_list
    assert numpy.allclose(fam.N_d, numpy.log(numpy.sqrt(11) * fam.d_list / (2 * numpy.pi)))


def test_family_validation():
    with pytest.raises(ValueError):
        twist_family(2)
    with pytest.raises(EmptyDataset):
        TwistFamily.from_list([])


def test_read_d_list(tmp_path):
    p = tmp_path / "d.txt"
    p.write_text("12\n5\n")
    assert read_d_list(p).d_list.tolist() == [5, 12]
    p.write_text("5\nx\n")
    with pytest.raises(ParseError) as err:
        read_d_list(p)
    assert "2" in str(err.value)


# ---------- predictions ----------

def test_structural_isomorphism_with_so_bracket():
    z = specfun.zfun
    rng = numpy.random.default_rng(20)
    for _ in range(20):
        r = rng.uniform(0.1, 3.0)
        n = int(rng.integers(5, 200))
        phi = complex(rng.uniform(0.3, 3.0), rng.uniform(-4.0, 4.0))
        lhs = mixed_bracket(r, phi, n, z, lambda x: z(-x), 1.0, 1.0, 0.0, 1.0)
        rhs = predict_U_so(n, r, phi, next_order=False)
        assert abs(lhs - rhs) < 1e-9 * max(abs(rhs), 1.0)


def test_r0_reduction():
    d, phi = 12, 0.7
    nd = numpy.log(numpy.sqrt(11) * d / (2 * numpy.pi))
    ip = 1j * phi
    s = 1 + 2 * ip
    ld = specfun.zeta_prime(s) / specfun.zeta(s)
    ref = (a_e_tilde_deriv(ip, 0.0) - a_e_tilde(ip, ip, 0.0) * ld
           - specfun.zeta(s) * a_e_tilde(-ip, ip, 0.0) * specfun.gfun(ip)
           * numpy.exp(-2j * nd * phi))
    assert abs(predict_mixed_lfun(d, 0.0, phi) - ref) < 1e-10 * abs(ref)


def test_prediction_reflection():
    for r in (0.0, 1.0, 2.5):
        a = predict_mixed_lfun(41, r, 0.6)
        b = predict_mixed_lfun(41, r, -0.6)
        assert abs(a - numpy.conj(b)) < 1e-10 * abs(a)


def test_prediction_is_v_times_u():
    nd = numpy.log(numpy.sqrt(11) * 41 / (2 * numpy.pi))
    ref = predict_V(nd, 1.5) * predict_U_lfun(nd, 1.5, 0.4)
    assert abs(predict_mixed_lfun(41, 1.5, 0.4) - ref) < 1e-12 * abs(ref)


def test_prediction_needs_positive_conductor_log():
    with pytest.raises(ValueError):
        predict_mixed_lfun(1, 1.0, 0.5)


# ---------- one-level densities ----------

def test_riszero_finite_through_origin():
    phi = numpy.array([1e-9, 1e-6, 1e-3, 2e-3])
    dens = r0_density_lfun(200, phi).density
    assert numpy.all(numpy.isfinite(dens))
    assert abs(dens[2] - dens[3]) < 1e-2 * abs(dens[2])
    assert abs(dens[0] - dens[1]) < 1e-4 * abs(dens[0])


def test_riszero_continuous():
    phi = numpy.linspace(1e-3, 1.0, 400)
    dens = r0_density_lfun(100, phi).density
    assert numpy.all(numpy.isfinite(dens))
    assert numpy.max(numpy.abs(numpy.diff(dens))) < 0.05 * numpy.max(numpy.abs(dens))


def test_riszero_matches_direct_residue_path():
    phi = numpy.array([0.01, 0.3, 1.0, 2.5])
    a = r0_density_lfun(300, phi).density
    b = excised_prediction_lfun(300, phi, k_max=0).density
    assert numpy.allclose(a, b, rtol=1e-10, atol=0)


def test_riszero_single_twist_explicit_term():
    fam = TwistFamily.from_list([12])
    shifted = TwistFamily(fam.X, fam.d_list, fam.N_d + 0.25)
    # shifting N_d moves the explicit term by 2 * 0.25 / (2 pi) and rotates
    # the oscillatory one by exp(-0.5 i phi), a full turn at phi = 4 pi
    phi = 4 * numpy.pi
    a = r0_density_lfun(fam, [phi]).density[0]
    b = r0_density_lfun(shifted, [phi]).density[0]
    assert b - a == pytest.approx(0.5 / (2 * numpy.pi), rel=1e-9)


def test_excised_needs_kappa_and_rejects_origin():
    with pytest.raises(ValueError):
        excised_prediction_lfun(100, [0.5], k_max=2)
    with pytest.raises(ValueError):
        excised_prediction_lfun(100, [0.0], k_max=0)
    with pytest.raises(ValueError):
        excised_prediction_lfun(100, [0.5], k_max=4, kappa=1.0)


def test_excised_kappa_scaling_and_collapse():
    phi = [0.2, 1.0]
    _, t1 = excised_prediction_lfun(100, phi, k_max=1, kappa=1.0, return_terms=True)
    _, t4 = excised_prediction_lfun(100, phi, k_max=1, kappa=4.0, return_terms=True)
    assert t1.shape == (2, 2)
    assert numpy.allclose(t4[1], 2.0 * t1[1], rtol=1e-8)
    assert numpy.allclose(t4[0], t1[0], rtol=1e-14)
    lo = excised_prediction_lfun(100, phi, k_max=3, kappa=1e-12).density
    ref = r0_density_lfun(100, phi).density
    assert numpy.allclose(lo, ref, rtol=1e-4)


# ---------- zero data ----------

def test_empty_zero_file(tmp_path):
    p = tmp_path / "z.txt"
    p.write_text("# header only\n\n")
    with pytest.raises(EmptyDataset):
        ingest_zero_data(p)


def test_zero_file_round_trip(tmp_path):
    p = tmp_path / "z.txt"
    p.write_text("5,0.25\n12,1.5\n# comment\n13,2.75\n")
    ds = ingest_zero_data(p)
    assert len(ds) == 3
    assert ds.d.tolist() == [5, 12, 13]
    assert ds.gamma.tolist() == [0.25, 1.5, 2.75]


def test_zero_file_parse_error_line(tmp_path):
    p = tmp_path / "z.txt"
    p.write_text("5,0.25\n12;1.5\n")
    with pytest.raises(ParseError) as err:
        ingest_zero_data(p)
    assert err.value.line == 2


def test_uniform_histogram_is_flat(tmp_path):
    g = numpy.random.default_rng(1).uniform(0, 2.0, 200_000)
    p = tmp_path / "z.txt"
    p.write_text("\n".join(f"5,{float(v)!r}" for v in g))
    curve = zero_histogram(ingest_zero_data(p), 20, 2.0)
    assert abs(curve.area() - 1) < 1e-12
    assert numpy.allclose(curve.density, curve.density.mean(), rtol=0.05)
