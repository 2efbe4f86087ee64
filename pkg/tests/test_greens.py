import numpy as np
import pytest
from scipy.special import k0

from nvscatter.greens import (GreensTable, QuadratureError, cache_key,
                              build_greens_table, direct_symbol_quadrature,
                              greens_G, greens_points, load_table,
                              reference_G_on_T, reference_G_on_T_hankel,
                              save_table, singular_points, symbol_denominator)
from nvscatter.grids import make_grid

LAM_SAMPLES = [0.5, 0.5 * np.exp(0.8j), 2.0, 1.7 * np.exp(-2.1j),
               np.exp(0.45j), 1j]


def closed_form_lam1(z):
    """g(z, 1) = -(exp(x1) / 2 pi) K0(|z|), the classical lambda = 1 case."""
    z = np.asarray(z, dtype=complex)
    return -np.exp(z.real) / (2.0 * np.pi) * k0(np.abs(z))


def test_singular_points_lam_half():
    pts = singular_points(0.5)
    assert pts[0] == 0
    assert pts[1] == pytest.approx(1.5j, abs=1e-14)


def test_singular_points_lam_2i():
    pts = singular_points(2j)
    assert pts[1] == pytest.approx(1.5, abs=1e-14)


def test_singular_points_on_T_single():
    assert singular_points(np.exp(0.3j)) == [0j]


@pytest.mark.parametrize("lam", [0.5, 2j, 1.7 * np.exp(-2.1j)])
def test_second_zero_annihilates_symbol(lam):
    zeta0 = singular_points(lam)[1]
    assert abs(symbol_denominator(zeta0, lam)) < 1e-13
    assert abs(symbol_denominator(0.0, lam)) == 0.0


def test_lambda_one_closed_form():
    z = np.array([1.0, -0.75, 2.0 + 1.0j, 0.25j, -1.0 - 0.5j])
    got = greens_points(1.0, z)
    np.testing.assert_allclose(got, closed_form_lam1(z),
                               rtol=1e-7, atol=1e-12)


def test_unit_circle_reduces_to_k0():
    # exp(-(lam zbar + z/lam)/2) g == -K0(|z|)/(2 pi) for any |lam| = 1
    lam = np.exp(0.45j)
    for z in (1.0 + 0.0j, 0.5 - 1.25j, 2.0j):
        g = greens_points(lam, z)[0]
        G = np.exp(-0.5 * (lam * np.conj(z) + z / lam)) * g
        assert G == pytest.approx(reference_G_on_T(abs(z)), rel=1e-7)


def test_reference_routes_agree():
    for r in (0.3, 1.0, 2.5):
        a = reference_G_on_T(r)
        b = reference_G_on_T_hankel(r)
        assert a == pytest.approx(b, rel=1e-12)
        assert abs(a.imag) < 1e-15


def test_parity_symmetry():
    # g(-z, lam) = g(z, -lam), by xi -> -xi in the defining integral
    z = np.array([1.0 + 0.5j, -0.3 + 1.2j, 2.0])
    for lam in (0.5, 1.3 * np.exp(0.9j)):
        a = greens_points(lam, -z)
        b = greens_points(-lam, z)
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-15)


def test_conjugation_symmetry():
    # conj(g(z, lam)) = g(conj z, conj lam)
    z = np.array([1.0 + 0.5j, -0.3 + 1.2j])
    for lam in (0.7 * np.exp(0.4j), 1.6 * np.exp(-1.1j)):
        a = np.conj(greens_points(lam, z))
        b = greens_points(np.conj(lam), np.conj(z))
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-15)


@pytest.mark.parametrize("lam", LAM_SAMPLES)
def test_against_brute_symbol_quadrature(lam):
    """Residue evaluator vs a slow, independent 2D quadrature oracle."""
    for z in (0.8 + 0.3j, -1.1 + 0.9j):
        got = greens_points(lam, z)[0]
        ref = direct_symbol_quadrature(z, lam, xi_max=300.0, n=6000)
        assert got == pytest.approx(ref, rel=2e-3, abs=2e-6)


def test_oracle_normalization_pins_scale():
    # at lambda = 1, z = i the closed form is -K0(1)/(2 pi) ~ -0.066948
    ref = -k0(1.0) / (2.0 * np.pi)
    got = direct_symbol_quadrature(1j, 1.0, xi_max=300.0, n=6000)
    assert got.real == pytest.approx(ref, rel=5e-4)
    assert abs(got.imag) < 1e-5


def test_refinement_convergence():
    grid = make_grid(8.0, 32)
    t1 = build_greens_table(grid, 0.6, refine=1)
    t2 = build_greens_table(grid, 0.6, refine=2)
    assert np.max(np.abs(t1.samples - t2.samples)) < 1e-9


def test_table_matches_point_evaluator(table64, grid64):
    t = table64(0.5)
    N, h = grid64.N, grid64.h
    for (di, dj) in ((5, -3), (-20, 11), (40, 40)):
        z = complex(di * h, dj * h)
        direct = greens_points(0.5, z)[0]
        assert t.samples[N + di, N + dj] == pytest.approx(direct, rel=1e-11)
        assert t.value(z) == t.samples[N + di, N + dj]


def test_table_origin_entry_is_cell_average(table64, grid64):
    # the z = 0 entry stores a finite cell average, not g(0) (divergent)
    t = table64(0.5)
    N, h = grid64.N, grid64.h
    val = t.samples[N, N]
    assert np.isfinite(val)
    # cell average of the log singularity dominates: right order of magnitude
    assert abs(val - np.log(h) / (2 * np.pi)) < 1.0


def test_table_value_rejects_off_grid(table64):
    t = table64(0.5)
    with pytest.raises(ValueError, match="difference-grid"):
        t.value(0.1234 + 0.0j)
    with pytest.raises(ValueError, match="outside"):
        t.value(100.0 + 0.0j)


def test_error_probe_recorded(table64):
    t = table64(0.5)
    assert t.record["error_estimate"] is not None
    assert t.record["error_estimate"] < 1e-5
    assert t.record["rule_id"].startswith("residue1d-gl16")


def test_near_T_flag():
    grid = make_grid(8.0, 16)
    t = build_greens_table(grid, complex(1.0 + 2e-4, 0.0), error_probe=False)
    assert t.record["near_T"]
    assert "flag" in t.record
    t2 = build_greens_table(grid, 0.5, error_probe=False)
    assert not t2.record["near_T"]


def test_greens_G_prefactor(table64):
    t = table64(0.5)
    z = 1.0 + 0.25j
    expect = np.exp(-0.5 * (0.5 * np.conj(z) + z / 0.5)) * t.value(z)
    assert greens_G(t, z) == pytest.approx(expect, rel=1e-15)


def test_save_load_roundtrip(tmp_path, table64):
    t = table64(0.5)
    path = tmp_path / "t.bin"
    save_table(t, path)
    t2 = load_table(path)
    np.testing.assert_array_equal(t2.samples, t.samples)
    assert t2.lam == t.lam
    assert t2.grid == t.grid
    assert t2.record["rule_id"] == t.record["rule_id"]


def test_build_cache_roundtrip(tmp_path):
    grid = make_grid(8.0, 16)
    t1 = build_greens_table(grid, 0.5, cache_dir=tmp_path)
    key = cache_key(0.5, grid, t1.record["rule_id"])
    assert (tmp_path / (key + ".bin")).exists()
    t2 = build_greens_table(grid, 0.5, cache_dir=tmp_path)
    np.testing.assert_array_equal(t1.samples, t2.samples)


def test_lambda_validation():
    with pytest.raises(ValueError):
        greens_points(0.0, np.array([1.0]))
    with pytest.raises(ValueError):
        singular_points(np.inf)
