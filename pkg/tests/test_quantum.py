import math
from fractions import Fraction

import numpy as np
import pytest

from dirac_workbench.quantum import (
    COS,
    SIN,
    RingParams,
    SpectrumResult,
    ThetaOperator,
    algebra_residuals,
    analytic_spectrum,
    fourier_spectrum,
    grid_hamiltonian,
    grid_spectrum,
    ground_energy,
    hermiticity_defect,
    nonhermitian_ordering_demo,
    operator_matrix,
)

UNIT = RingParams()
ODD = RingParams(r0=2.0, m=3.0, hbar=0.7, alpha=0.25, beta=0.125)


# -- parameters ----------------------------------------------------------------


def test_ring_params_validation():
    with pytest.raises(ValueError):
        RingParams(r0=0)
    with pytest.raises(ValueError):
        RingParams(m=-1)
    with pytest.raises(ValueError):
        RingParams(alpha=float("nan"))
    p = RingParams(alpha=2.75, beta=1.25)
    assert p.beta == 0.25 and p.alpha_bar == 0.75 and p.alpha == 2.75
    assert RingParams(beta=1.3).beta == 0.3


def test_e0():
    assert UNIT.e0 == 0.125
    assert ODD.e0 == pytest.approx(0.49 / (8 * 3 * 4))


# -- analytic spectrum ---------------------------------------------------------


def test_unit_levels():
    s = analytic_spectrum(UNIT, 5)
    assert list(s.levels) == [0.125, 0.625, 0.625, 2.125, 2.125]
    assert s.exact == [Fraction(1, 8), Fraction(5, 8), Fraction(5, 8), Fraction(17, 8), Fraction(17, 8)]
    assert sorted(s.labels[:3]) == [-1, 0, 1]
    assert s.method == "analytic"


def test_half_flux_degenerate_ground():
    s = analytic_spectrum(RingParams(alpha=0.5), 2)
    assert list(s.levels) == [0.25, 0.25]


def test_formula_general_params():
    s = analytic_spectrum(ODD, 6)
    unit = 0.49 / (2 * 3 * 4)
    for e, n in zip(s.levels, s.labels):
        assert e == pytest.approx(unit * (n + 0.125 - 0.25) ** 2 + ODD.e0, rel=1e-15)
    assert np.all(np.diff(s.levels) >= 0)


def test_only_beta_minus_alpha_matters():
    base = analytic_spectrum(UNIT, 7).exact
    assert analytic_spectrum(RingParams(alpha=0.375, beta=0.375), 7).exact == base
    rng = np.random.default_rng(5)
    for c in rng.uniform(-3, 3, 10):
        a = analytic_spectrum(RingParams(alpha=0.2, beta=0.7), 6).levels
        b = analytic_spectrum(RingParams(alpha=0.2 + c, beta=0.7 + c), 6).levels
        assert np.allclose(a, b, rtol=1e-12, atol=0)


def test_gauge_periodicity_exact():
    for a in [0.0, 0.1, 0.5, 0.8125]:
        assert analytic_spectrum(RingParams(alpha=a), 7).exact == analytic_spectrum(RingParams(alpha=a + 1), 7).exact


def test_e0_shift_exact():
    for p in [UNIT, ODD, RingParams(alpha=0.3)]:
        with_e0 = analytic_spectrum(p, 6).exact
        without = analytic_spectrum(p, 6, include_e0=False).exact
        shift = p.exact("hbar") ** 2 / (8 * p.exact("m") * p.exact("r0") ** 2)
        assert [a - b for a, b in zip(with_e0, without)] == [shift] * 6


def test_levels_argument():
    with pytest.raises(ValueError):
        analytic_spectrum(UNIT, 0)


def test_spectrum_result_invariants():
    with pytest.raises(ValueError):
        SpectrumResult([1.0, 0.5], "analytic", UNIT)
    with pytest.raises(ValueError):
        SpectrumResult([0.5, float("inf")], "analytic", UNIT)
    js = analytic_spectrum(UNIT, 2).to_json()
    assert js == {"params": {"r0": 1.0, "m": 1.0, "hbar": 1.0, "alpha": 0.0, "beta": 0.0}, "method": "analytic", "levels": [0.125, 0.625]}


# -- ground energy ----------------------------------------------------------------


def test_ground_energy_examples():
    assert ground_energy(UNIT) == 0.125
    assert ground_energy(RingParams(alpha=0.5)) == 0.25
    assert ground_energy(RingParams(alpha=1.0)) == ground_energy(UNIT)


def test_ground_energy_is_spectrum_minimum():
    for a in np.arange(100) / 100:
        p = RingParams(alpha=float(a))
        assert abs(ground_energy(p) - min(analytic_spectrum(p, 5).levels)) <= 1e-14


# -- operator matrices --------------------------------------------------------------


def test_x_matrix():
    x = operator_matrix("x", ODD, 4)
    assert x.dim == 9 and x.N == 4 and x.basis == list(range(-4, 5))
    expected = np.zeros((9, 9))
    for k in range(8):
        expected[k, k + 1] = expected[k + 1, k] = ODD.r0 / 2
    assert np.array_equal(x.matrix, expected)


def test_lz_and_h_diagonal():
    p = RingParams(alpha=0.3)
    n = np.arange(-6, 7)
    lz = operator_matrix("Lz", p, 6).matrix
    h = operator_matrix("H", p, 6).matrix
    assert np.allclose(lz, np.diag(n - 0.3), atol=1e-15, rtol=0)
    assert np.allclose(h, np.diag((n - 0.3) ** 2 / 2 + 0.125), atol=1e-14, rtol=0)


def test_h_diagonal_with_twist():
    n = np.arange(-5, 6)
    h = operator_matrix("H", ODD, 5).matrix
    ref = ODD.hbar**2 * (n + ODD.beta - ODD.alpha) ** 2 / (2 * ODD.m * ODD.r0**2) + ODD.e0
    assert np.allclose(h, np.diag(ref), atol=1e-14, rtol=0)


def test_bandwidth_at_most_two():
    for which in ["x", "y", "px", "py", "Lz", "H", "phi3W"]:
        m = operator_matrix(which, ODD, 8).matrix
        i, j = np.nonzero(np.abs(m) > 0)
        assert np.all(np.abs(i - j) <= 2)


@pytest.mark.parametrize("alpha", [0.0, 0.25, 0.7])
@pytest.mark.parametrize("N", [2, 8, 16])
def test_phi3w_vanishes(alpha, N):
    assert np.abs(operator_matrix("phi3W", RingParams(alpha=alpha), N).matrix).max() <= 1e-14


def test_operator_matrix_validation():
    with pytest.raises(ValueError):
        operator_matrix("x", UNIT, 1)
    with pytest.raises(ValueError):
        operator_matrix("z", UNIT, 4)


def test_theta_operator_composition():
    d = ThetaOperator.derivative()
    cos = ThetaOperator.multiplication(COS)
    sin = ThetaOperator.multiplication(SIN)
    comm = d.commutator(cos)  # [d, cos] = -sin
    assert comm.coeffs == (-1 * sin).coeffs
    sq = cos @ cos + sin @ sin
    assert sq.coeffs.keys() == {0} and sq.coeffs[0] == {0: 1.0}


def test_hermitian_observables():
    for which in ["x", "y", "px", "py", "Lz", "H"]:
        assert hermiticity_defect(operator_matrix(which, UNIT, 16)) == 0.0
        assert hermiticity_defect(operator_matrix(which, ODD, 16)) <= 1e-15


# -- algebra ---------------------------------------------------------------------


@pytest.mark.parametrize("N", [8, 16, 32])
@pytest.mark.parametrize("p", [UNIT, RingParams(alpha=0.25), ODD])
def test_algebra_residuals(N, p):
    rep = algebra_residuals(p, N)
    assert len(rep["commutator_residuals"]) == 8
    assert max(rep["commutator_residuals"].values()) <= 1e-12
    assert rep["phi3W_max_norm"] <= 1e-14


def test_algebra_residuals_need_n4():
    with pytest.raises(ValueError):
        algebra_residuals(UNIT, 3)


def test_wrong_relation_is_detected():
    # sanity check on the residual machinery: [x, px] is not i*hbar
    x = operator_matrix("x", UNIT, 8).matrix
    px = operator_matrix("px", UNIT, 8).matrix
    wrong = x @ px - px @ x - 1j * np.eye(17)
    assert np.abs(wrong[2:-2, 2:-2]).max() > 0.1


def test_ordering_demo_frozen_values():
    rep = nonhermitian_ordering_demo(UNIT, 16)
    b = rep["branches"]
    for comp in ("px", "py"):
        assert b["weyl"][comp]["hermiticity_defect"] == 0.0
        assert b["x.p"][comp]["hermiticity_defect"] == pytest.approx(0.5, abs=1e-15)
        assert b["p.x"][comp]["hermiticity_defect"] == pytest.approx(0.5, abs=1e-15)
        assert b["x.p"][comp]["skew_coefficient"] == pytest.approx(-1.0, abs=1e-15)
        assert b["p.x"][comp]["skew_coefficient"] == pytest.approx(1.0, abs=1e-15)
        assert b["weyl"][comp]["matches_operator"] == 0.0


def test_ordering_defect_scales_with_hbar_over_r0():
    rep = nonhermitian_ordering_demo(ODD, 12)
    for branch, sign in (("x.p", -1), ("p.x", 1)):
        entry = rep["branches"][branch]["px"]
        assert entry["hermiticity_defect"] == pytest.approx(ODD.hbar / (2 * ODD.r0), rel=1e-12)
        assert entry["skew_coefficient"] == pytest.approx(sign * ODD.hbar / ODD.r0**2, rel=1e-12)
    assert rep["branches"]["weyl"]["px"]["hermiticity_defect"] <= 1e-15


# -- numerical spectra ---------------------------------------------------------------


def test_fourier_spectrum_matches_analytic():
    for p in [UNIT, ODD]:
        f = fourier_spectrum(p, 8, 7)
        assert f.method == "fourier-truncated"
        assert np.allclose(f.levels, analytic_spectrum(p, 7).levels, atol=1e-13, rtol=0)


def test_grid_hamiltonian_structure():
    h = grid_hamiltonian(ODD, 32)
    assert np.allclose(h, h.conj().T)
    with pytest.raises(ValueError):
        grid_hamiltonian(UNIT, 8)


def test_grid_ground_state():
    g = grid_spectrum(UNIT, 64, 3)
    assert g.method == "grid-fd"
    assert abs(g.levels[0] - 0.125) < 5e-4


def test_grid_second_order_convergence():
    ref = analytic_spectrum(UNIT, 5).levels
    errs = [np.abs(grid_spectrum(UNIT, n, 5).levels - ref).max() for n in (32, 64, 128)]
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    assert all(3.8 < r < 4.2 for r in ratios)


def test_grid_error_follows_leading_truncation_term():
    # E_h(k) = (2 / h^2)(1 - cos(k h)) * hbar^2/(2 m r0^2), so E - E_h ~ k^4 h^2 / 24 in these units
    n = 128
    h = 2 * math.pi / n
    g = grid_spectrum(UNIT, n, 5).levels
    ref = analytic_spectrum(UNIT, 5).levels
    for k, idx in ((1, 1), (2, 3)):
        exact_gap = ref[idx] - g[idx]
        model = 0.5 * (k**2 - (2 / h**2) * (1 - math.cos(k * h)))
        assert exact_gap == pytest.approx(model, rel=1e-8)


def test_grid_gauge_and_shift_invariance():
    base = grid_spectrum(UNIT, 64, 5).levels
    assert np.abs(grid_spectrum(RingParams(alpha=1.0), 64, 5).levels - base).max() <= 1e-10
    assert np.abs(grid_spectrum(RingParams(alpha=0.3, beta=0.3), 64, 5).levels - base).max() <= 1e-10


def test_grid_with_flux_matches_analytic():
    p = RingParams(alpha=0.3, beta=0.1)
    g = grid_spectrum(p, 64, 3).levels
    assert np.abs(g - analytic_spectrum(p, 3).levels).max() < 2e-3
