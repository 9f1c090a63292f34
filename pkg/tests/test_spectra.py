import math

import numpy as np

from arnoldstab import field, grid, oracle, spectra, steady


def test_lambda_matches_radial_oracle(basis32, radial):
    lam = spectra.lambda_plain(basis32)
    lam_o = oracle.radial_eigen(radial, "lambda_Y")
    assert abs(lam.value / lam_o - 1.0) <= 0.01


def test_minimizer_normalized_and_flux_free(basis32):
    lam = spectra.lambda_plain(basis32)
    assert abs(grid.lp_norm(lam.minimizer) - 1.0) <= 1e-10
    assert np.abs(lam.flux_diag).max() <= 1e-9


def test_minimizer_leaves_zero_boundary_space(basis32):
    lam = spectra.lambda_plain(basis32)
    theta1 = lam.minimizer.values[basis32.domain.boundary_ids(1)][0]
    assert abs(theta1) > 0.05


def test_lambda_below_dirichlet_ground(basis32):
    lam = spectra.lambda_plain(basis32).value
    assert lam < spectra.dirichlet_ground(basis32.domain)


def test_shift_identity(basis32):
    lam = spectra.lambda_plain(basis32)
    for gamma in (0.45, -1.2):
        lc = spectra.lambda_c(basis32, gamma)
        assert abs(lc.value - lam.value - gamma) <= 1e-8
        align = abs(
            np.dot(lc.minimizer.interior_values, lam.minimizer.interior_values)
            * basis32.domain.h**2
        )
        assert align >= 1.0 - 1e-6


def test_euler_lagrange_residual(basis32):
    dom = basis32.domain
    c = 0.3
    res = spectra.lambda_c(basis32, c)
    el = (
        grid.neg_laplacian(res.minimizer).values[dom.interior_ids]
        + (c - res.value) * res.minimizer.values[dom.interior_ids]
    )
    assert math.sqrt(float(np.sum(el**2)) * dom.h**2) <= 1e-6


def test_reciprocity(basis32):
    lam = spectra.lambda_plain(basis32)
    big = spectra.lambda_big(basis32)
    assert big.value > 0
    assert abs(lam.value * big.value - 1.0) <= 1e-8


def test_maximizer_maps_to_minimizer(basis32):
    dom = basis32.domain
    lam = spectra.lambda_plain(basis32)
    big = spectra.lambda_big(basis32)
    Pphi = field.p_apply(basis32, big.minimizer)
    Pn = grid.lp_norm(Pphi)
    align = abs(
        np.dot(
            Pphi.interior_values / Pn, lam.minimizer.interior_values
        )
        * dom.h**2
    )
    assert align >= 1.0 - 1e-6


def test_check_stability_stable(basis32, lam32, stable_state32):
    rep = spectra.check_stability(basis32, stable_state32)
    assert rep.criterion_ok and rep.arnold_ok
    assert abs(rep.mu_min - 0.5 * lam32) <= 1e-6
    assert rep.delta0 >= lam32 - 0.5 * lam32 - 1e-6
    assert not rep.trivial_branch


def test_check_stability_violated(basis32, lam32):
    st = steady.steady_linear(basis32, 1.5 * lam32, [1.0])
    rep = spectra.check_stability(basis32, st)
    assert not rep.criterion_quadform_ok
    assert not rep.arnold_ok
    assert abs(rep.mu_min + 0.5 * lam32) <= 1e-6


def test_check_stability_flat_profile(basis32, lam32):
    st = steady.steady_linear(basis32, 0.0, [1.0])
    rep = spectra.check_stability(basis32, st)
    assert rep.trivial_branch
    assert abs(rep.mu_min - lam32) <= 1e-8
    assert rep.criterion_ok and not rep.arnold_min_ok


def test_weak_pos_def_lower_bound(basis32, lam32, stable_state32):
    d0 = spectra.weak_pos_def(basis32, stable_state32)
    assert d0 >= lam32 - 0.5 * lam32 - 1e-6


def test_weak_pos_def_near_threshold(basis32, lam32):
    st = steady.steady_linear(basis32, 0.99 * lam32, [1.0])
    assert spectra.weak_pos_def(basis32, st) > 0


def test_weak_pos_def_trivial_branch(basis32, lam32):
    st = steady.steady_linear(basis32, 0.0, [1.0])
    assert abs(spectra.weak_pos_def(basis32, st) - lam32) <= 1e-8


def test_eigenvalue_monotonicity(basis32):
    a = spectra.lambda_c(basis32, -0.4).value
    b = spectra.lambda_c(basis32, -0.9).value
    assert a > b


def test_criterion_report_csv(basis32, stable_state32):
    rep = spectra.check_stability(basis32, stable_state32)
    header = rep.csv_header().split(",")
    row = rep.csv_row().split(",")
    assert len(header) == len(row)
    lamL = float(row[header.index("lambda_Lambda_minus_1")])
    assert abs(lamL) <= 1e-8
