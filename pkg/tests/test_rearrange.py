from itertools import permutations

import numpy as np
import pytest

from arnoldstab import functionals as fn, grid, harmonic, rearrange as ra, spectra, steady
from arnoldstab.errors import GridError


def test_random_swaps_zero_is_identity(stable_state32):
    smp = ra.random_swaps(stable_state32.omega_bar, 0, 5)
    assert np.array_equal(smp.w.values, stable_state32.omega_bar.values)
    assert smp.distance_lp == 0.0


def test_random_swaps_exact_rearrangement(stable_state32):
    smp = ra.random_swaps(stable_state32.omega_bar, 137, 99)
    assert np.array_equal(
        np.sort(smp.w.interior_values), np.sort(stable_state32.omega_bar.interior_values)
    )
    assert ra.histogram_distance(smp.w, stable_state32.omega_bar) == 0.0


def test_random_swaps_deterministic(stable_state32):
    a = ra.random_swaps(stable_state32.omega_bar, 25, 123)
    b = ra.random_swaps(stable_state32.omega_bar, 25, 123)
    assert np.array_equal(a.w.values, b.w.values)


def test_swap_distance_monotone_in_expectation(stable_state32):
    means = []
    for k in (1, 8, 64, 512):
        dists = [
            ra.random_swaps(stable_state32.omega_bar, k, seed).distance_lp
            for seed in range(100)
        ]
        means.append(np.mean(dists))
    assert means[0] <= means[1] <= means[2] <= means[3]
    # sublinear growth: 8x more swaps gives far less than 8x the distance
    assert means[3] <= 4.0 * means[2]


def test_swaps_within_radius(stable_state32):
    target = 0.05 * grid.lp_norm(stable_state32.omega_bar)
    smp = ra.swaps_within_radius(stable_state32.omega_bar, target, 17)
    assert 0.0 < smp.distance_lp < target
    assert np.array_equal(
        np.sort(smp.w.interior_values), np.sort(stable_state32.omega_bar.interior_values)
    )


def _line_domain(n):
    return grid.label_components(np.ones((3, n + 2), dtype=bool), h=1.0)


def test_hl_coupling_example():
    dom = _line_domain(3)
    wt = dom.zeros()
    wt.values[dom.interior_ids] = [0.0, 5.0, 1.0]
    v = ra.hl_coupling([1, 2, 3], wt)
    assert list(v.values[dom.interior_ids]) == [1.0, 3.0, 2.0]
    assert float(np.dot(v.values[dom.interior_ids], wt.values[dom.interior_ids])) == 17.0


def test_hl_coupling_constant_ties_index_order():
    dom = _line_domain(4)
    wt = dom.constant(1.0)
    v = ra.hl_coupling([4.0, 1.0, 3.0, 2.0], wt)
    assert list(v.values[dom.interior_ids]) == [4.0, 3.0, 2.0, 1.0]


def test_hl_coupling_beats_random_permutations(stable_state32, rng):
    w = stable_state32.omega_bar
    dom = w.domain
    v0 = rng.standard_normal(dom.n_interior)
    best = ra.hl_coupling(v0, w)
    ip_best = float(np.dot(best.values[dom.interior_ids], w.values[dom.interior_ids]))
    for _ in range(100):
        perm = rng.permutation(v0)
        assert float(np.dot(perm, w.values[dom.interior_ids])) <= ip_best + 1e-12


def test_hl_coupling_brute_force_small():
    rng = np.random.default_rng(3)
    for n in (2, 4, 6):
        dom = _line_domain(n)
        wt = dom.zeros()
        wt.values[dom.interior_ids] = np.round(rng.standard_normal(n), 3)
        v0 = np.round(rng.standard_normal(n), 3)
        got = ra.hl_coupling(v0, wt)
        ip = float(np.dot(got.values[dom.interior_ids], wt.values[dom.interior_ids]))
        brute = max(
            float(np.dot(np.array(p), wt.values[dom.interior_ids]))
            for p in permutations(v0)
        )
        assert ip == brute


def test_hl_coupling_size_mismatch(stable_state32):
    with pytest.raises(GridError):
        ra.hl_coupling([1.0, 2.0], stable_state32.omega_bar)


def test_histogram_shift_counting_oracle(stable_state32):
    w = stable_state32.omega_bar
    dom = w.domain
    bins = 16
    shifted = grid.ScalarField(dom, w.values + 0.01)
    d = ra.histogram_distance(w, shifted, bins)
    lo = min(w.interior_values.min(), shifted.interior_values.min())
    hi = max(w.interior_values.max(), shifted.interior_values.max())
    edges = np.linspace(lo, hi, bins + 1)
    h1, _ = np.histogram(w.interior_values, bins=edges)
    h2, _ = np.histogram(shifted.interior_values, bins=edges)
    assert d == float(np.abs(h1 - h2).sum()) * dom.h**2


def test_histogram_disjoint_supports(stable_state32):
    w = stable_state32.omega_bar
    dom = w.domain
    far = grid.ScalarField(dom, w.values + 100.0)
    assert abs(ra.histogram_distance(w, far, 8) - 2 * dom.area) <= 1e-9


def test_local_max_probe_no_violations(basis32, stable_state32):
    radius = 0.1 * grid.lp_norm(stable_state32.omega_bar)
    rep = ra.local_max_probe(basis32, stable_state32, radius, 40, 11)
    assert rep.violations == 0
    assert rep.max_excess <= 0.0
    assert all(row[2] < radius for row in rep.rows)


def test_local_max_probe_requires_certified(basis32, stable_state32):
    import dataclasses

    bad = dataclasses.replace(stable_state32, certified=False)
    with pytest.raises(GridError):
        ra.local_max_probe(basis32, bad, 0.1, 5, 0)


def test_exhaustive_probe_tiny_grid():
    tiny = grid.label_components(np.ones((4, 6), dtype=bool), h=1.0)
    assert tiny.n_interior == 8
    tb = harmonic.solve_basis(tiny)
    lam_t = spectra.lambda_plain(tb).value
    st = steady.steady_picard(tb, fn.GFunc.affine(0.3 * lam_t, 1.0), np.zeros(0))
    assert st.certified
    rep = ra.local_max_probe(tb, st, 0.0, 0, 1, exhaustive=True)
    assert rep.n_samples == 28  # all transpositions of 8 cells
    assert rep.max_excess <= 1e-12


def test_supporting_probe_chain(basis32, stable_state32):
    lp = fn.legendre(stable_state32.g)
    rep = ra.supporting_probe(basis32, stable_state32, stable_state32.g, 15, 21, lp)
    assert rep.violations == 0
    mu_res = max(row[8] for row in rep.rows)
    assert mu_res <= 1e-8


def test_probe_report_csv(tmp_path, basis32, stable_state32):
    rep = ra.local_max_probe(basis32, stable_state32, 0.05, 5, 3)
    path = tmp_path / "probe.csv"
    rep.write_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0].split(",") == list(rep.columns)
    assert len(lines) == 1 + rep.n_samples
