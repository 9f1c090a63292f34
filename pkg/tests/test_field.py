import math

import numpy as np
import pytest

from arnoldstab import field, grid, oracle
from arnoldstab.errors import GridError

from conftest import random_interior_field


def test_green_zero(annulus32):
    u = field.green_solve(annulus32, annulus32.zeros())
    assert np.abs(u.values).max() == 0.0


def test_green_linearity(annulus32, rng):
    phi = random_interior_field(annulus32, rng)
    u1 = field.green_solve(annulus32, phi)
    u2 = field.green_solve(annulus32, 2.5 * phi)
    assert np.abs(u2.values - 2.5 * u1.values).max() <= 1e-10


def test_green_matches_radial_oracle(annulus32, radial):
    dom = annulus32
    u2 = field.green_solve(dom, dom.constant(1.0))
    prof = oracle.radial_green(radial, lambda r: np.ones_like(r))
    ref = np.interp(np.hypot(dom.node_x, dom.node_y)[dom.interior_ids], radial.r, prof)
    err = np.abs(u2.values[dom.interior_ids] - ref).max() / np.abs(prof).max()
    assert err <= 0.01


def test_p_symmetry_and_positivity(basis32, rng):
    dom = basis32.domain
    worst = 0.0
    for _ in range(20):
        f1 = random_interior_field(dom, rng)
        f2 = random_interior_field(dom, rng)
        P1 = field.p_apply(basis32, f1)
        P2 = field.p_apply(basis32, f2)
        ip12 = grid.integrate(dom.field(f1.values * P2.values))
        ip21 = grid.integrate(dom.field(f2.values * P1.values))
        worst = max(worst, abs(ip12 - ip21) / (grid.lp_norm(f1) * grid.lp_norm(f2)))
        assert grid.integrate(dom.field(f1.values * P1.values)) > 0.0
    assert worst <= 1e-8


def test_p_inverse_is_neg_laplacian(basis32, rng):
    dom = basis32.domain
    phi = random_interior_field(dom, rng)
    Pf = field.p_apply(basis32, phi)
    defect = np.abs(
        grid.neg_laplacian(Pf).values[dom.interior_ids] - phi.values[dom.interior_ids]
    ).max()
    assert defect <= 1e-8


def test_p_zero_flux(basis32, rng):
    Pf = field.p_apply(basis32, random_interior_field(basis32.domain, rng))
    assert abs(grid.boundary_flux(Pf, 1)) <= 1e-10


def test_p_condensed_equals_formula(basis32, rng):
    """Two independent routes to the same operator: the flux-constrained
    solve and the zero-boundary solve plus the basis correction."""
    dom = basis32.domain
    phi = random_interior_field(dom, rng)
    Pf = field.p_apply(basis32, phi)
    Gf = field.green_solve(dom, phi)
    formula = Gf.values.copy()
    for i in range(basis32.n):
        moment = grid.integrate(dom.field(basis32.zetas[i].values * phi.values))
        for j in range(basis32.n):
            formula += basis32.q[i, j] * moment * basis32.zetas[j].values
    assert np.abs(formula - Pf.values).max() <= 1e-8


def test_p_energy_identity(basis32, rng):
    """Inner product against the operator equals the Dirichlet energy of the
    result (zero-flux structure makes the boundary terms vanish)."""
    dom = basis32.domain
    phi = random_interior_field(dom, rng)
    Pf = field.p_apply(basis32, phi)
    ip = grid.integrate(dom.field(phi.values * Pf.values))
    en = grid.dirichlet_form(Pf, Pf)
    assert abs(ip - en) <= 1e-8 * max(1.0, abs(ip))


def test_h_field_zero(basis32):
    assert np.abs(field.h_field(basis32, [0.0]).values).max() == 0.0


def test_h_field_closed_form(basis32):
    dom = basis32.domain
    a1 = 0.9
    ha = field.h_field(basis32, [a1])
    r = np.hypot(dom.node_x, dom.node_y)[dom.interior_ids]
    exact = a1 / (2 * math.pi) * np.log(r / 2.0)
    err = np.abs(ha.values[dom.interior_ids] - exact).max() / np.abs(exact).max()
    assert err <= 0.01


def test_h_field_linearity(basis32):
    h1 = field.h_field(basis32, [1.0])
    h2 = field.h_field(basis32, [-2.0])
    assert np.abs(h2.values + 2.0 * h1.values).max() <= 1e-12


def test_stream_zero(basis32):
    sol = field.stream_solve(basis32, basis32.domain.zeros(), [0.0])
    assert np.abs(sol.psi.values).max() <= 1e-14


def test_stream_matches_radial_oracle(basis32, radial):
    dom = basis32.domain
    sol = field.stream_solve(basis32, dom.constant(1.0), [0.5])
    prof = oracle.radial_stream(radial, lambda r: np.ones_like(r), 0.5)
    ref = np.interp(np.hypot(dom.node_x, dom.node_y)[dom.interior_ids], radial.r, prof)
    err = np.abs(sol.psi.values[dom.interior_ids] - ref).max() / np.abs(prof).max()
    assert err <= 0.01
    assert sol.residual <= 1e-6
    assert sol.flux_errors.max() <= 1e-9


def test_stream_flux_identity(basis32, rng):
    sol = field.stream_solve(basis32, random_interior_field(basis32.domain, rng), [0.3])
    assert abs(grid.boundary_flux(sol.psi, 1) + 0.3) <= 1e-9


def test_stream_linearity(basis32, rng):
    dom = basis32.domain
    w1 = random_interior_field(dom, rng)
    w2 = random_interior_field(dom, rng)
    s1 = field.stream_solve(basis32, w1, [0.4])
    s2 = field.stream_solve(basis32, w2, [-0.1])
    s12 = field.stream_solve(basis32, w1 + w2, [0.3])
    assert np.abs(s12.psi.values - s1.psi.values - s2.psi.values).max() <= 1e-9


def test_velocity_constant_field(annulus32):
    v = field.velocity(annulus32.constant(4.2))
    assert np.abs(v.vx).max() <= 1e-12 and np.abs(v.vy).max() <= 1e-12


def test_velocity_azimuthal_speed(basis32):
    dom = basis32.domain
    gam = 0.8
    sol = field.stream_solve(basis32, dom.zeros(), [gam])
    v = field.velocity(sol.psi)
    ii = dom.interior_ids
    r = np.hypot(dom.node_x, dom.node_y)[ii]
    speed = np.hypot(v.vx, v.vy)[ii]
    exact = gam / (2 * math.pi * r)
    assert (np.abs(speed - exact) / exact).max() <= 0.02


def test_velocity_divergence_small(basis32, stable_state32):
    dom = basis32.domain
    v = field.velocity(stable_state32.psi_bar)
    div = field.divergence(v)
    vals = div.values[dom.interior_ids]
    r = np.hypot(dom.node_x, dom.node_y)[dom.interior_ids]
    deep = (r > 1.2) & (r < 1.8)
    assert np.abs(vals[deep]).max() <= 1e-10  # central stencils commute
    # the wall ring has measure O(h), so the average defect is O(h)
    assert grid.lp_norm(div, 1.0) / dom.area <= 2.0 * dom.h


def test_circulation_pure_flow(basis32):
    gam = 0.8
    sol = field.stream_solve(basis32, basis32.domain.zeros(), [gam])
    c = field.circulation(field.velocity(sol.psi), 1)
    assert abs(c / gam - 1.0) <= 0.02


def test_circulation_zero_velocity(annulus32):
    v = field.VelocityField(annulus32, np.zeros(annulus32.n_nodes), np.zeros(annulus32.n_nodes))
    assert field.circulation(v, 1) == 0.0


def test_circulation_additivity(basis32):
    dom = basis32.domain
    s1 = field.stream_solve(basis32, dom.zeros(), [0.5])
    s2 = field.stream_solve(basis32, dom.constant(1.0), [0.2])
    v1 = field.velocity(s1.psi)
    v2 = field.velocity(s2.psi)
    v12 = field.VelocityField(dom, v1.vx + v2.vx, v1.vy + v2.vy)
    assert abs(
        field.circulation(v12, 1) - field.circulation(v1, 1) - field.circulation(v2, 1)
    ) <= 1e-12


def test_circulation_with_vorticity_correction(basis32):
    sol = field.stream_solve(basis32, basis32.domain.constant(1.0), [0.3])
    c = field.circulation(field.velocity(sol.psi), 1, omega=sol.omega)
    assert abs(c - 0.3) <= 0.02 * max(1.0, 0.3)


def test_circulation_component_validation(basis32):
    v = field.velocity(basis32.zetas[0])
    with pytest.raises(GridError):
        field.circulation(v, 0)


def test_kinetic_energy_positive(basis32):
    sol = field.stream_solve(basis32, basis32.domain.zeros(), [1.0])
    assert field.kinetic_energy(field.velocity(sol.psi)) > 0.0
