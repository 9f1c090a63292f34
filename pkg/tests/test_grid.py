import math

import numpy as np
import pytest

from arnoldstab import grid
from arnoldstab.errors import GridError

from conftest import random_interior_field


def test_annulus_interior_count_matches_area(annulus32):
    exact = 3 * math.pi * 32**2
    assert abs(annulus32.n_interior / exact - 1.0) < 0.05


def test_annulus_too_coarse_rejected():
    with pytest.raises(GridError):
        grid.build_annulus(1.0, 2.0, 4)


def test_annulus_precondition_rejected():
    with pytest.raises(GridError):
        grid.build_annulus(2.0, 1.0, 32)


def test_label_components_rectangle_with_hole():
    mask = np.ones((24, 24), dtype=bool)
    mask[9:14, 9:14] = False
    dom = grid.label_components(mask)
    assert dom.n_components == 2


def test_label_components_two_holes():
    mask = np.ones((24, 40), dtype=bool)
    mask[9:14, 8:13] = False
    mask[9:14, 26:31] = False
    dom = grid.label_components(mask)
    assert dom.n_components == 3


def test_label_components_disconnected_interior_rejected():
    mask = np.zeros((12, 24), dtype=bool)
    mask[2:10, 2:10] = True
    mask[2:10, 14:22] = True
    with pytest.raises(GridError):
        grid.label_components(mask)


def test_label_components_deterministic():
    mask = np.ones((20, 34), dtype=bool)
    mask[8:12, 6:10] = False
    mask[8:12, 22:26] = False
    a = grid.label_components(mask)
    b = grid.label_components(mask)
    assert np.array_equal(a.kinds, b.kinds)


def test_integrate_constant_annulus_area(annulus32):
    val = grid.integrate(annulus32.constant(1.0))
    assert abs(val / (3 * math.pi) - 1.0) < 0.02


def test_integrate_zero(annulus32):
    assert grid.integrate(annulus32.zeros()) == 0.0


def test_integrate_indicator_half_exact(annulus32):
    dom = annulus32
    n = dom.n_interior - (dom.n_interior % 2)
    vals = np.zeros(dom.n_nodes)
    vals[dom.interior_ids[: n // 2]] = 1.0
    half = grid.integrate(dom.field(vals))
    vals[dom.interior_ids[:n]] = 1.0
    full = grid.integrate(dom.field(vals))
    assert half == full / 2.0


def test_integrate_linear_and_monotone(annulus32, rng):
    dom = annulus32
    f = random_interior_field(dom, rng)
    gf = random_interior_field(dom, rng)
    lin = grid.integrate(f + gf) - (grid.integrate(f) + grid.integrate(gf))
    assert abs(lin) < 1e-12 * max(1.0, abs(grid.integrate(f)))
    bigger = grid.ScalarField(dom, f.values + np.where(dom.is_interior, 0.5, 0.0))
    assert grid.integrate(bigger) > grid.integrate(f)


def test_boundary_flux_constant_zero(annulus32):
    assert grid.boundary_flux(annulus32.constant(3.7), 1) == 0.0
    assert grid.boundary_flux(annulus32.constant(3.7), 0) == 0.0


def test_boundary_flux_component_range(annulus32):
    with pytest.raises(GridError):
        grid.boundary_flux(annulus32.zeros(), 5)


def test_summation_by_parts_exact(annulus32, rng):
    dom = annulus32
    u = random_interior_field(dom, rng).values
    v = random_interior_field(dom, rng).values
    tu, tv = 0.8, -1.1
    u[dom.boundary_ids(1)] = tu
    v[dom.boundary_ids(1)] = tv
    fu, fv = dom.field(u), dom.field(v)
    lhs = float(
        np.dot(grid.neg_laplacian(fu).values[dom.interior_ids], v[dom.interior_ids])
        * dom.h**2
    )
    rhs = grid.dirichlet_form(fu, fv) - tv * grid.boundary_flux(fu, 1)
    assert abs(lhs - rhs) <= 1e-10 * max(1.0, abs(lhs))


def test_field_length_validation(annulus32):
    with pytest.raises(GridError):
        grid.ScalarField(annulus32, np.ones(3))


def test_field_finite_validation(annulus32):
    vals = np.zeros(annulus32.n_nodes)
    vals[0] = np.nan
    with pytest.raises(GridError):
        grid.ScalarField(annulus32, vals)


def test_field_file_roundtrip(tmp_path, annulus16, rng):
    dom = annulus16
    f = random_interior_field(dom, rng)
    path = tmp_path / "field.sfld"
    grid.write_field(path, f)
    back = grid.read_field(path)
    assert np.array_equal(back.domain.kinds, dom.kinds)
    assert np.array_equal(back.values, f.values)
    attached = grid.read_field(path, domain=dom)
    assert attached.domain is dom


def test_field_file_geometry_mismatch(tmp_path, annulus16, annulus32):
    path = tmp_path / "field.sfld"
    grid.write_field(path, annulus16.zeros())
    with pytest.raises(GridError):
        grid.read_field(path, domain=annulus32)


def test_mask_rle_roundtrip(tmp_path):
    path = tmp_path / "mask.rle"
    path.write_text("RLE 6 4\n6 1 3 1 1 0 2 1 " + "6 1 " * 2)
    mask = grid.mask_from_rle(path)
    assert mask.shape == (4, 6)
    assert mask.sum() == 6 + 6 + 6 + 6 - 1


def test_mask_pgm(tmp_path):
    path = tmp_path / "mask.pgm"
    data = bytes([255] * 12 + [0] * 4 + [255] * 8)
    path.write_bytes(b"P5\n# comment\n6 4\n255\n" + data)
    mask = grid.mask_from_pgm(path)
    assert mask.shape == (4, 6)
    assert mask.sum() == 20


def test_label_components_thin_wall_ambiguous():
    # two holes separated by a single-node wall: labeling must be rejected
    mask = np.ones((16, 25), dtype=bool)
    mask[6:10, 6:11] = False
    mask[6:10, 12:17] = False
    with pytest.raises(GridError):
        grid.label_components(mask)
