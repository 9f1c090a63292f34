import numpy as np
import pytest

from arnoldstab import grid, harmonic, oracle, spectra, steady


@pytest.fixture(scope="session")
def annulus32():
    return grid.build_annulus(1.0, 2.0, 32)


@pytest.fixture(scope="session")
def basis32(annulus32):
    return harmonic.solve_basis(annulus32)


@pytest.fixture(scope="session")
def annulus16():
    return grid.build_annulus(1.0, 2.0, 16)


@pytest.fixture(scope="session")
def basis16(annulus16):
    return harmonic.solve_basis(annulus16)


@pytest.fixture(scope="session")
def lam32(basis32):
    return spectra.lambda_plain(basis32).value


@pytest.fixture(scope="session")
def stable_state32(basis32, lam32):
    return steady.steady_linear(basis32, 0.5 * lam32, [1.0])


@pytest.fixture(scope="session")
def radial():
    return oracle.RadialProblem(1.0, 2.0, 4096)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240801)


def random_interior_field(dom, rng, scale=1.0):
    vals = np.where(dom.is_interior, rng.standard_normal(dom.n_nodes) * scale, 0.0)
    return grid.ScalarField(dom, vals)
