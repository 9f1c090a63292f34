"""Acceptance suite: one test per shipping criterion, each printing its
PASS/FAIL line with the measured numbers.

Criteria 9 and 10 integrate the transport scheme over ten turnover times and
dominate the runtime of this module.
"""

import pytest

from arnoldstab import acceptance


@pytest.fixture(scope="module")
def ctx(tmp_path_factory):
    out = tmp_path_factory.mktemp("acceptance")
    return acceptance.AcceptanceContext(out_dir=str(out), quick=False, seed=20240801)


def _run(ctx, cid):
    res = acceptance.CRITERIA[cid](ctx)
    print()
    print(res.line())
    assert res.passed, res.line()


def test_criterion_01_harmonic_basis(ctx):
    _run(ctx, 1)


def test_criterion_02_operator_identities(ctx):
    _run(ctx, 2)


def test_criterion_03_stream_solve(ctx):
    _run(ctx, 3)


def test_criterion_04_spectra(ctx):
    _run(ctx, 4)


def test_criterion_05_criterion_logic(ctx):
    _run(ctx, 5)


def test_criterion_06_functional_chain(ctx):
    _run(ctx, 6)


def test_criterion_07_local_maximizer(ctx):
    _run(ctx, 7)


def test_criterion_08_sorting_coupling(ctx):
    _run(ctx, 8)


def test_criterion_09_conservation(ctx):
    _run(ctx, 9)


def test_criterion_10_stability_experiment(ctx):
    _run(ctx, 10)


def test_criterion_11_determinism(ctx):
    _run(ctx, 11)
