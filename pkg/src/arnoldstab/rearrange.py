"""Discrete rearrangement classes and energy probes.

On a uniform grid every permutation of the interior cell values is an exact
measure-preserving rearrangement, so sampling the rearrangement class reduces
to sampling permutations.  The probes test the variational heart of the
stability theory: a certified stable steady vorticity should strictly
maximize the kinetic energy among nearby rearrangements, and the supporting
functionals should dominate the energy-Casimir functional with equality at
the steady state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dfield
from itertools import combinations

import numpy as np

from . import grid as g
from .errors import GridError
from .functionals import (
    GFunc,
    LegendrePair,
    energy,
    energy_casimir,
    supporting_d,
    supporting_d_hat,
)
from .field import h_field, p_apply


@dataclass
class RearrangementSample:
    """A rearranged field with its provenance and distance to the source."""

    w: g.ScalarField
    distance_lp: float
    swap_count: int
    seed: int
    p: float = 2.0


@dataclass
class ProbeReport:
    """Outcome of a rearrangement probe: per-sample rows plus a verdict."""

    kind: str
    seed: int
    n_samples: int
    tol: float
    violations: int
    max_excess: float
    clean_radius: float
    columns: tuple
    rows: list = dfield(default_factory=list)

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write(",".join(self.columns) + "\n")
            for row in self.rows:
                fh.write(",".join(_cell(c) for c in row) + "\n")


def _cell(c):
    if isinstance(c, (bool, np.bool_)):
        return str(int(c))
    if isinstance(c, (float, np.floating)):
        return repr(float(c))
    return str(c)


def random_swaps(omega_bar: g.ScalarField, k: int, seed: int, p: float = 2.0) -> RearrangementSample:
    """k uniformly random transpositions of the interior cell values."""
    if k < 0:
        raise GridError("swap count must be nonnegative")
    dom = omega_bar.domain
    rng = np.random.default_rng(seed)
    vals = omega_bar.values.copy()
    ii = dom.interior_ids
    n = len(ii)
    pairs = rng.integers(0, n, size=(int(k), 2))
    for i, j in pairs:
        a, bnd = ii[i], ii[j]
        vals[a], vals[bnd] = vals[bnd], vals[a]
    w = g.ScalarField(dom, vals)
    dist = g.lp_norm(w - omega_bar, p)
    return RearrangementSample(w, dist, int(k), int(seed), p)


def swaps_within_radius(
    omega_bar: g.ScalarField,
    radius: float,
    seed: int,
    p: float = 2.0,
    max_swaps: int | None = None,
) -> RearrangementSample:
    """Random transpositions accepted while the Lp distance stays below radius.

    Distance is tracked incrementally; the walk stops after a run of rejected
    proposals or at max_swaps.
    """
    dom = omega_bar.domain
    rng = np.random.default_rng(seed)
    vals = omega_bar.values.copy()
    base = omega_bar.values
    ii = dom.interior_ids
    n = len(ii)
    h2 = dom.h * dom.h
    if max_swaps is None:
        max_swaps = 4 * n
    dist_p = 0.0
    swaps = 0
    rejected = 0
    while swaps < max_swaps and rejected < 32:
        i, j = rng.integers(0, n, size=2)
        a, bnd = ii[i], ii[j]
        old = (abs(vals[a] - base[a]) ** p + abs(vals[bnd] - base[bnd]) ** p) * h2
        new = (abs(vals[bnd] - base[a]) ** p + abs(vals[a] - base[bnd]) ** p) * h2
        if (dist_p - old + new) ** (1.0 / p) < radius:
            vals[a], vals[bnd] = vals[bnd], vals[a]
            dist_p = dist_p - old + new
            swaps += 1
            rejected = 0
        else:
            rejected += 1
    w = g.ScalarField(dom, vals)
    return RearrangementSample(w, g.lp_norm(w - omega_bar, p), swaps, int(seed), p)


def hl_coupling(v0, w_tilde: g.ScalarField) -> g.ScalarField:
    """Sorting coupling: assign the multiset v0 to cells so that the inner
    product with w_tilde is maximal (largest values on the largest cells of
    w_tilde; ties broken by node index)."""
    dom = w_tilde.domain
    v0 = np.asarray(v0, dtype=float).ravel()
    ii = dom.interior_ids
    if v0.size != len(ii):
        raise GridError(
            "multiset size %d does not match interior cell count %d"
            % (v0.size, len(ii))
        )
    order = np.argsort(-w_tilde.values[ii], kind="stable")
    out = np.zeros(dom.n_nodes)
    ranked = np.sort(v0)[::-1]
    tgt = np.empty(len(ii))
    tgt[order] = ranked
    out[ii] = tgt
    return g.ScalarField(dom, out)


def histogram_distance(w1: g.ScalarField, w2: g.ScalarField, bins: int | None = None) -> float:
    """L1 distance between the value histograms of two fields, computed on
    shared bin edges spanning both ranges; each interior cell carries mass h^2.
    Zero exactly for rearrangement pairs.

    With bins=None the count follows Sturges' rule for the cell count, the
    standard choice for comparing empirical distributions of n samples.
    """
    dom = w1.domain
    if bins is None:
        bins = max(8, int(math.log2(max(dom.n_interior, 2))) + 1)
    if bins < 1:
        raise GridError("need at least one bin")
    a = w1.values[dom.interior_ids]
    b = w2.values[w2.domain.interior_ids]
    lo = min(a.min(), b.min())
    hi = max(a.max(), b.max())
    if hi <= lo:
        hi = lo + max(1e-12, 1e-12 * abs(lo))
    edges = np.linspace(lo, hi, bins + 1)
    h1, _ = np.histogram(a, bins=edges)
    h2c, _ = np.histogram(b, bins=edges)
    h2 = dom.h * dom.h
    return float(np.abs(h1 - h2c).sum()) * h2


def local_max_probe(
    basis,
    state,
    radius: float,
    n_samples: int,
    seed: int,
    tol_factor: float = 1e-8,
    p: float = 2.0,
    exhaustive: bool | None = None,
) -> ProbeReport:
    """Energy comparison over rearrangements near the steady vorticity.

    Reports every sample with E(w, a) > E(steady) + tol as a violation; a
    certified stable state should produce none for small radii.  On tiny
    grids (at most 8 interior cells, or on request) all transpositions are
    enumerated instead of sampling.
    """
    if not state.certified:
        raise GridError("probe requires a certified steady state")
    dom = basis.domain
    wbar = state.omega_bar
    e0 = energy(basis, wbar, state.a)
    tol = tol_factor * max(1.0, abs(e0))
    if exhaustive is None:
        exhaustive = dom.n_interior <= 8

    columns = ("seed", "swap_count", "distance", "energy", "delta_e", "violation")
    rows = []
    violations = 0
    max_excess = -math.inf
    clean = 0.0
    if exhaustive:
        ii = dom.interior_ids
        for i, j in combinations(range(len(ii)), 2):
            vals = wbar.values.copy()
            vals[ii[i]], vals[ii[j]] = vals[ii[j]], vals[ii[i]]
            w = g.ScalarField(dom, vals)
            dist = g.lp_norm(w - wbar, p)
            e = energy(basis, w, state.a)
            de = e - e0
            bad = de > tol and dist > 0
            violations += bad
            max_excess = max(max_excess, de)
            if not bad:
                clean = max(clean, dist)
            rows.append((seed, 1, dist, e, de, bad))
    else:
        for t in range(n_samples):
            smp = swaps_within_radius(wbar, radius, seed + t, p)
            e = energy(basis, smp.w, state.a)
            de = e - e0
            bad = de > tol and smp.distance_lp > 0
            violations += bad
            max_excess = max(max_excess, de)
            if not bad:
                clean = max(clean, smp.distance_lp)
            rows.append((seed + t, smp.swap_count, smp.distance_lp, e, de, bad))
    return ProbeReport(
        kind="exhaustive" if exhaustive else "local_max",
        seed=seed,
        n_samples=len(rows),
        tol=tol,
        violations=int(violations),
        max_excess=float(max_excess),
        clean_radius=float(clean),
        columns=columns,
        rows=rows,
    )


def supporting_probe(
    basis,
    state,
    gf: GFunc,
    n_samples: int,
    seed: int,
    lp: LegendrePair,
    rel_tol: float = 1e-6,
    mu_tol: float = 1e-8,
) -> ProbeReport:
    """Dominance chain check EC <= Dhat <= D on sampled rearrangements, with
    equality of all three at the steady vorticity and the shift equation
    residual verified for every sample."""
    if not gf.has_linear_tails:
        raise GridError("profile must be extended for the supporting functionals")
    dom = basis.domain
    wbar = state.omega_bar
    h2 = dom.h * dom.h
    scale = max(1.0, abs(energy_casimir(basis, wbar, state.a, lp)))

    columns = (
        "seed",
        "swap_count",
        "distance",
        "energy",
        "ec",
        "d_hat",
        "d",
        "mu",
        "mu_residual",
        "chain_violation",
    )
    rows = []
    violations = 0
    worst = 0.0
    ha = h_field(basis, state.a)
    for t in range(n_samples + 1):
        if t == 0:
            smp = RearrangementSample(wbar, 0.0, 0, seed)
        else:
            smp = random_swaps(wbar, 1 + (7 * t) % 64, seed + t)
        e = energy(basis, smp.w, state.a)
        ec = energy_casimir(basis, smp.w, state.a, lp)
        dval = supporting_d(basis, smp.w, state.a, gf)
        dhat, mu = supporting_d_hat(basis, smp.w, state.a, gf, state.mass)
        psi_w = p_apply(basis, smp.w).values + ha.values
        mu_res = abs(
            float(np.sum(gf(psi_w[dom.interior_ids] - mu))) * h2 - state.mass
        )
        bad = (ec > dhat + rel_tol * scale) or (dhat > dval + rel_tol * scale)
        if t == 0:
            bad = bad or abs(ec - dval) > rel_tol * scale or abs(mu) > rel_tol
        violations += bad
        worst = max(worst, ec - dhat, dhat - dval)
        rows.append(
            (smp.seed, smp.swap_count, smp.distance_lp, e, ec, dhat, dval, mu, mu_res, bad)
        )
    return ProbeReport(
        kind="supporting",
        seed=seed,
        n_samples=len(rows),
        tol=rel_tol * scale,
        violations=int(violations),
        max_excess=float(worst),
        clean_radius=float(max(r[2] for r in rows)),
        columns=columns,
        rows=rows,
    )
