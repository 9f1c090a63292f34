"""Vorticity-transport simulation with the circulation-corrected closure.

Each step advects the vorticity along the velocity reconstructed from the
current vorticity and the (held-fixed) circulation vector, then re-solves the
stream function.  The default scheme is semi-Lagrangian: backtrace by a
midpoint step, interpolate with a clamped bicubic kernel (range-preserving),
re-solve.  Circulations are a closure parameter re-imposed by every solve, so
the corresponding conservation law is enforced rather than discretized.

Diagnostics monitor the three conserved quantities: kinetic energy (two
independent evaluations), contour circulations, and the vorticity value
histogram.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dfield, replace

import numpy as np
from scipy import ndimage

from . import grid as g
from .errors import DynamicsError, GridError
from .field import (
    VelocityField,
    circulation,
    kinetic_energy,
    stream_solve,
    velocity,
)
from .functionals import LegendrePair, casimir, energy
from .rearrange import histogram_distance, swaps_within_radius


@dataclass
class PerturbationSpec:
    """How to perturb a steady state: exact rearrangement swaps or a smooth
    compact bump, with an optional shift of the circulation vector."""

    mode: str = "swap"  # 'swap' | 'bump' | 'none'
    amplitude: float = 0.0
    seed: int = 0
    b_offset: float = 0.0
    bump_radius: float | None = None


@dataclass
class SimConfig:
    """Time-integration configuration."""

    t_final: float
    dt: float | None = None
    cfl: float = 0.5
    scheme: str = "semi_lagrangian"  # or 'upwind2'
    monitor_every: int = 8
    p: float = 2.0
    hist_bins: int | None = None
    reference: g.ScalarField | None = None
    legendre: LegendrePair | None = None
    max_steps: int = 2_000_000

    def __post_init__(self):
        if self.dt is not None and not self.dt > 0:
            raise GridError("dt must be positive")
        if not 0.0 < self.cfl <= 0.9:
            raise GridError("CFL target must lie in (0, 0.9]")
        if self.scheme not in ("semi_lagrangian", "upwind2"):
            raise GridError("unknown advection scheme %r" % self.scheme)
        if self.t_final <= 0:
            raise GridError("t_final must be positive")


@dataclass
class SimState:
    """Instantaneous simulation state; psi/velocity are consistent with
    (omega, b) to solver tolerance."""

    basis: object
    t: float
    omega: g.ScalarField
    b: np.ndarray
    psi: g.ScalarField
    vel: VelocityField
    step_index: int = 0


@dataclass
class DiagnosticsSeries:
    """Time-ordered monitor rows plus the per-step distance supremum."""

    columns: tuple
    rows: list = dfield(default_factory=list)
    sup_dist: float = 0.0
    final_omega: g.ScalarField | None = None
    init_dist: float = 0.0

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write(",".join(self.columns) + "\n")
            for row in self.rows:
                fh.write(",".join(repr(float(c)) for c in row) + "\n")

    def column(self, name):
        i = self.columns.index(name)
        return np.array([row[i] for row in self.rows])


def _fill_indices(dom):
    """Ghost-fill stencil (cached): for every node outside the interior, the
    nearest interior source and the interior node one step further along the
    same offset, for linear extrapolation across the wall."""
    if dom._fill_src is None:
        non_int = dom.kinds != g.INTERIOR
        _, (iy, ix) = ndimage.distance_transform_edt(non_int, return_indices=True)
        jj, kk = np.meshgrid(np.arange(dom.ny), np.arange(dom.nx), indexing="ij")
        j2 = np.clip(2 * iy - jj, 0, dom.ny - 1)
        i2 = np.clip(2 * ix - kk, 0, dom.nx - 1)
        usable = ~non_int[j2, i2]
        j2 = np.where(usable, j2, iy)
        i2 = np.where(usable, i2, ix)
        dom._fill_src = (iy, ix, j2, i2)
    return dom._fill_src


def _filled_grid(dom, values):
    """Full grid built from the interior values, with everything else filled
    by linear extrapolation from the nearest interior pair (constant where no
    second node is available).

    This is the measured optimum of a large family of ghost constructions
    (quadratic lines, layered sweeps, local least-squares fits, wall-anchored
    continuations, error-compensated double passes): anything more accurate
    responds more strongly to the first interior row, feeds back through the
    wall stencils under repeated resampling, and raises the equilibrium wall
    error instead of lowering it.
    """
    iy, ix, j2, i2 = _fill_indices(dom)
    W = np.zeros((dom.ny, dom.nx))
    ii = dom.interior_ids
    W[dom.node_iy[ii], dom.node_ix[ii]] = values[ii]
    return 2.0 * W[iy, ix] - W[j2, i2]


def _bilinear(Fgrid, gx, gy):
    ny, nx = Fgrid.shape
    i0 = np.clip(np.floor(gx).astype(np.int64), 0, nx - 2)
    j0 = np.clip(np.floor(gy).astype(np.int64), 0, ny - 2)
    fx = np.clip(gx - i0, 0.0, 1.0)
    fy = np.clip(gy - j0, 0.0, 1.0)
    f00 = Fgrid[j0, i0]
    f10 = Fgrid[j0, i0 + 1]
    f01 = Fgrid[j0 + 1, i0]
    f11 = Fgrid[j0 + 1, i0 + 1]
    return (
        f00 * (1 - fx) * (1 - fy)
        + f10 * fx * (1 - fy)
        + f01 * (1 - fx) * fy
        + f11 * fx * fy
    )


def _catmull_weights(t):
    t2 = t * t
    t3 = t2 * t
    return (
        -0.5 * t + t2 - 0.5 * t3,
        1.0 - 2.5 * t2 + 1.5 * t3,
        0.5 * t + 2.0 * t2 - 1.5 * t3,
        -0.5 * t2 + 0.5 * t3,
    )


def _bicubic(Fgrid, gx, gy):
    """Plain Catmull-Rom interpolation on the filled grid."""
    ny, nx = Fgrid.shape
    i0 = np.clip(np.floor(gx).astype(np.int64), 1, nx - 3)
    j0 = np.clip(np.floor(gy).astype(np.int64), 1, ny - 3)
    fx = np.clip(gx - i0, 0.0, 1.0)
    fy = np.clip(gy - j0, 0.0, 1.0)
    wx = _catmull_weights(fx)
    wy = _catmull_weights(fy)
    val = np.zeros_like(fx)
    for b, wyb in enumerate(wy):
        rowv = np.zeros_like(fx)
        for a, wxa in enumerate(wx):
            rowv = rowv + wxa * Fgrid[j0 + b - 1, i0 + a - 1]
        val = val + wyb * rowv
    return val


def _data_range(Fdata, data_ok, gx, gy):
    """Range of the real field data within the 4x4 stencil of each point."""
    ny, nx = Fdata.shape
    i0 = np.clip(np.floor(gx).astype(np.int64), 1, nx - 3)
    j0 = np.clip(np.floor(gy).astype(np.int64), 1, ny - 3)
    lo = np.full(gx.shape, np.inf)
    hi = np.full(gx.shape, -np.inf)
    for b in range(4):
        for a in range(4):
            jj = j0 + b - 1
            ii = i0 + a - 1
            f = Fdata[jj, ii]
            ok = data_ok[jj, ii]
            lo = np.where(ok, np.minimum(lo, f), lo)
            hi = np.where(ok, np.maximum(hi, f), hi)
    return lo, hi


def init_state(basis, omega0: g.ScalarField, b) -> SimState:
    dom = basis.domain
    bv = g.as_circulation(b, dom)
    sol = stream_solve(basis, omega0, bv)
    return SimState(basis, 0.0, omega0, bv, sol.psi, velocity(sol.psi), 0)


def _feet(dom, VX, VY, dt):
    """Departure points (grid coordinates) for every non-exterior node under
    a signed time step: midpoint backtrace, with displacements contracted
    toward the node until each point lands in a cell touching the interior."""
    h = dom.h
    x0, y0 = dom.origin
    x = dom.node_x
    y = dom.node_y
    vx0 = VX[dom.node_iy, dom.node_ix]
    vy0 = VY[dom.node_iy, dom.node_ix]
    mx = (x - 0.5 * dt * vx0 - x0) / h
    my = (y - 0.5 * dt * vy0 - y0) / h
    vmx = _bilinear(VX, mx, my)
    vmy = _bilinear(VY, mx, my)
    dx = dt * vmx
    dy = dt * vmy

    okgrid = dom.kinds == g.INTERIOR
    cell_ok = (
        okgrid[:-1, :-1] | okgrid[:-1, 1:] | okgrid[1:, :-1] | okgrid[1:, 1:]
    )
    ncy, ncx = cell_ok.shape
    for _ in range(30):
        gx = (x - dx - x0) / h
        gy = (y - dy - y0) / h
        ci = np.clip(np.floor(gx).astype(np.int64), 0, ncx - 1)
        cj = np.clip(np.floor(gy).astype(np.int64), 0, ncy - 1)
        bad = ~cell_ok[cj, ci]
        bad |= (gx < 0) | (gx > ncx) | (gy < 0) | (gy > ncy)
        if not bad.any():
            break
        dx[bad] *= 0.5
        dy[bad] *= 0.5
    return (x - dx - x0) / h, (y - dy - y0) / h


def _advect_semi_lagrangian(state: SimState, dt: float) -> np.ndarray:
    """One semi-Lagrangian transport step for every non-exterior node.

    The interpolated value at each departure point is limited to the range of
    the real field data in its 4x4 stencil, so the update can never leave the
    current (hence the initial) field range; the boundary ring rides along so
    those anchors stay fresh.
    """
    dom = state.basis.domain
    VX = _filled_grid(dom, state.vel.vx)
    VY = _filled_grid(dom, state.vel.vy)
    fwd = _feet(dom, VX, VY, dt)
    w0 = state.omega.values
    raw = _bicubic(_filled_grid(dom, w0), *fwd)
    Wdata = dom.to_grid(w0, fill=0.0)
    data_ok = dom.kinds != g.EXTERIOR
    lo, hi = _data_range(Wdata, data_ok, *fwd)
    return np.clip(raw, lo, hi)


def _advect_upwind2(state: SimState, dt: float) -> np.ndarray:
    """Second-order upwind gradient transport with a midpoint time step."""
    dom = state.basis.domain
    h = dom.h
    W0 = _filled_grid(dom, state.omega.values)
    VX = dom.to_grid(state.vel.vx)
    VY = dom.to_grid(state.vel.vy)

    def tendency(W):
        def one_sided(F, axis, sign):
            # sign +1: upwind uses nodes at -1, -2 along axis
            f1 = np.roll(F, sign, axis=axis)
            f2 = np.roll(F, 2 * sign, axis=axis)
            return sign * (3 * F - 4 * f1 + f2) / (2 * h)

        dwdx = np.where(VX > 0, one_sided(W, 1, 1), one_sided(W, 1, -1))
        dwdy = np.where(VY > 0, one_sided(W, 0, 1), one_sided(W, 0, -1))
        return -(VX * dwdx + VY * dwdy)

    half = W0 + 0.5 * dt * tendency(W0)
    W1 = W0 + dt * tendency(half)
    out = state.omega.values.copy()
    ii = dom.interior_ids
    out[ii] = W1[dom.node_iy[ii], dom.node_ix[ii]]
    return out


def step(state: SimState, cfg: SimConfig, dt_cap: float | None = None) -> SimState:
    """Advance one transport step; dt honors the CFL target and dt_cap."""
    dom = state.basis.domain
    vmax = max(
        float(np.abs(state.vel.vx).max(initial=0.0)),
        float(np.abs(state.vel.vy).max(initial=0.0)),
    )
    dt = cfg.dt if cfg.dt is not None else math.inf
    if vmax > 0:
        dt = min(dt, cfg.cfl * dom.h / vmax)
    if dt_cap is not None:
        dt = min(dt, dt_cap)
    if not math.isfinite(dt) or dt <= 0:
        raise DynamicsError("cannot pick a positive time step (velocity zero and no dt)")

    if cfg.scheme == "semi_lagrangian":
        new_vals = _advect_semi_lagrangian(state, dt)
    else:
        new_vals = _advect_upwind2(state, dt)
    if not np.all(np.isfinite(new_vals)):
        raise DynamicsError(
            "NaN in vorticity at t=%g (step %d)" % (state.t + dt, state.step_index + 1)
        )
    omega = g.ScalarField(dom, new_vals)
    sol = stream_solve(state.basis, omega, state.b)
    return SimState(
        state.basis,
        state.t + dt,
        omega,
        state.b,
        sol.psi,
        velocity(sol.psi),
        state.step_index + 1,
    )


def _monitor_row(state: SimState, cfg: SimConfig, omega_init, reference):
    basis = state.basis
    dom = basis.domain
    e = energy(basis, state.omega, state.b)
    kin = kinetic_energy(state.vel)
    if cfg.legendre is not None:
        ec = e - casimir(dom, state.omega, cfg.legendre)
    else:
        ec = float("nan")
    dist = g.lp_norm(state.omega - reference, cfg.p)
    hdist = histogram_distance(state.omega, omega_init, cfg.hist_bins)
    circs = [
        circulation(state.vel, k, omega=state.omega)
        for k in range(1, dom.n_components)
    ]
    return (state.t, e, kin, ec, dist, hdist, *circs)


def _fast_dist(dom, w_values, ref_values, p):
    d = np.abs(w_values[dom.interior_ids] - ref_values[dom.interior_ids])
    return float((np.sum(d**p) * dom.h * dom.h) ** (1.0 / p))


def run(basis, omega0: g.ScalarField, b, cfg: SimConfig, on_monitor=None) -> DiagnosticsSeries:
    """Integrate to t_final, recording monitor rows at the configured cadence
    and tracking the per-step supremum of the distance to the reference.

    `on_monitor(state)` is invoked at every recorded row (snapshot hook)."""
    dom = basis.domain
    reference = cfg.reference if cfg.reference is not None else omega0
    state = init_state(basis, omega0, b)
    columns = ("t", "energy", "kinetic", "ec", "dist_ref", "hist_drift") + tuple(
        "circ_%d" % k for k in range(1, dom.n_components)
    )
    series = DiagnosticsSeries(columns=columns)
    series.init_dist = _fast_dist(dom, omega0.values, reference.values, cfg.p)
    series.rows.append(_monitor_row(state, cfg, omega0, reference))
    series.sup_dist = series.init_dist
    if on_monitor is not None:
        on_monitor(state)

    while state.t < cfg.t_final - 1e-12:
        if state.step_index >= cfg.max_steps:
            raise DynamicsError("step budget exhausted before t_final")
        state = step(state, cfg, dt_cap=cfg.t_final - state.t)
        series.sup_dist = max(
            series.sup_dist,
            _fast_dist(dom, state.omega.values, reference.values, cfg.p),
        )
        if (
            state.step_index % max(1, cfg.monitor_every) == 0
            or state.t >= cfg.t_final - 1e-12
        ):
            series.rows.append(_monitor_row(state, cfg, omega0, reference))
            if on_monitor is not None:
                on_monitor(state)
    series.final_omega = state.omega
    return series


def turnover_time(basis, omega0: g.ScalarField, b) -> float:
    """Domain area divided by the integrated initial speed."""
    dom = basis.domain
    sol = stream_solve(basis, omega0, g.as_circulation(b, dom))
    v = velocity(sol.psi)
    total_speed = g.integrate(v.speed())
    if total_speed <= 0:
        raise DynamicsError("initial flow has zero speed; no turnover scale")
    return dom.area / total_speed


def perturb(state, spec: PerturbationSpec):
    """Perturbed initial data (omega0, b) from a steady state.

    'swap' mode returns an exact rearrangement at distance just under the
    amplitude; 'bump' adds a smooth compactly supported bump of unit discrete
    L2 norm scaled by the amplitude.  The circulation vector is shifted
    uniformly by b_offset.
    """
    dom = state.psi_bar.domain
    b = state.a + spec.b_offset
    if spec.mode not in ("swap", "bump", "none"):
        raise GridError("unknown perturbation mode %r" % spec.mode)
    if spec.mode == "none" or spec.amplitude == 0.0:
        return state.omega_bar.copy(), b
    if spec.mode == "swap":
        smp = swaps_within_radius(state.omega_bar, spec.amplitude, spec.seed)
        return smp.w, b

    fluid = dom.kinds != g.EXTERIOR
    dist = ndimage.distance_transform_edt(fluid) * dom.h
    j, i = np.unravel_index(np.argmax(dist), dist.shape)
    radius = spec.bump_radius if spec.bump_radius is not None else 0.8 * float(dist[j, i])
    cx = dom.origin[0] + i * dom.h
    cy = dom.origin[1] + j * dom.h
    rho2 = ((dom.node_x - cx) ** 2 + (dom.node_y - cy) ** 2) / radius**2
    vals = np.zeros(dom.n_nodes)
    inside = rho2 < 1.0
    vals[inside] = np.exp(1.0 - 1.0 / (1.0 - rho2[inside]))
    bump = g.ScalarField(dom, vals)
    nrm = g.lp_norm(bump, 2.0)
    if nrm == 0:
        raise GridError("bump support contains no interior cell")
    omega0 = g.ScalarField(
        dom, state.omega_bar.values + (spec.amplitude / nrm) * vals
    )
    return omega0, b


@dataclass
class ExperimentRow:
    mode: str
    amplitude: float
    b_offset: float
    seed: int
    init_dist: float
    sup_dist: float
    ratio: float
    noise_rel: float


@dataclass
class ExperimentReport:
    """Amplitude sweep of the nonlinear stability experiment."""

    rows: list
    turnover: float
    t_final: float

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write(
                "mode,amplitude,b_offset,seed,init_dist,sup_dist,ratio,noise_rel\n"
            )
            for r in self.rows:
                fh.write(
                    "%s,%s,%s,%d,%s,%s,%s,%s\n"
                    % (
                        r.mode,
                        repr(r.amplitude),
                        repr(r.b_offset),
                        r.seed,
                        repr(r.init_dist),
                        repr(r.sup_dist),
                        repr(r.ratio),
                        repr(r.noise_rel),
                    )
                )

    def monotone_in_amplitude(self, mode: str) -> bool:
        rows = sorted(
            (r for r in self.rows if r.mode == mode), key=lambda r: r.amplitude
        )
        sups = [r.sup_dist for r in rows]
        return all(a <= b * (1 + 1e-9) for a, b in zip(sups, sups[1:]))


def stability_experiment(
    basis,
    state,
    amplitudes,
    cfg: SimConfig,
    modes=("swap",),
    b_offsets=(0.0,),
    seed: int = 0,
) -> ExperimentReport:
    """Run the perturbation sweep around a steady state.

    For every (mode, b_offset, amplitude) the flow is integrated to
    cfg.t_final and the ratio sup_t ||w(t) - w_bar|| / ||w(0) - w_bar|| is
    reported; zero-amplitude rows report the scheme-noise floor relative to
    ||w_bar|| instead of a ratio.
    """
    wbar = state.omega_bar
    nbar = g.lp_norm(wbar, cfg.p)
    rows = []
    tover = turnover_time(basis, wbar, state.a)
    for mode in modes:
        for boff in b_offsets:
            for amp in amplitudes:
                spec = PerturbationSpec(
                    mode=mode if amp > 0 else "none",
                    amplitude=float(amp),
                    seed=seed,
                    b_offset=boff,
                )
                omega0, b = perturb(state, spec)
                local = replace(cfg, reference=wbar)
                series = run(basis, omega0, b, local)
                init = series.init_dist
                ratio = series.sup_dist / init if init > 0 else float("nan")
                rows.append(
                    ExperimentRow(
                        mode=mode,
                        amplitude=float(amp),
                        b_offset=float(boff),
                        seed=seed,
                        init_dist=init,
                        sup_dist=series.sup_dist,
                        ratio=ratio,
                        noise_rel=series.sup_dist / nbar if nbar > 0 else float("nan"),
                    )
                )
    return ExperimentReport(rows=rows, turnover=tover, t_final=cfg.t_final)
