"""Constrained eigenvalue problems and the stability criteria.

The working space is the discrete analog of fields vanishing on the outer
boundary and constant on each inner component.  Eliminating the boundary
constants (which carry no quadrature mass) against the interior values turns
every problem here into a standard symmetric eigenproblem for the condensed
stiffness; only extremal eigenvalues are computed, by shifted inverse
iteration (smallest) or plain power iteration on the inverse operator
(largest mapped value).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import splu

from . import grid as g
from .errors import ConvergenceError, SolverError
from .field import CondensedSystem

_MAX_ITER = 400


@dataclass
class SpectralResult:
    """Extremal eigenvalue with its minimizer and diagnostics."""

    value: float
    minimizer: g.ScalarField
    flux_diag: np.ndarray
    iterations: int
    residual: float


@dataclass
class CriterionReport:
    """Eigenvalue-based stability verdicts for a steady state.

    `criterion_*` are the weak conditions (slope nonnegative, quadratic form
    nonnegative on the constrained space); `arnold_*` the classical strict
    ones (slope positive, slope below the constrained Rayleigh bound).
    """

    lambda_h: float
    mu_min: float
    delta0: float
    gprime_min: float
    gprime_max: float
    arnold_min_ok: bool
    arnold_max_ok: bool
    criterion_min_ok: bool
    criterion_quadform_ok: bool
    trivial_branch: bool
    tol_eig: float
    tol_margin: float

    @property
    def criterion_ok(self) -> bool:
        return self.criterion_min_ok and self.criterion_quadform_ok

    @property
    def arnold_ok(self) -> bool:
        return self.arnold_min_ok and self.arnold_max_ok

    def csv_header(self):
        return (
            "lambda_h,Lambda_h,lambda_Lambda_minus_1,mu_min,delta0,"
            "gprime_min,gprime_max,arnold_min_ok,arnold_max_ok,"
            "criterion_min_ok,criterion_quadform_ok,criterion_ok,arnold_ok,"
            "trivial_branch,tol_eig,tol_margin"
        )

    def csv_row(self):
        lam = self.lambda_h
        Lam = 1.0 / lam if lam else float("nan")
        vals = [
            repr(lam),
            repr(Lam),
            repr(lam * Lam - 1.0),
            repr(self.mu_min),
            repr(self.delta0),
            repr(self.gprime_min),
            repr(self.gprime_max),
            str(int(self.arnold_min_ok)),
            str(int(self.arnold_max_ok)),
            str(int(self.criterion_min_ok)),
            str(int(self.criterion_quadform_ok)),
            str(int(self.criterion_ok)),
            str(int(self.arnold_ok)),
            str(int(self.trivial_branch)),
            repr(self.tol_eig),
            repr(self.tol_margin),
        ]
        return ",".join(vals)


def _smallest_eig(C, sigma0, tol, rank_one=None, max_refactor=3):
    """Smallest eigenvalue of symmetric C (+ optional rho v v^T) by shifted
    inverse iteration; sigma0 must sit below the spectrum."""
    n = C.shape[0]
    x = np.ones(n) / np.sqrt(n)
    if rank_one is not None:
        rho, vvec = rank_one

        def apply(y):
            return C @ y + rho * vvec * (vvec @ y)

    else:

        def apply(y):
            return C @ y

    sigma = float(sigma0)
    iters = 0
    for attempt in range(max_refactor):
        try:
            lu = splu((C - sigma * sparse.identity(C.shape[0], format="csc")).tocsc())
        except RuntimeError:
            sigma -= max(1.0, abs(sigma)) * 1e-3
            try:
                lu = splu(
                    (C - sigma * sparse.identity(C.shape[0], format="csc")).tocsc()
                )
            except RuntimeError as exc:
                raise SolverError("shifted factorization broke down: %s" % exc)
        if rank_one is None:
            solve = lu.solve
        else:
            base = lu.solve
            bv = base(vvec)
            denom = 1.0 + rho * (vvec @ bv)

            def solve(b):
                xb = base(b)
                return xb - rho * (vvec @ xb) / denom * bv

        for _ in range(_MAX_ITER):
            y = solve(x)
            nrm = np.linalg.norm(y)
            if not np.isfinite(nrm) or nrm == 0.0:
                raise SolverError("inverse iteration produced a null vector")
            x = y / nrm
            iters += 1
            rho_q = float(x @ apply(x))
            res = float(np.linalg.norm(apply(x) - rho_q * x))
            if res <= tol * max(1.0, abs(rho_q)):
                return rho_q, x, iters, res
            if iters % 60 == 0:
                break  # re-shift closer to the current estimate
        sigma = rho_q - max(10.0 * res, 1e-8 * max(1.0, abs(rho_q)))
    raise ConvergenceError(
        "inverse iteration did not converge (residual %.3e after %d iterations)"
        % (res, iters)
    )


def _result_from_interior(basis, value, u, iters, res):
    sys = basis.system
    dom = basis.domain
    h = dom.h
    u = u / np.sqrt(h * h * float(u @ u))
    theta = sys.theta_of(u)
    fld = g.ScalarField(dom, sys.embed(u, theta))
    flux = np.array(
        [g.boundary_flux(fld, k) for k in range(1, dom.n_components)]
    )
    return SpectralResult(value, fld, flux, iters, res)


def lambda_c(basis, c, tol: float = 1e-8) -> SpectralResult:
    """Smallest value of (grad energy + int c u^2) / int u^2 over the
    constrained space, with its minimizer."""
    sys = basis.system
    if np.isscalar(c):
        c_int = np.full(sys.n_int, float(c))
    else:
        c_int = c.values[basis.domain.interior_ids]
    C = sys.schur_stiffness() + sparse.diags(c_int)
    sigma0 = float(c_int.min()) - max(1.0, 0.1 * abs(float(c_int.min())))
    val, u, iters, res = _smallest_eig(C.tocsc(), sigma0, tol)
    return _result_from_interior(basis, val, u, iters, res)


def lambda_plain(basis, tol: float = 1e-8) -> SpectralResult:
    """Smallest Rayleigh quotient of the Dirichlet energy (cached)."""
    key = ("lambda_plain", tol)
    if key not in basis._cache:
        basis._cache[key] = lambda_c(basis, 0.0, tol)
    return basis._cache[key]


def lambda_big(basis, tol: float = 1e-8) -> SpectralResult:
    """Largest eigenvalue of the circulation-free inverse Laplacian in the
    interior L2 inner product, by power iteration; reciprocal of lambda."""
    sys = basis.system
    dom = basis.domain
    h2 = dom.h * dom.h

    def P(x):
        u, _ = sys.solve_stream(x, np.zeros(sys.n))
        return u

    x = np.ones(sys.n_int)
    x /= np.linalg.norm(x)
    lam = 0.0
    for it in range(1, 4000):
        y = P(x)
        lam = float(x @ y)
        res = float(np.linalg.norm(y - lam * x))
        if res <= tol * max(abs(lam), 1e-300):
            x = y / np.linalg.norm(y)
            break
        x = y / np.linalg.norm(y)
    else:
        raise ConvergenceError("power iteration for the inverse operator stalled")
    if lam <= 0:
        raise SolverError("inverse operator lost positivity")
    u = x / np.sqrt(h2 * float(x @ x))
    fld = g.ScalarField(dom, sys.embed(u))
    flux = np.zeros(sys.n)  # maximizer is an interior density, no flux meaning
    return SpectralResult(lam, fld, flux, it, res)


def dirichlet_ground(domain, tol: float = 1e-10) -> float:
    """Smallest eigenvalue of the zero-boundary Laplacian (inverse power)."""
    sys = CondensedSystem.of(domain)
    h2 = domain.h * domain.h
    A = (sys.Ah2 / h2).tocsc()
    lu = splu(A)
    x = np.ones(sys.n_int)
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(_MAX_ITER):
        y = lu.solve(x)
        x = y / np.linalg.norm(y)
        lam = float(x @ (A @ x))
        res = float(np.linalg.norm(A @ x - lam * x))
        if res <= tol * max(1.0, lam):
            return lam
    raise ConvergenceError("Dirichlet ground-state iteration stalled")


def check_stability(basis, state, tol_eig: float = 1e-8, tol_margin: float = 1e-6) -> CriterionReport:
    """Evaluate the stability criteria for a certified steady state.

    Weak criterion: slope of the vorticity profile nonnegative everywhere and
    the quadratic form (grad energy minus slope-weighted mass) nonnegative on
    the constrained space.  Classical criterion: slope strictly positive and
    strictly below the constrained Rayleigh bound lambda_h.
    """
    dom = basis.domain
    gp_all = state.g.deriv(state.psi_bar.values)
    gp_min = float(gp_all.min())
    gp_max = float(gp_all.max())
    lam = lambda_plain(basis, tol_eig).value

    gp_int = gp_all[dom.interior_ids]
    mu = lambda_c(basis, g.ScalarField(dom, -gp_all), tol_eig).value
    delta0 = weak_pos_def(basis, state, tol_eig)
    gamma = float(gp_int.sum()) * dom.h * dom.h
    trivial = gamma <= 1e-12 * dom.area * max(1.0, abs(gp_max))

    return CriterionReport(
        lambda_h=lam,
        mu_min=mu,
        delta0=delta0,
        gprime_min=gp_min,
        gprime_max=gp_max,
        arnold_min_ok=gp_min > 0.0,
        arnold_max_ok=gp_max < lam,
        criterion_min_ok=gp_min >= -tol_margin,
        criterion_quadform_ok=mu >= -tol_eig,
        trivial_branch=trivial,
        tol_eig=tol_eig,
        tol_margin=tol_margin,
    )


def weak_pos_def(basis, state, tol: float = 1e-8) -> float:
    """Coercivity margin delta0 of the criterion quadratic form augmented by
    its rank-one mean correction.

    When the slope weight has (numerically) zero mass the correction is
    dropped, which is its continuous limit (the vorticity profile is constant
    and the form reduces to the plain Dirichlet quotient).
    """
    dom = basis.domain
    sys = basis.system
    gp_all = state.g.deriv(state.psi_bar.values)
    gp = gp_all[dom.interior_ids]
    h2 = dom.h * dom.h
    gamma = float(gp.sum()) * h2
    C = (sys.schur_stiffness() - sparse.diags(gp)).tocsc()
    sigma0 = -float(gp.max(initial=0.0)) - 1.0
    if gamma <= 1e-12 * dom.area * max(1.0, float(np.abs(gp).max(initial=0.0))):
        val, _, _, _ = _smallest_eig(C, sigma0, tol)
        return val
    rho = h2 * h2 / gamma / h2  # quadratic-form weight over the unit mass
    val, _, _, _ = _smallest_eig(C, sigma0, tol, rank_one=(rho, gp.astype(float)))
    return val
