"""Scalar functionals of the flow: kinetic energy, Casimir integrals,
energy-Casimir, and the family of supporting functionals with their
shift-parameter equation.

Vorticity profiles are represented by :class:`GFunc` (linear, affine, or
monotone tabulated with C1 interpolation).  Profiles are extended outside a
working interval by C1 quadratic collars of unit width followed by linear
tails, which guarantees the growth needed by the Legendre transform; the
transform itself is evaluated through the generalized inverse, for which the
defining supremum is attained exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import grid as g
from .errors import ConvergenceError, GridError
from .field import h_field, p_apply


class GFunc:
    """Increasing vorticity profile g with derivative and antiderivative.

    kinds: 'linear' (slope s), 'affine' (slope, offset), 'tabulated'
    (monotone values with C1 monotone interpolation), 'extended' (another
    profile equipped with quadratic collars and linear tails).
    """

    def __init__(self, kind, **params):
        self.kind = kind
        self.params = params
        if kind == "linear":
            self.slope = float(params["slope"])
        elif kind == "affine":
            self.slope = float(params["slope"])
            self.offset = float(params["offset"])
        elif kind == "tabulated":
            knots = np.asarray(params["knots"], dtype=float)
            vals = np.asarray(params["values"], dtype=float)
            if knots.ndim != 1 or knots.shape != vals.shape or len(knots) < 2:
                raise GridError("tabulated profile needs matching 1D knots/values")
            if np.any(np.diff(knots) <= 0):
                raise GridError("tabulated knots must be strictly increasing")
            if np.any(np.diff(vals) < 0):
                raise GridError("non-monotone tabulated input")
            self._pchip = PchipInterpolator(knots, vals, extrapolate=True)
            self._dpchip = self._pchip.derivative()
            self._apchip = self._pchip.antiderivative()
            self.knots = knots
        elif kind == "extended":
            pass  # built by extend_g
        else:
            raise GridError("unknown profile kind %r" % kind)

    # -- evaluation -------------------------------------------------------------

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "linear":
            return self.slope * s
        if self.kind == "affine":
            return self.slope * s + self.offset
        if self.kind == "tabulated":
            return self._pchip(s)
        p = self.params
        lo, hi = p["lo"], p["hi"]
        core = p["core"]
        gl, gh = p["g_lo"], p["g_hi"]
        dl, dh = p["gp_lo"], p["gp_hi"]
        kl, kh = p["kap_lo"], p["kap_hi"]
        v0, v3 = p["v_lo"], p["v_hi"]
        cl, ch = p["c_lo"], p["c_hi"]
        d_lo = s - lo
        d_hi = s - hi
        return np.select(
            [s < lo - 1.0, s < lo, s <= hi, s <= hi + 1.0],
            [
                v0 + cl * (s - (lo - 1.0)),
                gl + dl * d_lo + 0.5 * kl * d_lo**2,
                core(np.clip(s, lo, hi)),
                gh + dh * d_hi + 0.5 * kh * d_hi**2,
            ],
            default=v3 + ch * (s - (hi + 1.0)),
        )

    def deriv(self, s):
        s = np.asarray(s, dtype=float)
        if self.kind == "linear" or self.kind == "affine":
            return np.full_like(s, self.slope)
        if self.kind == "tabulated":
            return self._dpchip(s)
        p = self.params
        lo, hi = p["lo"], p["hi"]
        return np.select(
            [s < lo - 1.0, s < lo, s <= hi, s <= hi + 1.0],
            [
                np.full_like(s, p["c_lo"]),
                p["gp_lo"] + p["kap_lo"] * (s - lo),
                p["core"].deriv(np.clip(s, lo, hi)),
                p["gp_hi"] + p["kap_hi"] * (s - hi),
            ],
            default=np.full_like(s, p["c_hi"]),
        )

    def antideriv(self, s):
        """G(s) = integral of g from 0 to s."""
        s = np.asarray(s, dtype=float)
        if self.kind == "linear":
            return 0.5 * self.slope * s * s
        if self.kind == "affine":
            return 0.5 * self.slope * s * s + self.offset * s
        if self.kind == "tabulated":
            return self._apchip(s) - self._apchip(0.0)
        phi = self._phi(s) - self._phi(np.asarray(0.0))
        return phi

    def _phi(self, s):
        """Antiderivative of the extended profile anchored at lo."""
        p = self.params
        lo, hi = p["lo"], p["hi"]
        core = p["core"]
        A_core = lambda t: core.antideriv(np.clip(t, lo, hi)) - core.antideriv(lo)
        gl, gh = p["g_lo"], p["g_hi"]
        dl, dh = p["gp_lo"], p["gp_hi"]
        kl, kh = p["kap_lo"], p["kap_hi"]
        v0, v3 = p["v_lo"], p["v_hi"]
        cl, ch = p["c_lo"], p["c_hi"]
        phi_t2 = A_core(np.asarray(hi))
        phi_t0 = -gl + 0.5 * dl - kl / 6.0  # collar integral from lo-1 to lo, negated
        phi_t3 = phi_t2 + gh + 0.5 * dh + kh / 6.0

        d_lo = s - lo
        d_hi = s - hi
        t0 = s - (lo - 1.0)
        t3 = s - (hi + 1.0)
        return np.select(
            [s < lo - 1.0, s < lo, s <= hi, s <= hi + 1.0],
            [
                phi_t0 + v0 * t0 + 0.5 * cl * t0**2,
                gl * d_lo + 0.5 * dl * d_lo**2 + kl * d_lo**3 / 6.0,
                A_core(s),
                phi_t2 + gh * d_hi + 0.5 * dh * d_hi**2 + kh * d_hi**3 / 6.0,
            ],
            default=phi_t3 + v3 * t3 + 0.5 * ch * t3**2,
        )

    # -- structure queries --------------------------------------------------------

    @property
    def has_linear_tails(self) -> bool:
        if self.kind in ("linear", "affine"):
            return self.slope > 0.0
        return self.kind == "extended"

    def tail_slopes(self):
        if self.kind in ("linear", "affine"):
            return self.slope, self.slope
        if self.kind == "extended":
            return self.params["c_lo"], self.params["c_hi"]
        raise GridError("profile has no linear tails; extend it first")

    def median_slope(self) -> float:
        if self.kind in ("linear", "affine"):
            return self.slope
        if self.kind == "tabulated":
            return float(np.median(self.deriv(self.knots)))
        p = self.params
        s = np.linspace(p["lo"], p["hi"], 257)
        return float(np.median(self.deriv(s)))

    # -- constructors ---------------------------------------------------------------

    @staticmethod
    def linear(slope) -> "GFunc":
        return GFunc("linear", slope=slope)

    @staticmethod
    def affine(slope, offset) -> "GFunc":
        return GFunc("affine", slope=slope, offset=offset)

    @staticmethod
    def tabulated(knots, values) -> "GFunc":
        return GFunc("tabulated", knots=knots, values=values)


def extend_g(gf: GFunc, lo: float, hi: float) -> GFunc:
    """Extend an increasing profile beyond [lo, hi].

    The extension equals gf on [lo, hi], blends through C1 quadratic collars
    of unit width, and continues linearly with slopes max(g'(hi), 1) upward
    and max(g'(lo), 1) downward; it is strictly increasing outside [lo, hi]
    and grows linearly at both ends.  Profiles that already satisfy this
    (positive-slope linear/affine) are returned unchanged.
    """
    lo = float(lo)
    hi = float(hi)
    if not lo < hi:
        raise GridError("need lo < hi for the extension interval")
    if gf.kind in ("linear", "affine"):
        if gf.slope > 0.0:
            return gf
        if gf.slope < 0.0:
            raise GridError("profile is decreasing; cannot extend")
    sample = np.linspace(lo, hi, 1025)
    if np.any(np.diff(gf(sample)) < -1e-12 * max(1.0, float(np.abs(gf(sample)).max()))):
        raise GridError("profile is not increasing on the extension interval")
    if gf.kind == "tabulated":
        if lo < gf.knots[0] - 1e-12 or hi > gf.knots[-1] + 1e-12:
            raise GridError("extension interval exceeds the tabulated range")

    gp_lo = float(gf.deriv(lo))
    gp_hi = float(gf.deriv(hi))
    c_lo = max(gp_lo, 1.0)
    c_hi = max(gp_hi, 1.0)
    kap_lo = gp_lo - c_lo  # collar curvature below (slope grows to c_lo)
    kap_hi = c_hi - gp_hi
    g_lo = float(gf(lo))
    g_hi = float(gf(hi))
    v_lo = g_lo - gp_lo + 0.5 * kap_lo  # collar value at lo - 1
    v_hi = g_hi + gp_hi + 0.5 * kap_hi  # collar value at hi + 1
    return GFunc(
        "extended",
        core=gf,
        lo=lo,
        hi=hi,
        g_lo=g_lo,
        g_hi=g_hi,
        gp_lo=gp_lo,
        gp_hi=gp_hi,
        kap_lo=kap_lo,
        kap_hi=kap_hi,
        c_lo=c_lo,
        c_hi=c_hi,
        v_lo=v_lo,
        v_hi=v_hi,
    )


@dataclass
class LegendrePair:
    """Convex antiderivative G, its transform Ghat, and the generalized
    inverse f of the profile; F = Ghat - Ghat(0) is the antiderivative of f."""

    g: GFunc
    f: Callable
    G: Callable
    Ghat: Callable
    ghat0: float

    def F(self, s):
        return self.Ghat(s) - self.ghat0


def _generalized_inverse(gf: GFunc):
    """f(s) = smallest tau with g(tau) = s, by vectorized monotone bisection."""

    if gf.kind in ("linear", "affine") and gf.slope > 0.0:
        off = getattr(gf, "offset", 0.0)
        k = gf.slope
        return lambda s: (np.asarray(s, dtype=float) - off) / k

    def f(s):
        s = np.asarray(s, dtype=float)
        shape = s.shape
        s = np.atleast_1d(s).astype(float)
        lo = np.full(s.shape, -1.0)
        hi = np.full(s.shape, 1.0)
        for _ in range(200):
            bad = gf(lo) >= s
            if not bad.any():
                break
            lo[bad] = 2.0 * lo[bad] - 1.0
        else:
            raise ConvergenceError("inverse bracket expansion failed (lower end)")
        for _ in range(200):
            bad = gf(hi) < s
            if not bad.any():
                break
            hi[bad] = 2.0 * hi[bad] + 1.0
        else:
            raise ConvergenceError("inverse bracket expansion failed (upper end)")
        for _ in range(120):
            mid = 0.5 * (lo + hi)
            ge = gf(mid) >= s
            hi[ge] = mid[ge]
            lo[~ge] = mid[~ge]
        out = hi
        return out.reshape(shape) if shape else float(out[0])

    return f


def _golden_min(fun, lo, hi, tol=1e-12, max_iter=300):
    """Golden-section minimum of a unimodal function on [lo, hi]."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = float(lo), float(hi)
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fun(c), fun(d)
    for _ in range(max_iter):
        if abs(b - a) <= tol * max(1.0, abs(a), abs(b)):
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fun(d)
    x = 0.5 * (a + b)
    return x, fun(x)


def legendre(gf: GFunc) -> LegendrePair:
    """Build the Legendre transform machinery for a linearly growing profile.

    Ghat(s) = sup_tau (s tau - G(tau)); since g covers the whole line the
    supremum is attained at tau = f(s), so Ghat is evaluated exactly through
    the generalized inverse.  Ghat(0) is cross-checked against a derivative
    free golden-section minimization of G.
    """
    if not gf.has_linear_tails:
        raise GridError("profile must be extended (linear growth) before the transform")
    f = _generalized_inverse(gf)
    G = gf.antideriv

    def Ghat(s):
        tau = f(s)
        return np.asarray(s, dtype=float) * tau - G(tau)

    ghat0 = float(Ghat(0.0))
    # independent route: Ghat(0) = -min G, located by golden section
    root = float(np.atleast_1d(f(0.0))[0])
    x0, gmin = _golden_min(lambda t: float(G(t)), root - 4.0, root + 4.0)
    if abs(-gmin - ghat0) > 1e-8 * max(1.0, abs(ghat0)):
        raise ConvergenceError(
            "Legendre transform self-check failed: envelope %.3e vs search %.3e"
            % (ghat0, -gmin)
        )
    return LegendrePair(g=gf, f=f, G=G, Ghat=Ghat, ghat0=ghat0)


# -- flow functionals ------------------------------------------------------------


def energy(basis, omega: g.ScalarField, a) -> float:
    """Kinetic energy from vorticity and circulations:
    (1/2) int w Pw + int h_a w + (1/2) a.q a."""
    dom = basis.domain
    av = g.as_circulation(a, dom)
    Pw = p_apply(basis, omega)
    ha = h_field(basis, av)
    term1 = 0.5 * g.integrate(g.ScalarField(dom, omega.values * Pw.values))
    term2 = g.integrate(g.ScalarField(dom, ha.values * omega.values))
    term3 = 0.5 * float(av @ (basis.q @ av))
    return term1 + term2 + term3


def casimir(domain, w: g.ScalarField, lp: LegendrePair) -> float:
    """int Ghat(w); exactly invariant under permutations of the cell values."""
    return g.integrate(g.ScalarField(domain, lp.Ghat(w.values)))


def energy_casimir(basis, w: g.ScalarField, a, lp: LegendrePair) -> float:
    """EC(w) = E(w, a) - int Ghat(w)."""
    return energy(basis, w, a) - casimir(basis.domain, w, lp)


def supporting_d(basis, w: g.ScalarField, a, gf: GFunc) -> float:
    """D(w) = -(1/2) int w Pw + int G(Pw + h_a) + (1/2) a.q a."""
    dom = basis.domain
    av = g.as_circulation(a, dom)
    Pw = p_apply(basis, w)
    ha = h_field(basis, av)
    quad = -0.5 * g.integrate(g.ScalarField(dom, w.values * Pw.values))
    comp = g.integrate(g.ScalarField(dom, gf.antideriv(Pw.values + ha.values)))
    return quad + comp + 0.5 * float(av @ (basis.q @ av))


def supporting_d_s(basis, w: g.ScalarField, a, gf: GFunc, s: float, m: float) -> float:
    """Shifted supporting functional D_s(w) with mass parameter m."""
    dom = basis.domain
    av = g.as_circulation(a, dom)
    Pw = p_apply(basis, w)
    ha = h_field(basis, av)
    quad = -0.5 * g.integrate(g.ScalarField(dom, w.values * Pw.values))
    comp = g.integrate(
        g.ScalarField(dom, gf.antideriv(Pw.values + ha.values - float(s)))
    )
    return quad + comp + float(s) * float(m) + 0.5 * float(av @ (basis.q @ av))


def solve_mu(domain, psi_w_interior, gf: GFunc, m: float, s_cap: float = 2.0**20):
    """Shift mu with int g(psi_w - mu) = m, by monotone bisection.

    The map s -> int g(psi_w - s) is nonincreasing and covers the line thanks
    to the linear tails, so a sign change exists; the bracket is auto-expanded
    by doubling up to s_cap.
    """
    h2 = domain.h * domain.h

    def fval(s):
        return float(np.sum(gf(psi_w_interior - s))) * h2 - float(m)

    span = 1.0
    f_lo = fval(-span)
    f_hi = fval(span)
    while f_lo < 0.0 or f_hi > 0.0:
        span *= 2.0
        if span > s_cap:
            raise ConvergenceError(
                "no sign change for the shift equation within |s| <= %g" % s_cap
            )
        f_lo = fval(-span)
        f_hi = fval(span)
    lo, hi = -span, span
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = fval(mid)
        if fm >= 0.0:
            lo = mid
        if fm <= 0.0:
            hi = mid
        if hi - lo <= 1e-14 * max(1.0, abs(lo), abs(hi)):
            break
    return 0.5 * (lo + hi)


def supporting_d_hat(basis, w: g.ScalarField, a, gf: GFunc, m: float):
    """Infimum of D_s over the shift; returns (value, mu)."""
    if not gf.has_linear_tails:
        raise GridError("profile must be extended before evaluating the infimum")
    dom = basis.domain
    av = g.as_circulation(a, dom)
    Pw = p_apply(basis, w)
    ha = h_field(basis, av)
    psi_w = Pw.values + ha.values
    mu = solve_mu(dom, psi_w[dom.interior_ids], gf, m)
    quad = -0.5 * g.integrate(g.ScalarField(dom, w.values * Pw.values))
    comp = g.integrate(g.ScalarField(dom, gf.antideriv(psi_w - mu)))
    value = quad + comp + mu * float(m) + 0.5 * float(av @ (basis.q @ av))
    return value, mu


def stream_energy_casimir(psi_pert: g.ScalarField, lp: LegendrePair, state) -> float:
    """Stream-form energy-Casimir H evaluated at (steady stream + perturbation):
    H(u) = (1/2) int |grad u|^2 - int F(-lap u)."""
    u = state.psi_bar + psi_pert
    kin = 0.5 * g.dirichlet_form(u, u)
    w = g.neg_laplacian(u)
    dom = u.domain
    return kin - g.integrate(g.ScalarField(dom, lp.F(w.values)))
