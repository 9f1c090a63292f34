"""Batch command-line surface.

Subcommands assemble the library pieces into reproducible pipelines: every
run echoes its configuration, versions, seed, and wall time into a
manifest.json in the output directory, and all tabular results are CSV so
that identical configurations produce bit-identical files.
"""

from __future__ import annotations

import os

# honor the thread cap before numpy spins up its pools
_threads = os.environ.get("ARNOLD_STAB_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, _threads)

import argparse
import json
import sys
import time

import numpy as np

from . import __version__
from . import dynamics, field, functionals, grid, harmonic, oracle, rearrange
from . import spectra, steady
from .errors import ConfigError, GridError, SolverError
from .svgplot import render_line_plot

_CONFIG_KEYS = {
    "domain", "rin", "rout", "res", "mask_file", "g", "kappa", "a", "b_offset",
    "seed", "tol", "out", "omega", "omega_const", "functional", "s", "m",
    "radius_frac", "samples", "turnovers", "t_final", "cfl", "scheme",
    "perturb", "amplitude", "cadence", "snap_every", "quick", "criteria",
    "bins", "n",
}


def _read_config(path):
    """Plain key=value file; '#' starts a comment; unknown keys rejected."""
    out = {}
    try:
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError("%s:%d: expected key=value" % (path, lineno))
                key, val = line.split("=", 1)
                key = key.strip().replace("-", "_")
                if key not in _CONFIG_KEYS:
                    raise ConfigError("%s:%d: unknown key %r" % (path, lineno, key))
                out[key] = val.strip()
    except OSError as exc:
        raise ConfigError("cannot read config file: %s" % exc)
    return out


def _apply_config(args, cfg):
    for key, val in cfg.items():
        if getattr(args, key, None) in (None, False):
            default_type = _ARG_TYPES.get(key, str)
            if default_type is bool:
                setattr(args, key, val.lower() in ("1", "true", "yes"))
            else:
                setattr(args, key, default_type(val))
    return args


_ARG_TYPES = {
    "rin": float, "rout": float, "res": int, "kappa": float, "s": float,
    "m": float, "radius_frac": float, "samples": int, "turnovers": float,
    "t_final": float, "cfl": float, "amplitude": float, "cadence": int,
    "snap_every": int, "seed": int, "tol": float, "b_offset": float,
    "bins": int, "n": int, "quick": bool,
}


def _build_domain(args):
    if args.domain == "annulus":
        return grid.build_annulus(args.rin, args.rout, args.res)
    if args.domain == "mask":
        if not args.mask_file:
            raise ConfigError("--domain mask requires --mask-file")
        if args.mask_file.endswith(".pgm"):
            mask = grid.mask_from_pgm(args.mask_file)
        else:
            mask = grid.mask_from_rle(args.mask_file)
        return grid.label_components(mask, h=1.0 / args.res)
    raise ConfigError("unknown domain kind %r" % args.domain)


def _parse_g(args):
    spec = args.g
    if spec is None and args.kappa is not None:
        return functionals.GFunc.linear(args.kappa)
    if spec is None:
        raise ConfigError("need --g or --kappa")
    kind, _, rest = spec.partition(":")
    if kind == "linear":
        return functionals.GFunc.linear(float(rest))
    if kind == "affine":
        sl, off = rest.split(",")
        return functionals.GFunc.affine(float(sl), float(off))
    if kind == "table":
        data = np.loadtxt(rest, delimiter=",")
        return functionals.GFunc.tabulated(data[:, 0], data[:, 1])
    raise ConfigError("unknown profile spec %r" % spec)


def _parse_a(text):
    if text is None:
        return np.array([1.0])
    return np.array([float(t) for t in text.split(",") if t.strip()])


def _outdir(args):
    out = args.out or "out"
    os.makedirs(out, exist_ok=True)
    return out


def _write_manifest(out, args, t0, outputs):
    manifest = {
        "command": args.command,
        "argv": sys.argv[1:],
        "config": {
            k: v
            for k, v in sorted(vars(args).items())
            if k not in ("func",) and not k.startswith("_")
        },
        "package_version": __version__,
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "seed": getattr(args, "seed", None),
        "thread_cap": _threads,
        "wall_time_s": round(time.time() - t0, 3),
        "outputs": outputs,
    }
    with open(os.path.join(out, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)


def _basis(args):
    dom = _build_domain(args)
    return harmonic.solve_basis(dom, tol=args.tol)


# -- subcommand handlers -------------------------------------------------------


def _cmd_gen(args):
    out = _outdir(args)
    dom = _build_domain(args)
    grid.write_field(os.path.join(out, "domain.sfld"), dom.zeros())
    print(
        "domain: %dx%d nodes, %d interior, %d components, h=%g"
        % (dom.nx, dom.ny, dom.n_interior, dom.n_components, dom.h)
    )
    return ["domain.sfld"]


def _cmd_harmonic(args):
    out = _outdir(args)
    basis = _basis(args)
    outputs = []
    for i, z in enumerate(basis.zetas):
        name = "zeta_%d.sfld" % (i + 1)
        grid.write_field(os.path.join(out, name), z)
        outputs.append(name)
    with open(os.path.join(out, "pq.csv"), "w") as fh:
        fh.write("i,j,p_ij,q_ij\n")
        for i in range(basis.n):
            for j in range(basis.n):
                fh.write(
                    "%d,%d,%s,%s\n"
                    % (i + 1, j + 1, repr(float(basis.p[i, j])), repr(float(basis.q[i, j])))
                )
    outputs.append("pq.csv")
    print("p =", basis.p)
    return outputs


def _load_omega(args, dom):
    if args.omega:
        return grid.read_field(args.omega, domain=dom)
    if args.omega_const is not None:
        return dom.constant(float(args.omega_const))
    return dom.zeros()


def _cmd_stream(args):
    out = _outdir(args)
    basis = _basis(args)
    dom = basis.domain
    omega = _load_omega(args, dom)
    a = _parse_a(args.a)
    sol = field.stream_solve(basis, omega, a)
    vel = field.velocity(sol.psi)
    grid.write_field(os.path.join(out, "psi.sfld"), sol.psi)
    grid.write_field(os.path.join(out, "vx.sfld"), grid.ScalarField(dom, vel.vx))
    grid.write_field(os.path.join(out, "vy.sfld"), grid.ScalarField(dom, vel.vy))
    with open(os.path.join(out, "diag.csv"), "w") as fh:
        fh.write("residual," + ",".join("flux_err_%d" % (k + 1) for k in range(len(a))) + "\n")
        fh.write(",".join([repr(sol.residual)] + [repr(float(e)) for e in sol.flux_errors]) + "\n")
    print("residual %.3e, flux errors %s" % (sol.residual, sol.flux_errors))
    return ["psi.sfld", "vx.sfld", "vy.sfld", "diag.csv"]


def _cmd_functional(args):
    out = _outdir(args)
    basis = _basis(args)
    dom = basis.domain
    omega = _load_omega(args, dom)
    a = _parse_a(args.a)
    gf = _parse_g(args)
    which = args.functional
    gext = _extended(gf, omega, basis, a)
    lp = functionals.legendre(gext)
    row = {"functional": which}
    if which == "E":
        row["value"] = functionals.energy(basis, omega, a)
    elif which == "EC":
        row["value"] = functionals.energy_casimir(basis, omega, a, lp)
    elif which == "D":
        row["value"] = functionals.supporting_d(basis, omega, a, gext)
    elif which == "Ds":
        m = args.m if args.m is not None else grid.integrate(omega)
        row["value"] = functionals.supporting_d_s(basis, omega, a, gext, args.s or 0.0, m)
    elif which == "Dhat":
        m = args.m if args.m is not None else grid.integrate(omega)
        value, mu = functionals.supporting_d_hat(basis, omega, a, gext, m)
        row["value"] = value
        row["mu"] = mu
    elif which == "H":
        st = _make_steady(args, basis)
        # interpret the input field as the perturbed vorticity
        phi = omega - st.omega_bar
        psi_pert = field.stream_solve(basis, phi, np.zeros(len(a))).psi
        row["value"] = functionals.stream_energy_casimir(psi_pert, lp, st)
    else:
        raise ConfigError("unknown functional %r" % which)
    path = os.path.join(out, "functional.csv")
    new = not os.path.exists(path)
    with open(path, "a") as fh:
        if new:
            fh.write("functional,value,mu\n")
        fh.write("%s,%s,%s\n" % (which, repr(row["value"]), repr(row.get("mu", float("nan")))))
    print(which, "=", row["value"])
    return ["functional.csv"]


def _extended(gf, omega, basis, a):
    if gf.has_linear_tails:
        return gf
    sol = field.stream_solve(basis, omega, a)
    lo = float(sol.psi.values.min()) - 1.0
    hi = float(sol.psi.values.max()) + 1.0
    return functionals.extend_g(gf, lo, hi)


def _cmd_spectra(args):
    out = _outdir(args)
    basis = _basis(args)
    gf = _parse_g(args) if (args.g or args.kappa is not None) else functionals.GFunc.linear(0.0)
    a = _parse_a(args.a)
    st = steady.steady_picard(basis, gf, a) if gf.kind != "linear" else steady.steady_linear(
        basis, gf.slope, a
    )
    report = spectra.check_stability(basis, st)
    lam = spectra.lambda_plain(basis)
    big = spectra.lambda_big(basis)
    with open(os.path.join(out, "criterion.csv"), "w") as fh:
        fh.write(report.csv_header() + "\n")
        fh.write(report.csv_row() + "\n")
    grid.write_field(os.path.join(out, "lambda_minimizer.sfld"), lam.minimizer)
    grid.write_field(os.path.join(out, "p_maximizer.sfld"), big.minimizer)
    print(
        "lambda=%.6f Lambda=%.6f lambda*Lambda-1=%.2e criterion_ok=%s arnold_ok=%s"
        % (lam.value, big.value, lam.value * big.value - 1.0, report.criterion_ok, report.arnold_ok)
    )
    return ["criterion.csv", "lambda_minimizer.sfld", "p_maximizer.sfld"]


def _cmd_steady(args):
    out = _outdir(args)
    basis = _basis(args)
    gf = _parse_g(args)
    a = _parse_a(args.a)
    if gf.kind == "linear":
        st = steady.steady_linear(basis, gf.slope, a, tol=args.tol)
    else:
        st = steady.steady_picard(basis, gf, a, tol=args.tol)
    grid.write_field(os.path.join(out, "psi_bar.sfld"), st.psi_bar)
    grid.write_field(os.path.join(out, "omega_bar.sfld"), st.omega_bar)
    with open(os.path.join(out, "steady.csv"), "w") as fh:
        fh.write(st.csv_header() + "\n")
        fh.write(st.csv_row() + "\n")
    print(
        "steady: residual %.3e, psi in [%g, %g], mass %g, certified %s"
        % (st.residual_pde, st.psi_min, st.psi_max, st.mass, st.certified)
    )
    return ["psi_bar.sfld", "omega_bar.sfld", "steady.csv"]


def _make_steady(args, basis):
    gf = _parse_g(args)
    a = _parse_a(args.a)
    if gf.kind == "linear":
        return steady.steady_linear(basis, gf.slope, a)
    return steady.steady_picard(basis, gf, a)


def _cmd_probe(args):
    out = _outdir(args)
    basis = _basis(args)
    st = _make_steady(args, basis)
    report = spectra.check_stability(basis, st)
    if not report.criterion_ok:
        print("warning: stability criterion not satisfied; probe is exploratory")
    gext = functionals.extend_g(st.g, st.psi_min, st.psi_max)
    lp = functionals.legendre(gext)
    radius = args.radius_frac * grid.lp_norm(st.omega_bar)
    local = rearrange.local_max_probe(basis, st, radius, args.samples, args.seed)
    sup = rearrange.supporting_probe(basis, st, gext, max(10, args.samples // 4), args.seed, lp)
    local.write_csv(os.path.join(out, "probe.csv"))
    sup.write_csv(os.path.join(out, "supporting.csv"))
    print(
        "local max probe: %d samples, %d violations, max excess %.3e, clean radius %.4f"
        % (local.n_samples, local.violations, local.max_excess, local.clean_radius)
    )
    print(
        "supporting probe: %d samples, %d chain violations"
        % (sup.n_samples, sup.violations)
    )
    return ["probe.csv", "supporting.csv"]


def _cmd_simulate(args):
    out = _outdir(args)
    basis = _basis(args)
    st = _make_steady(args, basis)
    mode, _, amp = (args.perturb or "none:0").partition(":")
    spec = dynamics.PerturbationSpec(
        mode=mode if mode else "none",
        amplitude=float(amp or 0.0),
        seed=args.seed,
        b_offset=args.b_offset or 0.0,
    )
    omega0, b = dynamics.perturb(st, spec)
    t_final = args.t_final
    if t_final is None:
        t_final = (args.turnovers or 1.0) * dynamics.turnover_time(basis, st.omega_bar, st.a)
    gext = functionals.extend_g(st.g, st.psi_min, st.psi_max)
    cfg = dynamics.SimConfig(
        t_final=t_final,
        cfl=args.cfl,
        scheme=args.scheme,
        monitor_every=args.cadence,
        reference=st.omega_bar,
        legendre=functionals.legendre(gext),
    )
    outputs = ["series.csv"]

    def snapshot(state):
        if args.snap_every and state.step_index % args.snap_every == 0:
            name = "omega_%06d.sfld" % state.step_index
            grid.write_field(os.path.join(out, name), state.omega)
            outputs.append(name)

    series = dynamics.run(basis, omega0, b, cfg, on_monitor=snapshot)
    series.write_csv(os.path.join(out, "series.csv"))
    grid.write_field(os.path.join(out, "omega_final.sfld"), series.final_omega)
    outputs.append("omega_final.sfld")
    print(
        "simulated to t=%g; sup distance to reference %.4e"
        % (t_final, series.sup_dist)
    )
    return outputs


def _cmd_oracle(args):
    rp = oracle.RadialProblem(args.rin, args.rout, args.n or 4096)
    zeta, p11, q11 = oracle.annulus_closed_forms(args.rin, args.rout)
    rows = [
        ("p11", p11),
        ("q11", q11),
        ("lambda_Y", oracle.radial_eigen(rp, "lambda_Y")),
        ("lambda_dirichlet", oracle.radial_eigen(rp, "dirichlet")),
    ]
    print("name,value")
    for name, val in rows:
        print("%s,%s" % (name, repr(val)))
    return []


def _cmd_report(args):
    if not args.csv:
        raise ConfigError("report needs --csv")
    out = args.out or os.path.dirname(args.csv) or "."
    os.makedirs(out, exist_ok=True)
    target = os.path.join(out, args.svg or "plot.svg")
    render_line_plot(args.csv, target, x=args.x, ys=args.ys.split(",") if args.ys else None)
    print("wrote", target)
    return [os.path.basename(target)]


def _cmd_verify_all(args):
    from . import acceptance

    out = _outdir(args)
    ids = None
    if args.criteria:
        ids = [int(t) for t in args.criteria.split(",") if t.strip()]
    ctx = acceptance.AcceptanceContext(
        out_dir=out, quick=bool(args.quick), seed=args.seed or 20240801
    )
    results = acceptance.run(ctx, ids=ids)
    acceptance.write_summary(results, os.path.join(out, "acceptance.csv"))
    n_fail = sum(1 for r in results if not r.passed)
    print(acceptance.summary_table(results))
    return ["acceptance.csv"], (4 if n_fail else 0)


def build_parser():
    p = argparse.ArgumentParser(
        prog="arnoldstab",
        description="Stability toolkit for steady 2D ideal flows in multiply-connected domains",
    )
    p.add_argument("--config", help="key=value config file (flags override)")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--domain", default=None, choices=["annulus", "mask"])
        sp.add_argument("--rin", type=float, default=None)
        sp.add_argument("--rout", type=float, default=None)
        sp.add_argument("--res", type=int, default=None)
        sp.add_argument("--mask-file", dest="mask_file", default=None)
        sp.add_argument("--g", default=None, help="linear:K | affine:K,C | table:FILE")
        sp.add_argument("--kappa", type=float, default=None)
        sp.add_argument("--a", default=None, help="comma-separated circulations")
        sp.add_argument("--b-offset", dest="b_offset", type=float, default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--tol", type=float, default=None)
        sp.add_argument("--out", default=None)

    for name, fn in [
        ("gen", _cmd_gen),
        ("harmonic", _cmd_harmonic),
        ("stream", _cmd_stream),
        ("functional", _cmd_functional),
        ("spectra", _cmd_spectra),
        ("steady", _cmd_steady),
        ("probe", _cmd_probe),
        ("simulate", _cmd_simulate),
        ("oracle", _cmd_oracle),
        ("report", _cmd_report),
        ("verify-all", _cmd_verify_all),
    ]:
        sp = sub.add_parser(name)
        common(sp)
        sp.set_defaults(func=fn)

    sp = sub.choices["stream"]
    sp.add_argument("--omega", default=None, help="vorticity field file")
    sp.add_argument("--omega-const", dest="omega_const", default=None)

    sp = sub.choices["functional"]
    sp.add_argument("--functional", required=True, choices=["E", "EC", "D", "Ds", "Dhat", "H"])
    sp.add_argument("--omega", default=None)
    sp.add_argument("--omega-const", dest="omega_const", default=None)
    sp.add_argument("--s", type=float, default=None)
    sp.add_argument("--m", type=float, default=None)

    sp = sub.choices["probe"]
    sp.add_argument("--radius-frac", dest="radius_frac", type=float, default=0.1)
    sp.add_argument("--samples", type=int, default=200)

    sp = sub.choices["simulate"]
    sp.add_argument("--turnovers", type=float, default=None)
    sp.add_argument("--t-final", dest="t_final", type=float, default=None)
    sp.add_argument("--cfl", type=float, default=0.5)
    sp.add_argument("--scheme", default="semi_lagrangian", choices=["semi_lagrangian", "upwind2"])
    sp.add_argument("--perturb", default=None, help="swap:AMP | bump:AMP | none:0")
    sp.add_argument("--cadence", type=int, default=8)
    sp.add_argument("--snap-every", dest="snap_every", type=int, default=0)

    sp = sub.choices["oracle"]
    sp.add_argument("--n", type=int, default=4096)

    sp = sub.choices["report"]
    sp.add_argument("--csv", default=None)
    sp.add_argument("--x", default=None)
    sp.add_argument("--ys", default=None)
    sp.add_argument("--svg", default=None)

    sp = sub.choices["verify-all"]
    sp.add_argument("--quick", action="store_true", default=False)
    sp.add_argument("--criteria", default=None, help="comma-separated criterion ids")
    return p


_DEFAULTS = {
    "domain": "annulus",
    "rin": 1.0,
    "rout": 2.0,
    "res": 32,
    "seed": 20240801,
    "tol": 1e-10,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            args = _apply_config(args, _read_config(args.config))
        except ConfigError as exc:
            print("config error: %s" % exc, file=sys.stderr)
            return 2
    for key, val in _DEFAULTS.items():
        if getattr(args, key, None) is None:
            setattr(args, key, val)

    t0 = time.time()
    try:
        result = args.func(args)
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 2
    except (SolverError, GridError) as exc:
        print("solver error: %s" % exc, file=sys.stderr)
        return 3

    code = 0
    if isinstance(result, tuple):
        outputs, code = result
    else:
        outputs = result or []
    if args.command != "oracle" and getattr(args, "out", None) is not False:
        try:
            _write_manifest(_outdir(args), args, t0, outputs)
        except OSError as exc:  # pragma: no cover
            print("warning: manifest not written: %s" % exc, file=sys.stderr)
    return code


def entry():  # console script
    sys.exit(main())


if __name__ == "__main__":
    entry()
