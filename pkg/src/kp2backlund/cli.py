"""Command-line front end.

Exit status: 0 on success, 1 when an input or precondition is rejected, 2 when
a numerical guard trips (smallness, divergence, CFL, blow-up).
"""
from __future__ import annotations

import argparse
import os
import platform
import sys
from pathlib import Path

EXIT_OK, EXIT_PRECONDITION, EXIT_NUMERICAL = 0, 1, 2

COMMANDS = ("gen-multisoliton", "backlund-add", "multisoliton-add", "evolve", "phi", "seminorm",
            "commute-check", "verify", "export-csv")


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage; here 2 is reserved for numerical guards
    def error(self, message):
        raise UsageError(message)


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.replace(",", " ").split()]


def _grid_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("grid")
    g.add_argument("--nx", type=int, default=None, help="default 512 (or the input file's grid)")
    g.add_argument("--ny", type=int, default=None, help="default 512")
    g.add_argument("--Lx", type=float, default=None, help="default 40")
    g.add_argument("--Ly", type=float, default=None, help="default 40")
    g.add_argument("--x0", type=float, default=None, help="left x-edge (default -Lx/2)")
    g.add_argument("--y0", type=float, default=None, help="lower y-edge (default -Ly/2)")


def _solver_flags(p: argparse.ArgumentParser) -> None:
    s = p.add_argument_group("solver")
    s.add_argument("--tol", type=float, default=1e-11)
    s.add_argument("--max-iter", type=int, default=200)
    s.add_argument("--guard", type=float, default=0.1, help="smallness guard on the H^{-1/2,0} surrogate of u")


def _evolve_flags(p: argparse.ArgumentParser) -> None:
    e = p.add_argument_group("evolver")
    e.add_argument("--dt", type=float, default=1e-3)
    e.add_argument("--T", type=float, default=1.0)
    e.add_argument("--save-every", type=int, default=100)
    e.add_argument("--frame", choices=("lab", "comoving_c4"), default="lab")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--threads", type=int, default=None, help="worker threads (fallback: KP2_THREADS)")
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="kp2", description="Soliton addition for KP-II via Miura maps.")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("gen-multisoliton", help="field u = -2 d_x^2 log tau from a tau spec")
    _grid_flags(p), _common(p)
    p.add_argument("--spec", required=True)
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("backlund-add", help="u_bar = B(u, gamma0)")
    _grid_flags(p), _solver_flags(p), _common(p)
    p.add_argument("--u", default="zero")
    p.add_argument("--gamma0", type=float, default=0.0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("multisoliton-add", help="add kinks for several lambdas")
    _grid_flags(p), _solver_flags(p), _common(p)
    p.add_argument("--u", default="zero")
    p.add_argument("--lambdas", type=_floats, required=True)
    p.add_argument("--cs", type=_floats, required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("evolve", help="KP-II evolution; writes numbered snapshots and a manifest")
    _grid_flags(p), _evolve_flags(p), _common(p)
    p.add_argument("--u", required=True)
    p.add_argument("--alpha", default=None, help="CSV (y, alpha) for --frame comoving_c4 (default alpha = 0)")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("phi", help="evaluate Phi(h)")
    _grid_flags(p), _common(p)
    p.add_argument("--u", required=True, help="the perturbation h")
    p.add_argument("--out", required=True, help="report file (psi is written next to it)")

    p = sub.add_parser("seminorm", help="L2_phi seminorm of u_bar")
    _grid_flags(p), _common(p)
    p.add_argument("--u", required=True, help="u_bar field")
    p.add_argument("--out", required=True)

    p = sub.add_parser("commute-check", help="evolve u0 and B(u0) and refit gamma0 along the flow")
    _grid_flags(p), _solver_flags(p), _evolve_flags(p), _common(p)
    p.add_argument("--u", required=True)
    p.add_argument("--gamma0", type=float, default=0.0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("verify", help="run the acceptance checks and print a pass/fail table")
    _grid_flags(p), _common(p)
    p.add_argument("--suite", choices=("quick", "full"), default="quick")
    p.add_argument("--out", default=None, help="optional report file")

    p = sub.add_parser("export-csv", help="export a curve from a field file")
    _common(p)
    p.add_argument("--in", dest="inp", required=True)
    p.add_argument("--curve", choices=("argmin", "column", "row-mean"), default="argmin")
    p.add_argument("--x", type=float, default=0.0, help="column position for --curve column")
    p.add_argument("--out", required=True)
    return ap


# ---------------------------------------------------------------- helpers

def _threads(args) -> int:
    if args.threads is not None:
        n = args.threads
    else:
        env = os.environ.get("KP2_THREADS")
        n = int(env) if env else (os.cpu_count() or 1)
    if n < 1:
        raise UsageError("thread count must be positive")
    return n


_GRID_DEFAULTS = {"nx": 512, "ny": 512, "Lx": 40.0, "Ly": 40.0}


def _grid(args):
    from .grid import make_grid

    v = {k: _GRID_DEFAULTS[k] if getattr(args, k) is None else getattr(args, k) for k in _GRID_DEFAULTS}
    x0 = -v["Lx"] / 2 if args.x0 is None else args.x0
    y0 = -v["Ly"] / 2 if args.y0 is None else args.y0
    args.resolved_grid = make_grid(v["nx"], v["ny"], v["Lx"], v["Ly"], x0, y0)
    return args.resolved_grid


def _explicit_grid(args) -> bool:
    return any(getattr(args, k, None) is not None for k in ("nx", "ny", "Lx", "Ly", "x0", "y0"))


def _input_field(spec: str, args):
    """--u: a KPF1 path, ``zero``, ``gauss:amp,width`` or ``dxgauss:amp,width``.

    A file brings its own grid; grid flags, if given, must agree with it.
    """
    import numpy as np

    from .fileio import read_field
    from .grid import Field2D, GridError

    if spec not in ("zero",) and not spec.startswith(("gauss:", "dxgauss:")):
        path = Path(spec)
        if not path.exists():
            raise UsageError(f"input field {spec!r} is neither a file nor zero/gauss:/dxgauss:")
        f = read_field(path)
        if _explicit_grid(args) and _grid(args) != f.grid:
            raise GridError(f"{spec}: grid {f.grid} differs from the requested grid {_grid(args)}")
        args.resolved_grid = f.grid
        return f
    grid = _grid(args)
    X, Y = grid.mesh()
    if spec == "zero":
        return Field2D(grid, np.zeros(grid.shape))
    for kind in ("gauss:", "dxgauss:"):
        if spec.startswith(kind):
            try:
                amp, width = _floats(spec[len(kind):])
            except ValueError as exc:
                raise UsageError(f"expected {kind}amp,width") from exc
            if width <= 0:
                raise UsageError("width must be positive")
            e = np.exp(-(X**2 + Y**2) / width**2)
            return Field2D(grid, amp * e if kind == "gauss:" else amp * (-2.0 * X / width**2) * e)
    raise UsageError(f"unrecognized input {spec!r}")


def _solve_opts(args):
    from .miura import SolveOptions

    return SolveOptions(tol=args.tol, max_iter=args.max_iter, smallness_guard=args.guard)


def _evolve_opts(args):
    from .evolve import EvolveOptions

    return EvolveOptions(dt=args.dt, T=args.T, frame=args.frame, save_every=args.save_every)


def _norms(f) -> dict:
    import numpy as np

    from .grid import integrate_and_norms

    r = integrate_and_norms(f)
    return {"l2": r.l2, "linf": r.linf, "integral": r.integral, "max": float(np.max(f.values)),
            "min": float(np.min(f.values))}


def _manifest(path: Path, args, extra: dict) -> None:
    import numpy as np
    import scipy

    from . import __version__
    from .fileio import write_kv

    items = {"command": args.command}
    for k, v in sorted(vars(args).items()):
        if k not in ("command", "resolved_grid") and v is not None:
            items[f"arg.{k}"] = v
    g = getattr(args, "resolved_grid", None)
    if g is not None:
        items.update({f"grid.{k}": getattr(g, k) for k in ("nx", "ny", "Lx", "Ly", "x0", "y0")})
    items.update({"version.kp2backlund": __version__, "version.numpy": np.__version__,
                  "version.scipy": scipy.__version__, "version.python": platform.python_version()})
    items.update(extra)
    write_kv(path, items)


def _stem(out: str) -> Path:
    p = Path(out)
    return p.with_suffix("") if p.suffix else p


def _ensure_parent(out: str) -> None:
    parent = Path(out).resolve().parent
    if not parent.is_dir():
        raise UsageError(f"output directory {parent} does not exist")


# ---------------------------------------------------------------- commands

def cmd_gen_multisoliton(args, out) -> int:
    from .fileio import write_field
    from .tau import read_tauspec, u_from_tau, validate_spec

    spec = read_tauspec(args.spec)
    cl = validate_spec(spec)
    grid = _grid(args)
    u = u_from_tau(spec, args.t, grid)
    write_field(args.out, u, {"t": args.t, "spec": args.spec, "label": f"{cl.label[0]},{cl.label[1]}"})
    _manifest(_stem(args.out).with_suffix(".manifest"), args, {f"norm.{k}": v for k, v in _norms(u).items()}
              | {"classification": cl.message or "regular"})
    out(f"wrote {args.out} (class ({cl.label[0]},{cl.label[1]}){', ' + cl.message if cl.message else ''})")
    return EXIT_OK


def cmd_backlund_add(args, out) -> int:
    from .backlund import soliton_add
    from .diagnostics import miura_system_residuals
    from .fileio import write_curve, write_field

    u = _input_field(args.u, args)
    grid = u.grid
    res = soliton_add(u, args.gamma0, _solve_opts(args))
    stem = _stem(args.out)
    write_field(args.out, res.u_bar, {"gamma0": args.gamma0, "c": res.c, "u": args.u})
    write_field(f"{stem}_v.kpf", res.v, {"gamma0": args.gamma0, "c": res.c})
    write_curve(f"{stem}_alpha.csv", grid.y, res.alpha.values, "alpha")
    r = miura_system_residuals(u, res.v, res.u_bar, res.alpha)
    extra = {"c": res.c, "miura_residual": r.max()} | {f"norm.{k}": v for k, v in _norms(res.u_bar).items()}
    for e in res.pair.as_list():
        extra[f"iterations.lam{e.lam:+g}"] = e.iterations
    _manifest(stem.with_suffix(".manifest"), args, extra)
    out(f"wrote {args.out}: c = {res.c:.12g}, Miura residual {r.max():.2e}")
    return EXIT_OK


def cmd_multisoliton_add(args, out) -> int:
    import numpy as np

    from .backlund import MultiSpec, multisoliton_add
    from .fileio import write_field

    if len(args.lambdas) != len(args.cs):
        raise UsageError("--lambdas and --cs must have the same length")
    u = _input_field(args.u, args)
    grid = u.grid
    ub = multisoliton_add(u, MultiSpec(np.array(args.lambdas), np.array(args.cs)), _solve_opts(args))
    write_field(args.out, ub, {"lambdas": args.lambdas, "cs": args.cs})
    _manifest(_stem(args.out).with_suffix(".manifest"), args, {f"norm.{k}": v for k, v in _norms(ub).items()})
    out(f"wrote {args.out}")
    return EXIT_OK


def cmd_evolve(args, out) -> int:
    from .evolve import evolve, evolve_with_soliton
    from .fileio import read_curve, write_trajectory
    from .grid import ShiftCurve

    u0 = _input_field(args.u, args)
    grid = u0.grid
    opts = _evolve_opts(args)
    if opts.frame == "lab":
        traj = evolve(u0, opts)
    else:
        if args.alpha is None:
            alpha = ShiftCurve.constant(grid, 0.0)
        else:
            y, a = read_curve(args.alpha)
            alpha = ShiftCurve(y, a)
        traj = evolve_with_soliton(u0, alpha, opts)
    man = write_trajectory(args.out, traj, {"command": "evolve", "frame": opts.frame, "dt": opts.dt, "T": opts.T,
                                            "u": args.u})
    _manifest(Path(args.out) / "run.manifest", args, {"snapshots": len(traj.times),
                                                      "l2_drift": abs(traj.l2[-1] - traj.l2[0])})
    out(f"wrote {len(traj.times)} snapshots to {args.out} ({man.name})")
    return EXIT_OK


def cmd_phi(args, out) -> int:
    from .fileio import write_field, write_kv
    from .phi import phi, phi_linear

    h = _input_field(args.u, args)
    grid = h.grid
    r = phi(h)
    stem = _stem(args.out)
    write_kv(args.out, {"phi": r.value, "phi_alt": r.value_alt, "consistency_gap": r.consistency_gap,
                        "phi_linear": phi_linear(h), "psi_min": r.psi_min})
    write_field(f"{stem}_psi.kpf", r.psi)
    _manifest(stem.with_suffix(".manifest"), args, {"phi": r.value})
    out(f"Phi = {r.value:.15g} (gap {r.consistency_gap:.2e})")
    return EXIT_OK


def cmd_seminorm(args, out) -> int:
    from .diagnostics import l2phi_seminorm, l2phi_seminorm_lbfgs
    from .fileio import write_curve, write_field, write_kv

    ub = _input_field(args.u, args)
    grid = ub.grid
    r = l2phi_seminorm(ub)
    alt = l2phi_seminorm_lbfgs(ub)
    stem = _stem(args.out)
    write_kv(args.out, {"value": r.value, "value_restart": alt, "iterations": r.iterations,
                        "grad_norm": r.grad_norm})
    write_curve(f"{stem}_sigma.csv", grid.y, r.sigma.values, "sigma")
    write_field(f"{stem}_w.kpf", r.w)
    _manifest(stem.with_suffix(".manifest"), args, {"value": r.value})
    out(f"seminorm = {r.value:.12g} (restart from sigma = 0: {alt:.12g})")
    return EXIT_OK


def cmd_commute_check(args, out) -> int:
    from .diagnostics import commute_check
    from .fileio import write_kv, write_series

    u0 = _input_field(args.u, args)
    grid = u0.grid
    rep = commute_check(u0, args.gamma0, args.T, _evolve_opts(args), _solve_opts(args), args.save_every)
    stem = _stem(args.out)
    write_kv(args.out, {"gamma0": rep.gamma0, "speed_residual": rep.speed_residual,
                        "max_mismatch": max(rep.mismatch), "right_margin": rep.margin,
                        "max_edge_tail": max(rep.tail)})
    write_series(f"{stem}_series.csv", {"t": rep.times, "gamma0_fit": rep.gamma0_fit, "c_fit": rep.c_fit,
                                        "mismatch": rep.mismatch, "edge_tail": rep.tail})
    _manifest(stem.with_suffix(".manifest"), args, {"max_mismatch": max(rep.mismatch)})
    out(f"max mismatch {max(rep.mismatch):.3e}, speed residual {rep.speed_residual:.3e}")
    return EXIT_OK


def cmd_verify(args, out) -> int:
    from .acceptance import run_suite

    grid = _grid(args)
    checks = run_suite(quick=args.suite == "quick", grid=grid, echo=out)
    n = sum(c.passed for c in checks)
    out(f"{n}/{len(checks)} checks passed")
    if args.out:
        from .fileio import write_kv

        write_kv(args.out, {f"check.{c.number}": ("pass " if c.passed else "fail ") + c.summary for c in checks})
    return EXIT_OK if n == len(checks) else EXIT_NUMERICAL


def cmd_export_csv(args, out) -> int:
    import numpy as np

    from .diagnostics import _argmin_curve
    from .fileio import read_field, write_curve

    f = read_field(args.inp)
    g = f.grid
    if args.curve == "argmin":
        vals, name = _argmin_curve(f.values, g), "argmin_x"
    elif args.curve == "row-mean":
        vals, name = f.values.mean(axis=1), "row_mean"
    else:
        if not g.x0 <= args.x < g.x0 + g.Lx:
            raise UsageError("--x lies outside the window")
        vals, name = f.values[:, g.col_index(args.x)], f"value_at_x={args.x:g}"
    write_curve(args.out, g.y, np.asarray(vals), name)
    out(f"wrote {args.out}")
    return EXIT_OK


HANDLERS = {"gen-multisoliton": cmd_gen_multisoliton, "backlund-add": cmd_backlund_add,
            "multisoliton-add": cmd_multisoliton_add, "evolve": cmd_evolve, "phi": cmd_phi,
            "seminorm": cmd_seminorm, "commute-check": cmd_commute_check, "verify": cmd_verify,
            "export-csv": cmd_export_csv}


def dispatch(argv: list[str] | None = None, out=print, err=None) -> int:
    err = err or (lambda m: print(m, file=sys.stderr))
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError(f"missing command; choose one of {', '.join(COMMANDS)}")
        # set before the numerical modules load; results do not depend on it
        n = _threads(args)
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            if args.threads is not None or var not in os.environ:
                os.environ[var] = str(n)
        if getattr(args, "out", None) and args.command not in ("evolve",):
            _ensure_parent(args.out)
        return HANDLERS[args.command](args, out)
    except UsageError as exc:
        err(f"kp2: error: {exc}")
        return EXIT_PRECONDITION
    except Exception as exc:  # noqa: BLE001
        from .miura import SolverError

        if isinstance(exc, SolverError):
            err(f"kp2: numerical guard: {exc}")
            return EXIT_NUMERICAL
        if isinstance(exc, (ValueError, OSError)):
            err(f"kp2: precondition failed: {exc}")
            return EXIT_PRECONDITION
        raise


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
