"""Command-line front end.

Exit codes: 0 ok, 2 configuration or schema error, 3 the orbit terminated
early (the CSV is still written), 4 a verification failed.
"""
from __future__ import annotations

import argparse
import inspect
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import config as cf
from . import ode
from . import plotting
from .dynamics import BranchPolicy, propagate, table_class
from .errors import BilliardError, ConfigError, SchemaMismatch, SingularParametrizationPoint
from .integrals import audit_orbit, audit_states
from .io import atomic_write, read_trajectory, rows_csv, write_json, write_trajectory
from .tables import ArctanSurface, PiecewiseSurfaceTable, PlanarTable, WireTable

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TERMINATED = 3
EXIT_VERIFY = 4

DEFAULT_THRESHOLD = 1e-9
FIGURE_KINDS = ("parabolic_lens_profile", "tetragon_profile", "orbit2d", "orbit3d_projection")


class CliError(Exception):
    def __init__(self, message, code=EXIT_CONFIG):
        super().__init__(message)
        self.code = code


def _err(msg: str) -> None:
    print(f"polybilliard: {msg}", file=sys.stderr)


# ---------------------------------------------------------------------------
# configuration


def _list_arg(key):
    def conv(text):
        try:
            return cf.parse_list(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"--{key}: expected a comma-separated list of reals") from None
    return conv


def load_run(args, need_table: bool = True) -> cf.RunConfig:
    """Config file values, overridden by command-line flags."""
    if args.table is None:
        if need_table:
            raise ConfigError("--table FILE is required")
        return None
    cfg = cf.run_config(cf.read_config(args.table))
    for key in ("x0", "v0", "chord", "steps", "integrals", "policy", "seed"):
        val = getattr(args, key, None)
        if val is not None:
            setattr(cfg, key, val)
    if cfg.steps < 0:
        raise ConfigError("key 'steps': must be non-negative", key="steps")
    return cfg


def make_table(cfg: cf.RunConfig):
    try:
        return cfg.table()
    except BilliardError:
        raise
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"invalid {cfg.kind} table: {exc}") from None


def make_specs(text: str, table=None) -> list:
    try:
        return cf.parse_integrals(text, table)
    except ValueError as exc:
        raise ConfigError(f"key 'integrals': {exc}", key="integrals") from None


def simulate_run(cfg: cf.RunConfig):
    """``(table, orbit, specs)`` for a run configuration."""
    table = make_table(cfg)
    specs = make_specs(cfg.integrals, table)
    initial = cf.initial_from_config(cfg, table)
    orbit = propagate(table, initial, cfg.steps, BranchPolicy(cfg.policy))
    return table, orbit, specs


# ---------------------------------------------------------------------------
# commands


def cmd_simulate(args) -> int:
    cfg = load_run(args)
    _, orbit, specs = simulate_run(cfg)
    write_trajectory(args.out, orbit, specs)
    if orbit.flag != "completed":
        _err(f"orbit terminated after {orbit.n_impacts} impacts: {orbit.flag}: {orbit.message}")
        return EXIT_TERMINATED
    return EXIT_OK


def cmd_verify(args) -> int:
    traj = read_trajectory(args.trajectory)
    if args.integrals is None and args.table is None:
        raise ConfigError("verify needs --integrals LIST or --table FILE")
    table = None
    if args.table is not None:
        table = make_table(cf.run_config(cf.read_config(args.table)))
    specs = make_specs(args.integrals or "auto", table)
    for s in specs:
        d = getattr(s, "dim", None)
        if d is not None and traj.x.shape[0] and d != traj.dim:
            raise SchemaMismatch(f"integral {s.label} is for dimension {d}, trajectory has {traj.dim}")
    reports = audit_states(traj.x, traj.v, specs)
    records = [r.to_record(args.threshold) for r in reports]
    write_json(args.out, records[0] if len(records) == 1 else records)
    return EXIT_OK if all(r["pass"] for r in records) else EXIT_VERIFY


def _grid(lo, hi, n, closed=True):
    return np.linspace(lo, hi, n, endpoint=closed)


def ode_check_rows(table, n: int) -> tuple:
    """Residual sweep of the integrability condition matching ``table``."""
    if isinstance(table, PlanarTable):
        period = table.curve.period
        ts = _grid(0.0, period, n, False) if period else _grid(-3.0, 3.0, n)
        rows = []
        for t in ts:
            try:
                r = float(ode.planar_table_residual(table, float(t)))
            except SingularParametrizationPoint:
                continue
            rows.append([float(t), r])
        return ["t", "residual"], rows
    if isinstance(table, WireTable):
        if table.A is None:
            raise ConfigError("wire has no linear system to check")
        ts = _grid(0.0, table.period or 4 * math.pi, n, table.period is None)
        res = ode.residual_wire_linear(table.A, table.b, table.curve, ts)
        return ["t", "residual"], [[float(t), float(r)] for t, r in zip(ts, np.linalg.norm(res, axis=-1))]
    if isinstance(table, ArctanSurface):
        m = max(2, int(round(math.sqrt(n))))
        rows = []
        for u1 in _grid(-1.0, 1.0, m):
            for u2 in _grid(0.2, 1.5, m):
                r = ode.residual_axial_surface(table.alpha, table.beta, table.patch, float(u1), float(u2))
                rows.append([float(u1), float(u2), r])
        return ["u1", "u2", "residual"], rows
    if isinstance(table, PiecewiseSurfaceTable):
        a, b, c = table.abc
        rows = []
        for patch in table.patches:
            r2 = [R * R for R, _ in patch.corners]
            lo, hi = (0.0, r2[0]) if len(r2) == 1 else (min(r2), max(r2))
            ts = _grid(lo, hi, n)
            f, fp = patch.profile.eval(ts)
            res = ode.ode_residual_f(a, b, c, ts, f, fp)
            rows += [[patch.name, float(t), float(r)] for t, r in zip(ts, res)]
        return ["patch", "t", "residual"], rows
    raise ConfigError(f"no residual check for {type(table).__name__}")


def cmd_ode_check(args) -> int:
    cfg = load_run(args)
    header, rows = ode_check_rows(make_table(cfg), args.points)
    atomic_write(args.out, rows_csv(header, rows))
    worst = max((abs(r[-1]) for r in rows), default=math.nan)
    print(f"max |residual| = {worst:.3e} over {len(rows)} points")
    if args.threshold is not None and not worst <= args.threshold:
        return EXIT_VERIFY
    return EXIT_OK


def _figure_table(args, kind, builder):
    if args.table is None:
        return builder()
    cfg = load_run(args)
    if cfg.kind != kind:
        raise ConfigError(f"figure needs a {kind} table, got {cfg.kind!r}", key="kind")
    return make_table(cfg)


def cmd_figure(args) -> int:
    from .tables import make_parabolic_lens, make_tetragon_torus

    code = EXIT_OK
    if args.kind == "parabolic_lens_profile":
        fig = plotting.lens_profile_figure(_figure_table(args, "parabolic_lens", make_parabolic_lens))
    elif args.kind == "tetragon_profile":
        fig = plotting.tetragon_profile_figure(_figure_table(args, "tetragon_torus", make_tetragon_torus))
    else:
        table, orbit, _ = simulate_run(load_run(args))
        if orbit.flag != "completed":
            _err(f"orbit terminated after {orbit.n_impacts} impacts: {orbit.flag}: {orbit.message}")
            code = EXIT_TERMINATED
        if args.kind == "orbit2d":
            if table_class(table) != "planar":
                raise ConfigError("orbit2d needs a planar table", key="kind")
            fig = plotting.orbit2d_figure(table, orbit)
        else:
            if table_class(table) == "planar":
                raise ConfigError("orbit3d_projection needs a wire or surface table", key="kind")
            axes = tuple(int(i) - 1 for i in args.axes)
            dim = orbit.positions.shape[1] if orbit.states else 3
            if len(axes) != 2 or not all(0 <= i < dim for i in axes):
                raise ConfigError(f"--axes must name two coordinates in 1..{dim}")
            fig = plotting.orbit3d_projection_figure(table, orbit, axes)
    plotting.save_svg(fig, args.out)
    return code


def sweep_row(job: tuple) -> dict:
    """Run one grid point; failures are recorded, never raised."""
    index, kind, base, point, run, threshold = job
    params = dict(base)
    params.update({k: v for k, v in point.items() if k != "seed"})
    cfg = cf.RunConfig(kind, params, **run)
    if "seed" in point:
        cfg.seed = point["seed"]
    row = {"index": index, "point": point, "status": "ok", "n_impacts": 0, "reports": []}
    try:
        table, orbit, specs = simulate_run(cfg)
    except BilliardError as exc:
        row["status"] = type(exc).__name__
        row["message"] = str(exc)
        return row
    reports = audit_orbit(orbit, specs)
    row["n_impacts"] = orbit.n_impacts
    row["reports"] = [(r.integral, r.max_abs_drift, r.max_rel_drift) for r in reports]
    if orbit.flag != "completed":
        row["status"] = orbit.flag
    elif not all(r.passed(threshold) for r in reports):
        row["status"] = "drift"
    return row


def cmd_sweep(args) -> int:
    sections = cf.read_config(args.table)
    cfg, points = cf.sweep_grid(sections)
    for key in ("x0", "v0", "chord", "steps", "integrals", "policy", "seed"):
        val = getattr(args, key, None)
        if val is not None:
            setattr(cfg, key, val)
    run = {k: getattr(cfg, k) for k in ("x0", "v0", "chord", "steps", "integrals", "policy", "seed")}
    jobs = [(i, cfg.kind, cfg.table_params, p, run, args.threshold) for i, p in enumerate(points)]
    workers = args.workers or 1
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            rows = list(pool.map(sweep_row, jobs))
    else:
        rows = [sweep_row(j) for j in jobs]

    keys = list(points[0]) if points else []
    k = max((len(r["reports"]) for r in rows), default=0)
    header = ["index"] + keys + ["status", "n_impacts"]
    for i in range(k):
        header += [f"F_{i + 1}", f"F_{i + 1}_max_abs_drift", f"F_{i + 1}_max_rel_drift"]
    out = []
    for r in rows:
        line = [r["index"]] + [r["point"][key] for key in keys] + [r["status"], r["n_impacts"]]
        for i in range(k):
            line += list(r["reports"][i]) if i < len(r["reports"]) else ["", "", ""]
        out.append(line)
    atomic_write(args.out, rows_csv(header, out))
    bad = [r for r in rows if r["status"] != "ok"]
    for r in bad:
        _err(f"row {r['index']}: {r['status']}" + (f": {r['message']}" if "message" in r else ""))
    return EXIT_OK


def cmd_table_list(args) -> int:
    for kind, factory in cf.TABLE_FACTORIES.items():
        sig = inspect.signature(factory)
        parts = []
        for name in cf.TABLE_KEYS[kind]:
            p = sig.parameters.get(name)
            if p is None or p.default is inspect.Parameter.empty:
                parts.append(f"{name}=<required>")
            else:
                parts.append(f"{name}={p.default}")
        print(f"{kind:22s} {' '.join(parts)}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def _run_flags(p, with_out=True):
    p.add_argument("--table", metavar="FILE", help="table/config file")
    p.add_argument("--x0", type=_list_arg("x0"), help="initial position, comma-separated")
    p.add_argument("--v0", type=_list_arg("v0"), help="initial velocity (normalized)")
    p.add_argument("--chord", type=_list_arg("chord"), help="initial wire chord s,t")
    p.add_argument("--steps", type=int, help="number of reflections")
    p.add_argument("--integrals", help="integral list, e.g. 'M3,F2(a=0,b=2,c=1)' or 'auto'")
    p.add_argument("--policy", choices=[b.value for b in BranchPolicy], help="wire branch policy")
    p.add_argument("--seed", type=int, help="seed for random initial conditions")
    if with_out:
        p.add_argument("--out", required=True, metavar="PATH")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="polybilliard", description="Billiards with polynomial integrals.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="propagate an orbit and write a trajectory CSV")
    _run_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="audit integral conservation along a trajectory CSV")
    p.add_argument("trajectory", metavar="TRAJ")
    p.add_argument("--integrals", help="integral list; defaults to the table's own ('auto')")
    p.add_argument("--table", metavar="FILE", help="table file, for 'auto' integrals")
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.add_argument("--out", default="-", metavar="PATH", help="JSON report path (default stdout)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("ode-check", help="residual sweep of the integrability condition")
    _run_flags(p)
    p.add_argument("--points", type=int, default=1000)
    p.add_argument("--threshold", type=float, default=None)
    p.set_defaults(func=cmd_ode_check)

    p = sub.add_parser("figure", help="render an SVG figure")
    p.add_argument("kind", choices=FIGURE_KINDS)
    _run_flags(p)
    p.add_argument("--axes", type=lambda s: s.split(","), default=["1", "3"],
                   help="coordinates for orbit3d_projection (1-based), default 1,3")
    p.set_defaults(func=cmd_figure)

    p = sub.add_parser("sweep", help="run a [sweep] grid and summarize drifts")
    _run_flags(p)
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("table", help="table catalog")
    tsub = p.add_subparsers(dest="table_command", required=True)
    tl = tsub.add_parser("list", help="list table kinds and parameters")
    tl.set_defaults(func=cmd_table_list)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "command", None) == "sweep" and args.table is None:
        parser.error("sweep needs --table FILE")
    try:
        return args.func(args)
    except (ConfigError, SchemaMismatch) as exc:
        _err(str(exc))
        return EXIT_CONFIG
    except BilliardError as exc:
        # table construction failures (EmptyRegion, AxisTouching, ...)
        _err(f"{type(exc).__name__}: {exc}")
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
