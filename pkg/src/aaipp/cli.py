"""Command-line benchmark harness.

Subcommands: ``cavity``, ``mms``, ``transient-mms`` and ``sweep``.  Every run
writes machine-readable outputs into ``--out``.  Exit status is 0 when all
solves converged, 2 when one did not, 1 on usage or I/O errors.
"""

import argparse
import csv
import json
import logging
import os
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import numpy as np
from sklearn.model_selection import ParameterGrid

from .anderson import FULL, AndersonConfig
from .ipp import NonlinearSolveError, aaipp_solve, bdf2_transient_solve, recover_pressure
from .vtk import vertex_velocity, write_vtk

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_ERROR, EXIT_NOT_CONVERGED = 0, 1, 2

RESIDUALS_HEADER = ("iter", "residual", "theta", "effective_depth")


class UsageError(ValueError):
    pass


def parse_depth(text):
    if isinstance(text, int):
        return text
    text = str(text).strip().lower()
    if text == FULL:
        return FULL
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"depth must be an integer or 'full', got {text!r}") from None
    if value < 0:
        raise argparse.ArgumentTypeError("depth must be non-negative")
    return value


@dataclass(frozen=True)
class RunSpec:
    subcommand: str = "cavity"
    n: int = 16
    barycentric: bool = True
    re: float = 100.0
    eps: float = 1.0
    m: object = 10
    beta: float = 1.0
    tol: float = 1e-8
    max_iters: int = 500
    residual_mode: str = "relative"
    norm: str = "L2"
    out: str = "."

    def __post_init__(self):
        for name in ("n", "re", "eps", "beta", "tol", "max_iters"):
            if not getattr(self, name) > 0:
                raise UsageError(f"{name} must be positive")
        if self.beta > 1:
            raise UsageError("beta must lie in (0, 1]")
        object.__setattr__(self, "m", parse_depth(self.m))

    def aa_config(self):
        return AndersonConfig(depth=self.m, damping=self.beta)

    def solver_kwargs(self):
        return dict(
            eps=self.eps,
            tol=self.tol,
            max_iters=self.max_iters,
            residual_mode=self.residual_mode,
            residual_norm=self.norm,
        )


@dataclass
class RunSummary:
    spec: dict
    converged: bool
    iterations: int
    final_residual: float
    final_divergence: float
    theta_min: float
    theta_median: float
    wall_time: float
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_report(cls, spec, report):
        thetas = report.theta_history or [float("nan")]
        return cls(
            spec=asdict(spec),
            converged=bool(report.converged),
            iterations=int(report.iterations),
            final_residual=float(report.residual_history[-1]) if report.residual_history else float("nan"),
            final_divergence=float(report.final_divergence),
            theta_min=float(min(thetas)),
            theta_median=float(statistics.median(thetas)),
            wall_time=float(report.wall_time),
        )

    def to_json(self):
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in names})

    def row(self):
        flat = {k: v for k, v in self.spec.items() if k not in ("out", "subcommand")}
        flat.update({k: v for k, v in asdict(self).items() if k not in ("spec", "extra")})
        return flat


# --- file outputs -------------------------------------------------------------


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_residuals(path, report):
    rows = zip(
        range(1, report.iterations + 1),
        map(float, report.residual_history),
        map(float, report.theta_history),
        report.depth_history,
    )
    write_csv(path, RESIDUALS_HEADER, rows)


def write_fields(path, space, state):
    write_vtk(
        path,
        space.mesh,
        point_vectors={"velocity": vertex_velocity(space, state.u)},
        point_scalars={"pressure": recover_pressure(state, space)},
    )


# --- runs -------------------------------------------------------------------------


def run_cavity(spec):
    """Solve the driven cavity; writes residuals.csv, summary.json and fields.vtk."""
    from .problems import FlowProblem

    os.makedirs(spec.out, exist_ok=True)
    problem = FlowProblem.cavity(spec.n, spec.re, spec.barycentric)
    cfg = problem.config(**spec.solver_kwargs())
    state, report = aaipp_solve(cfg, problem.ops, aa_cfg=spec.aa_config())
    summary = RunSummary.from_report(spec, report)
    write_residuals(os.path.join(spec.out, "residuals.csv"), report)
    with open(os.path.join(spec.out, "summary.json"), "w") as fh:
        fh.write(summary.to_json())
    if report.converged:
        write_fields(os.path.join(spec.out, "fields.vtk"), problem.space, state)
    return summary


MMS_HEADER = ("level", "n", "h", "iterations", "converged", "l2_error", "h1_error", "l2_rate", "h1_rate")


def _exact_solution(name):
    from .problems import QUADRATIC_FLOW, SMOOTH_TRIG, TRIG_VORTEX

    table = {"smooth": SMOOTH_TRIG, "vortex": TRIG_VORTEX, "quadratic": QUADRATIC_FLOW}
    if name not in table:
        raise UsageError(f"unknown exact solution {name!r}; choose from {sorted(table)}")
    return table[name]


def run_mms(spec, exact="smooth", levels=3):
    """Steady manufactured-solution study on levels n, 2n, 4n, ...; returns the table rows."""
    from dataclasses import replace

    from .problems import FlowProblem, observed_rates, velocity_errors

    if levels < 1:
        raise UsageError("levels must be at least 1")
    sol = _exact_solution(exact)
    sol = replace(sol, nu=1.0 / spec.re)
    os.makedirs(spec.out, exist_ok=True)
    rows = []
    for level in range(levels):
        n = spec.n * 2**level
        problem = FlowProblem.manufactured(sol, n, spec.barycentric)
        cfg = problem.config(**spec.solver_kwargs())
        state, report = aaipp_solve(cfg, problem.ops, aa_cfg=spec.aa_config())
        l2, h1 = velocity_errors(problem.space, state.u, sol)
        rows.append([level, n, 1.0 / n, report.iterations, report.converged, l2, h1])
    h = [r[2] for r in rows]
    l2r = observed_rates(h, [r[5] for r in rows])
    h1r = observed_rates(h, [r[6] for r in rows])
    for i, row in enumerate(rows):
        row += [float("nan"), float("nan")] if i == 0 else [float(l2r[i - 1]), float(h1r[i - 1])]
    write_csv(os.path.join(spec.out, "mms_rates.csv"), MMS_HEADER, rows)
    return rows


TRANSIENT_HEADER = ("level", "dt", "steps", "max_iterations", "l2_error", "rate")


def run_transient_mms(spec, dt=0.1, T=1.0, levels=3):
    """BDF2 temporal study with a quadratic-in-space exact velocity; dt is halved per level."""
    from .fem import boundary_dirichlet, interpolate, l2_norm
    from .problems import FlowProblem, observed_rates, transient_polynomial

    if levels < 1 or dt <= 0 or T <= 0:
        raise UsageError("levels, dt and T must be positive")
    sol = transient_polynomial(nu=1.0 / spec.re)
    problem = FlowProblem.manufactured(sol, spec.n, spec.barycentric)
    space, ops = problem.space, problem.ops
    cfg = problem.config(**spec.solver_kwargs())
    os.makedirs(spec.out, exist_ok=True)
    rows = []
    for level in range(levels):
        step = dt / 2**level
        res = bdf2_transient_solve(
            cfg,
            ops,
            interpolate(space, sol.velocity(0.0)),
            step,
            T,
            aa_cfg=spec.aa_config(),
            force_at=sol.force,
            bc_at=lambda t: boundary_dirichlet(space, sol.velocity(t)),
        )
        err = l2_norm(space, res.u - interpolate(space, sol.velocity(T)))
        rows.append([level, step, len(res.iterations), max(res.iterations), err])
    rates = observed_rates([r[1] for r in rows], [r[4] for r in rows])
    for i, row in enumerate(rows):
        row.append(float("nan") if i == 0 else float(rates[i - 1]))
    write_csv(os.path.join(spec.out, "transient_rates.csv"), TRANSIENT_HEADER, rows)
    return rows


def _sweep_one(spec):
    return run_cavity(spec)


def sweep_specs(base, res, ms, betas):
    for name, values in (("re", res), ("m", ms), ("beta", betas)):
        if not values:
            raise UsageError(f"sweep list for {name} is empty")
    grid = ParameterGrid({"re": list(res), "m": list(ms), "beta": list(betas)})
    specs = []
    for i, params in enumerate(grid):
        out = os.path.join(base.out, f"run_{i:03d}")
        specs.append(RunSpec(**{**asdict(base), **params, "out": out, "subcommand": "cavity"}))
    return specs


def run_sweep(base, res, ms, betas, jobs=1):
    """Cross product of Re, depth and damping; writes sweep.csv with one row per run."""
    specs = sweep_specs(base, res, ms, betas)
    os.makedirs(base.out, exist_ok=True)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            summaries = list(pool.map(_sweep_one, specs))
    else:
        summaries = [run_cavity(s) for s in specs]
    rows = [s.row() for s in summaries]
    header = list(rows[0])
    write_csv(os.path.join(base.out, "sweep.csv"), header, [[r[k] for k in header] for r in rows])
    return summaries


# --- argument handling --------------------------------------------------------------


def read_config(path):
    """``key=value`` lines; ``#`` starts a comment.  Keys use dashes or underscores."""
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            values[key.replace("-", "_")] = value
    return values


def _bool(text):
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {text!r}")


def _add_common(p):
    p.add_argument("--config", help="key=value file; command-line flags take precedence")
    p.add_argument("--n", type=int, default=16, help="mesh level (cells per side)")
    p.add_argument("--barycentric", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--re", type=float, default=100.0, help="Reynolds number 1/nu")
    p.add_argument("--eps", type=float, default=1.0, help="penalty parameter")
    p.add_argument("--m", type=parse_depth, default=10, help="Anderson depth or 'full'")
    p.add_argument("--beta", type=float, default=1.0, help="damping factor")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iters", type=int, default=500)
    p.add_argument("--residual-mode", choices=("relative", "absolute"), default="relative")
    p.add_argument("--norm", choices=("L2", "H1"), default="L2")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("-v", "--verbose", action="store_true")


_LIST_KEYS = ("re_list", "m_list", "beta_list")


def build_parser():
    parser = argparse.ArgumentParser(prog="aaipp", description="AAIPP Navier-Stokes benchmarks")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    _add_common(sub.add_parser("cavity", help="lid-driven cavity"))
    p = sub.add_parser("mms", help="steady manufactured-solution rates")
    _add_common(p)
    p.add_argument("--exact", default="smooth", choices=("smooth", "vortex", "quadratic"))
    p.add_argument("--levels", type=int, default=3)
    p = sub.add_parser("transient-mms", help="BDF2 temporal rates")
    _add_common(p)
    p.add_argument("--dt", type=float, default=0.1)
    p.add_argument("--T", type=float, default=1.0)
    p.add_argument("--levels", type=int, default=3)
    p = sub.add_parser("sweep", help="cavity runs over Re x depth x damping")
    _add_common(p)
    p.add_argument("--re-list", type=float, nargs="*", default=None)
    p.add_argument("--m-list", type=parse_depth, nargs="*", default=None)
    p.add_argument("--beta-list", type=float, nargs="*", default=None)
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    return parser, sub


def parse_args(argv=None):
    parser, sub = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            values = read_config(args.config)
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
        subparser = sub.choices[args.subcommand]
        known = {a.dest: a for a in subparser._actions}
        defaults = {}
        for key, value in values.items():
            if key not in known or key in ("config", "help"):
                raise UsageError(f"unknown config key {key!r}")
            if key in _LIST_KEYS:
                conv = known[key].type
                defaults[key] = [conv(t) for t in value.replace(",", " ").split()]
            elif key == "barycentric":
                defaults[key] = _bool(value)
            else:
                defaults[key] = value
        subparser.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


def spec_from_args(args):
    return RunSpec(
        subcommand=args.subcommand,
        n=int(args.n),
        barycentric=bool(args.barycentric),
        re=float(args.re),
        eps=float(args.eps),
        m=args.m,
        beta=float(args.beta),
        tol=float(args.tol),
        max_iters=int(args.max_iters),
        residual_mode=args.residual_mode,
        norm=args.norm,
        out=args.out,
    )


def main(argv=None):
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    except (UsageError, argparse.ArgumentTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        spec = spec_from_args(args)
        if args.subcommand == "cavity":
            summary = run_cavity(spec)
            print(f"converged={summary.converged} iterations={summary.iterations} "
                  f"residual={summary.final_residual:.3e} divergence={summary.final_divergence:.3e}")
            return EXIT_OK if summary.converged else EXIT_NOT_CONVERGED
        if args.subcommand == "mms":
            rows = run_mms(spec, args.exact, args.levels)
            for r in rows:
                print(f"n={r[1]:4d} L2={r[5]:.4e} H1={r[6]:.4e} rates={r[7]:.3f},{r[8]:.3f}")
            return EXIT_OK if all(r[4] for r in rows) else EXIT_NOT_CONVERGED
        if args.subcommand == "transient-mms":
            try:
                rows = run_transient_mms(spec, args.dt, args.T, args.levels)
            except NonlinearSolveError as exc:
                print(f"error: {exc}", file=sys.stderr)
                return EXIT_NOT_CONVERGED
            for r in rows:
                print(f"dt={r[1]:.4e} L2={r[4]:.4e} rate={r[5]:.3f}")
            return EXIT_OK
        res = args.re_list if args.re_list is not None else [spec.re]
        ms = args.m_list if args.m_list is not None else [spec.m]
        betas = args.beta_list if args.beta_list is not None else [spec.beta]
        summaries = run_sweep(spec, res, ms, betas, max(1, args.jobs))
        for s in summaries:
            print(f"Re={s.spec['re']:g} m={s.spec['m']} beta={s.spec['beta']:g} "
                  f"converged={s.converged} iterations={s.iterations}")
        return EXIT_OK if all(s.converged for s in summaries) else EXIT_NOT_CONVERGED
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
