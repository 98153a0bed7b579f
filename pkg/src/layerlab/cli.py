"""Command-line front end: single solves, convergence tables, checks.

Five subcommands cover the batch workflows:

* ``solve``       one problem instance on one mesh, solution CSV
* ``table-e``     uniform-error table E over (eps, mu, N)
* ``table-rates`` two-mesh differences D^N and rates p^N
* ``validate``    coupling assumptions and the grading bound lambda_max
* ``mesh-dump``   node/step listing of a mesh

Defaults mirror the convergence studies: sigma = 2, lambda derived from
the validated coupling bound, eps decades 1e-3 .. 1e-14 with the decade
mu rule, N = 2^6 .. 2^12.  Table output is CSV or markdown; identical
configurations produce byte-identical files.  The environment variable
LAYERLAB_OUTDIR sets where default-named outputs land.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass
from functools import partial

import numpy as np

from .errorlab import (
    DEFAULT_EPS_LIST,
    ConvergenceReport,
    error_table_markdown,
    rates_markdown,
    uniform_sweep,
    write_error_table_csv,
    write_rates_csv,
)
from .linsolve import solve_problem, write_solution_csv
from .meshes import (
    BAKHVALOV_SHISHKIN,
    SHISHKIN,
    UNIFORM,
    MeshParams,
    build,
    default_lambda,
    step_sizes,
    write_mesh_csv,
)
from .problems import BUILTIN_NAMES, builtin, exact_solution, grid_values, validate

COMMANDS = ("solve", "table-e", "table-rates", "validate", "mesh-dump")

MESH_ALIASES = {
    "s": SHISHKIN,
    "bs": BAKHVALOV_SHISHKIN,
    SHISHKIN: SHISHKIN,
    BAKHVALOV_SHISHKIN: BAKHVALOV_SHISHKIN,
    UNIFORM: UNIFORM,
}

DEFAULT_N_LIST = tuple(2**k for k in range(6, 13))

OUTDIR_ENV = "LAYERLAB_OUTDIR"


class UsageError(ValueError):
    """Malformed flag values (bad ranges, unknown names, non-positives)."""


@dataclass(frozen=True)
class RunConfig:
    """One parsed invocation; ``run`` dispatches on ``command``.

    eps_list/n_list drive the table commands, the scalar eps/mu/n the
    single-instance ones.  lam = None means derive the grading constant
    from the problem's validation bound.
    """

    command: str
    problem: str = "example1"
    mesh_kind: str = SHISHKIN
    n: int = 64
    sigma: float = 2.0
    lam: float | None = None
    eps: float = 1e-3
    mu: float = 1e-3
    eps_list: tuple[float, ...] = DEFAULT_EPS_LIST
    n_list: tuple[int, ...] = DEFAULT_N_LIST
    output_path: str | None = None
    fmt: str = "csv"
    strict: bool = False
    jobs: int = 1

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}; valid: {COMMANDS}")
        if self.problem not in BUILTIN_NAMES:
            raise UsageError(
                f"unknown problem {self.problem!r}; valid: {', '.join(BUILTIN_NAMES)}"
            )
        if self.mesh_kind not in MESH_ALIASES.values():
            raise UsageError(f"unknown mesh kind {self.mesh_kind!r}")
        if self.fmt not in ("csv", "md"):
            raise UsageError(f"format must be csv or md, got {self.fmt!r}")
        for name in ("sigma", "eps", "mu"):
            v = getattr(self, name)
            if not (v > 0.0 and math.isfinite(v)):
                raise UsageError(f"{name} must be positive and finite, got {v}")
        if self.lam is not None and not (self.lam > 0.0 and math.isfinite(self.lam)):
            raise UsageError(f"lambda must be positive, got {self.lam}")
        if self.n <= 0 or self.n % 8 != 0:
            raise UsageError(f"N must be a positive multiple of 8, got {self.n}")
        if not self.n_list or any(n <= 0 or n % 8 != 0 for n in self.n_list):
            raise UsageError(f"N list entries must be positive multiples of 8: {self.n_list}")
        if not self.eps_list or any(not (0.0 < e <= 1.0) for e in self.eps_list):
            raise UsageError(f"eps list entries must lie in (0, 1]: {self.eps_list}")
        if self.jobs < 1:
            raise UsageError(f"jobs must be >= 1, got {self.jobs}")


def parse_n_range(text: str) -> tuple[int, ...]:
    """N specs: a single value, a comma list, or a doubling chain 'a..b'."""
    text = text.strip()
    try:
        if ".." in text:
            lo_s, hi_s = text.split("..", 1)
            lo, hi = int(lo_s), int(hi_s)
            if lo <= 0 or hi < lo:
                raise UsageError(f"empty N range {text!r}")
            out = []
            n = lo
            while n <= hi:
                out.append(n)
                n *= 2
            return tuple(out)
        return tuple(int(tok) for tok in text.split(","))
    except ValueError as exc:
        raise UsageError(f"cannot parse N spec {text!r}: {exc}") from None


def parse_eps_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(tok) for tok in text.split(","))
    except ValueError as exc:
        raise UsageError(f"cannot parse eps list {text!r}: {exc}") from None


def _auto_lambda(config: RunConfig) -> float:
    if config.lam is not None:
        return config.lam
    report = validate(builtin(config.problem, config.eps, config.mu))
    if not report.valid:
        raise UsageError(
            f"problem {config.problem!r} fails validation; pass --lambda explicitly"
        )
    return default_lambda(report.lambda_max)


def _output_path(config: RunConfig, default_name: str) -> str:
    if config.output_path is not None:
        return config.output_path
    return os.path.join(os.environ.get(OUTDIR_ENV, "."), default_name)


def _build_mesh(config: RunConfig, lam: float):
    p = MeshParams(
        n=config.n, sigma=config.sigma, lam=lam, eps=config.eps, mu=config.mu
    )
    return build(config.mesh_kind, p)


def _cmd_validate(config: RunConfig) -> int:
    report = validate(builtin(config.problem, config.eps, config.mu))
    print(
        f"validate problem={config.problem} offdiag_ok={str(report.offdiag_ok).lower()} "
        f"lambda_max={report.lambda_max:.6f} lambda_star={report.lambda_star:.6g} "
        f"samples={report.sample_count} valid={str(report.valid).lower()}"
    )
    return 0 if report.valid else 1


def _cmd_solve(config: RunConfig) -> int:
    spec = builtin(config.problem, config.eps, config.mu)
    lam = _auto_lambda(config)
    grid = solve_problem(spec, _build_mesh(config, lam))
    path = _output_path(
        config, f"solve_{config.problem}_{config.mesh_kind}_N{config.n}.csv"
    )
    write_solution_csv(grid, path)
    exact = exact_solution(config.problem)
    if exact is not None:
        x = grid.mesh_ref.nodes
        dev = max(
            float(np.abs(grid.y1 - grid_values(exact[0], x)).max()),
            float(np.abs(grid.y2 - grid_values(exact[1], x)).max()),
        )
        quality = f"max|Y-exact|={dev:.3e}"
    else:
        quality = f"residual={grid.residual_inf:.3e}"
    print(
        f"solve problem={config.problem} mesh={config.mesh_kind} N={config.n} "
        f"eps={config.eps:g} mu={config.mu:g} {quality} -> {path}"
    )
    return 0


def _cmd_mesh_dump(config: RunConfig) -> int:
    lam = _auto_lambda(config)
    mesh = _build_mesh(config, lam)
    path = _output_path(
        config, f"mesh_{config.mesh_kind}_N{config.n}.csv"
    )
    write_mesh_csv(mesh, path)
    h = step_sizes(mesh)
    print(
        f"mesh-dump kind={config.mesh_kind} N={mesh.n} tau_eps={mesh.tau_eps:.6e} "
        f"tau_mu={mesh.tau_mu:.6e} h_min={h.min():.6e} h_max={h.max():.6e} -> {path}"
    )
    return 0


def _write_table(config: RunConfig, report: ConvergenceReport, which: str) -> str:
    ext = config.fmt
    path = _output_path(
        config, f"{which}_{config.problem}_{config.mesh_kind}.{ext}"
    )
    if which == "table-e":
        if ext == "csv":
            write_error_table_csv(report, path)
        else:
            with open(path, "w") as fh:
                fh.write(error_table_markdown(report) + "\n")
    else:
        if ext == "csv":
            write_rates_csv(report, path)
        else:
            with open(path, "w") as fh:
                fh.write(rates_markdown(report) + "\n")
    return path


def _cmd_table(config: RunConfig, which: str) -> int:
    report = uniform_sweep(
        partial(builtin, config.problem),
        config.n_list,
        eps_list=config.eps_list,
        mesh_kind=config.mesh_kind,
        sigma=config.sigma,
        lam=config.lam,  # None -> derived inside the sweep
        problem=config.problem,
        jobs=config.jobs,
    )
    path = _write_table(config, report, which)
    if which == "table-e":
        cells = report.e_table
        shown = report.e_uniform[-1]
        summary = f"E^N[{report.n_list[-1]}]={shown:.3e}"
    else:
        cells = report.d_values
        summary = f"p*={report.p_star:.3f}"
    # a failed half can hide behind the maximum over mu, so strict mode
    # gates on the sweep's own count, not just NaN in the printed table
    missing = int(np.isnan(cells).sum()) + report.failed_cells
    print(
        f"{which} problem={config.problem} mesh={config.mesh_kind} "
        f"sigma={report.sigma:g} lambda={report.lam:.6g} {summary} "
        f"missing_cells={missing} -> {path}"
    )
    if config.strict and missing:
        print(f"strict: {missing} cells failed or were dropped", file=sys.stderr)
        return 1
    return 0


def run(config: RunConfig) -> int:
    """Dispatch one configuration; returns the process exit status."""
    if config.command == "validate":
        return _cmd_validate(config)
    if config.command == "solve":
        return _cmd_solve(config)
    if config.command == "mesh-dump":
        return _cmd_mesh_dump(config)
    return _cmd_table(config, config.command)


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="layerlab",
        description="Coupled reaction-diffusion solver and convergence tables",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, table: bool):
        p.add_argument("--problem", default="example1", choices=BUILTIN_NAMES)
        p.add_argument(
            "--mesh", default="s", choices=sorted(MESH_ALIASES),
            help="mesh kind (s = shishkin, bs = bakhvalov_shishkin)",
        )
        p.add_argument("--sigma", type=float, default=2.0)
        p.add_argument(
            "--lambda", dest="lam", type=float, default=None,
            help="grading constant; default derives it from validate",
        )
        p.add_argument("--output", default=None, help="output file path")
        if table:
            p.add_argument(
                "--N", dest="n_spec", default="64..4096",
                help="N values: single, comma list, or doubling range a..b",
            )
            p.add_argument(
                "--eps-list", default=None,
                help="comma-separated eps decades (default 1e-3..1e-14)",
            )
            p.add_argument("--format", dest="fmt", default="csv", choices=("csv", "md"))
            p.add_argument(
                "--strict", action="store_true",
                help="exit nonzero when any requested cell failed",
            )
            p.add_argument(
                "--jobs", type=int, default=os.cpu_count() or 1,
                help="worker processes for sweep lines",
            )
        else:
            p.add_argument("--N", dest="n", type=int, default=64)
            p.add_argument("--eps", type=float, default=1e-3)
            p.add_argument("--mu", type=float, default=1e-3)

    p = sub.add_parser("solve", help="solve one instance, write solution CSV")
    common(p, table=False)
    p = sub.add_parser("mesh-dump", help="write a mesh's node/step CSV")
    common(p, table=False)
    p = sub.add_parser("table-e", help="uniform error table over (eps, mu, N)")
    common(p, table=True)
    p = sub.add_parser("table-rates", help="two-mesh differences and rates")
    common(p, table=True)
    p = sub.add_parser("validate", help="check coupling assumptions, print lambda_max")
    p.add_argument("--problem", default="example1", choices=BUILTIN_NAMES)
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--mu", type=float, default=1e-3)
    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    kw: dict = {"command": args.command, "problem": args.problem}
    if hasattr(args, "mesh"):
        kw["mesh_kind"] = MESH_ALIASES[args.mesh]
        kw["sigma"] = args.sigma
        kw["lam"] = args.lam
        kw["output_path"] = args.output
    if hasattr(args, "eps"):
        kw["eps"] = args.eps
        kw["mu"] = args.mu
    if hasattr(args, "n"):
        kw["n"] = args.n
    if hasattr(args, "n_spec"):
        kw["n_list"] = parse_n_range(args.n_spec)
        if args.eps_list is not None:
            kw["eps_list"] = parse_eps_list(args.eps_list)
        kw["fmt"] = args.fmt
        kw["strict"] = args.strict
        kw["jobs"] = args.jobs
    return RunConfig(**kw)


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        config = _config_from_args(args)
        return run(config)
    except ValueError as exc:
        # every domain error here subclasses ValueError and, from the
        # CLI, traces back to a flag value
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
