"""Convergence measurement without exact solutions.

Errors are estimated two ways, both on the coarse mesh's nodes:

* E cells compare against a reference solve on the same mesh family
  with the same transition points but five times as many intervals.
* D cells are two-mesh differences against the pinned twice-refined
  mesh; rates follow as p^N = log2(D^N / D^{2N}) and the uniform rate
  p* is the minimum over the computed p^N.

Per-parameter maxima follow the decade convention: for eps = 10^-j the
companion parameter sweeps mu in {10^-3, ..., 10^-j} (mu >= eps always),
row maxima give E_eps^N, and the row-wise maximum over eps gives the
parameter-uniform E^N.  Cells whose solve fails are recorded as NaN and
excluded from maxima with a logged warning, never as zeros.  The same
treatment applies to cells whose measured difference sits at or below
the solver's coefficient-rounding floor (see data_rounding_noise):
parameter uniformity means every such maximum is also attained by a
less extreme cell, so dropping the unmeasurable ones leaves the
reported columns intact.
"""

from __future__ import annotations

import csv
import logging
import math
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass

import numpy as np

from .discretize import AssemblyError
from .linsolve import LinearSolveError, SolutionGrid, data_rounding_noise, solve_problem
from .meshes import SHISHKIN, Mesh, MeshParameterError, MeshParams, build, refine_pinned
from .problems import ProblemSpec

logger = logging.getLogger(__name__)

SpecFamily = Callable[[float, float], ProblemSpec]
MuRule = Callable[[float], Iterable[float]]

DEFAULT_EPS_LIST = tuple(10.0 ** (-j) for j in range(3, 15))


class SweepError(ValueError):
    """Convergence sweep could not be assembled from the given lists."""


@dataclass(frozen=True)
class ErrorCell:
    """One E or D entry at fixed (eps, mu, N)."""

    eps: float
    mu: float
    n: int
    value: float

    def __post_init__(self):
        if not (math.isfinite(self.value) and self.value >= 0.0):
            raise SweepError(f"error cell value must be finite and >= 0, got {self.value}")


@dataclass(frozen=True)
class ConvergenceReport:
    """Sweep output: E table, uniform errors, two-mesh differences, rates.

    e_table has one row per eps and one column per N; NaN marks a cell
    whose solves failed.  p_values aligns with n_list and is NaN where
    2N is not part of the sweep (the last column, for doubling chains).

    failed_cells counts E/D halves that produced no value (solver
    failure or a two-mesh difference below the coefficient-rounding
    floor).  The maxima skip them, so a table can look complete while
    individual halves are missing; this is the only record of that.
    """

    problem: str
    mesh_kind: str
    sigma: float
    lam: float
    eps_list: tuple[float, ...]
    n_list: tuple[int, ...]
    e_table: np.ndarray
    e_uniform: np.ndarray
    d_values: np.ndarray
    p_values: np.ndarray
    p_star: float
    failed_cells: int = 0

    def __post_init__(self):
        ne, nn = len(self.eps_list), len(self.n_list)
        if self.e_table.shape != (ne, nn):
            raise SweepError(f"e_table shape {self.e_table.shape} != ({ne}, {nn})")
        for name in ("e_uniform", "d_values", "p_values"):
            arr = getattr(self, name)
            if arr.shape != (nn,):
                raise SweepError(f"{name} shape {arr.shape} != ({nn},)")
        finite = self.e_table[np.isfinite(self.e_table)]
        if finite.size and finite.min() < 0.0:
            raise SweepError("negative error cell")
        for arr in (self.e_table, self.e_uniform, self.d_values, self.p_values):
            arr.setflags(write=False)


def interp_linear(sol: SolutionGrid, x) -> tuple[np.ndarray, np.ndarray]:
    """Piecewise-linear interpolant of both components; exact at nodes."""
    x = np.asarray(x, dtype=float)
    if (x < 0.0).any() or (x > 1.0).any():
        raise ValueError("interpolation point outside [0, 1]")
    xp = sol.mesh_ref.nodes
    return np.interp(x, xp, sol.y1), np.interp(x, xp, sol.y2)


def _solve_on(spec: ProblemSpec, mesh: Mesh) -> SolutionGrid:
    return solve_problem(spec, mesh)


def _max_diff_at_coarse(coarse_sol: SolutionGrid, fine_sol: SolutionGrid) -> float:
    x = coarse_sol.mesh_ref.nodes
    f1, f2 = interp_linear(fine_sol, x)
    return float(
        max(np.abs(coarse_sol.y1 - f1).max(), np.abs(coarse_sol.y2 - f2).max())
    )


def error_vs_fine(spec: ProblemSpec, mesh_params: MeshParams, mesh_kind: str) -> ErrorCell:
    """E cell: reference is the pinned 5x refinement of the same mesh."""
    mesh = build(mesh_kind, mesh_params)
    coarse = _solve_on(spec, mesh)
    fine = _solve_on(spec, refine_pinned(mesh, 5))
    return ErrorCell(
        eps=spec.eps, mu=spec.mu, n=mesh_params.n, value=_max_diff_at_coarse(coarse, fine)
    )


def two_mesh_difference(spec: ProblemSpec, mesh_params: MeshParams, mesh_kind: str) -> ErrorCell:
    """D cell: difference against the pinned 2x refinement."""
    mesh = build(mesh_kind, mesh_params)
    coarse = _solve_on(spec, mesh)
    fine = _solve_on(spec, refine_pinned(mesh, 2))
    return ErrorCell(
        eps=spec.eps, mu=spec.mu, n=mesh_params.n, value=_max_diff_at_coarse(coarse, fine)
    )


def decade_mu_rule(eps: float) -> list[float]:
    """mu in {1e-3, ..., 1e-14} with mu >= eps; falls back to [eps] when
    eps itself is above the first decade."""
    out = [10.0 ** (-k) for k in range(3, 15) if 10.0 ** (-k) >= eps]
    return out if out else [eps]


_CELL_ERRORS = (LinearSolveError, AssemblyError, MeshParameterError, ValueError)

# refined meshes with steps this small get their measured difference
# checked against the coefficient-rounding floor before being believed
NOISE_PROBE_STEP = 1e-12
NOISE_TOLERANCE = 0.002


def _cell_pair(
    family: SpecFamily, eps: float, mu: float, n: int, sigma: float, lam: float, kind: str
) -> tuple[float, float]:
    """(E, D) for one (eps, mu, N), sharing the coarse solve.

    The two refinements can fail independently: the 5x one runs out of
    float64 positions near x = 1 before the 2x one does.  A failed half
    comes back as NaN; only a failure of the coarse solve raises.

    Near that edge a mesh can still be representable while the solve's
    coefficient-rounding floor exceeds the difference being measured;
    such a half is also NaN, because keeping it would report arithmetic
    residue as scheme error and flatten the observed rates.
    """
    spec = family(eps, mu)
    p = MeshParams(n=n, sigma=sigma, lam=lam, eps=eps, mu=mu)
    mesh = build(kind, p)
    coarse = _solve_on(spec, mesh)

    def against(factor: int) -> float:
        try:
            fine = refine_pinned(mesh, factor)
            value = _max_diff_at_coarse(coarse, _solve_on(spec, fine))
            if float(fine.steps.min()) < NOISE_PROBE_STEP:
                floor = data_rounding_noise(spec, fine)
                if floor > NOISE_TOLERANCE * value:
                    logger.warning(
                        "cell dropped: rounding floor %.2e vs value %.2e "
                        "(eps=%g, mu=%g, N=%d, %s, %dx)",
                        floor, value, eps, mu, n, kind, factor,
                    )
                    return float("nan")
            return value
        except _CELL_ERRORS as exc:
            logger.warning(
                "refinement %dx failed (eps=%g, mu=%g, N=%d, %s): %s",
                factor, eps, mu, n, kind, exc,
            )
            return float("nan")

    return against(5), against(2)


def _cell_row(
    family: SpecFamily,
    eps: float,
    mu: float,
    n_list: tuple[int, ...],
    sigma: float,
    lam: float,
    kind: str,
) -> list[tuple[float, float]]:
    """All (E, D) pairs of one (eps, mu) line; the worker-pool unit."""
    out = []
    for n in n_list:
        try:
            out.append(_cell_pair(family, eps, mu, n, sigma, lam, kind))
        except _CELL_ERRORS as exc:
            logger.warning(
                "sweep cell failed (eps=%g, mu=%g, N=%d, %s): %s", eps, mu, n, kind, exc
            )
            out.append((float("nan"), float("nan")))
    return out


def uniform_sweep(
    spec_family: SpecFamily,
    n_list: Sequence[int],
    eps_list: Sequence[float] = DEFAULT_EPS_LIST,
    mu_rule: MuRule = decade_mu_rule,
    mesh_kind: str = SHISHKIN,
    sigma: float = 2.0,
    lam: float | None = None,
    problem: str | None = None,
    jobs: int = 1,
) -> ConvergenceReport:
    """Fill the full E/D/p report over (eps x mu x N).

    lam = None derives the grading constant from the first problem
    instance (floor of its coupling bound to 3 decimals).  Failed cells
    are logged, stored as NaN and skipped by every maximum.

    jobs > 1 distributes the (eps, mu) lines over a process pool; the
    reduction order is fixed by the parameter lists, so the report (and
    any file written from it) is identical for every jobs value.  The
    family must then be picklable: a top-level function or a
    functools.partial of one, not a closure.
    """
    if not n_list or not eps_list:
        raise SweepError("n_list and eps_list must be nonempty")
    n_list = tuple(int(n) for n in n_list)
    eps_list = tuple(float(e) for e in eps_list)
    first = spec_family(eps_list[0], max(mu_rule(eps_list[0])))
    if problem is None:
        problem = first.name
    if lam is None:
        from .meshes import default_lambda
        from .problems import validate

        report = validate(first)
        if not report.valid:
            raise SweepError(
                f"problem {problem!r} failed validation; pass lam explicitly to override"
            )
        lam = default_lambda(report.lambda_max)

    ne, nn = len(eps_list), len(n_list)
    lines = [(je, eps, mu) for je, eps in enumerate(eps_list) for mu in mu_rule(eps)]
    if jobs > 1:
        import concurrent.futures
        import pickle

        try:
            pickle.dumps(spec_family)
        except Exception as exc:
            raise SweepError(
                f"spec_family is not picklable ({exc}); pass jobs=1 or use a "
                "top-level factory such as functools.partial(builtin, name)"
            ) from exc
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(
                pool.map(
                    _cell_row,
                    *zip(*[(spec_family, eps, mu, n_list, sigma, lam, mesh_kind)
                           for _, eps, mu in lines]),
                )
            )
    else:
        rows = [
            _cell_row(spec_family, eps, mu, n_list, sigma, lam, mesh_kind)
            for _, eps, mu in lines
        ]

    e_table = np.full((ne, nn), np.nan)
    d_max = np.full(nn, np.nan)
    failed = 0
    for (je, _, _), row in zip(lines, rows):
        for jn, (e, d) in enumerate(row):
            # running maxima; a NaN half loses every comparison and is
            # skipped without dragging the other half down with it
            failed += (e != e) + (d != d)
            if e >= 0.0 and not e_table[je, jn] >= e:
                e_table[je, jn] = e
            if d >= 0.0 and not d_max[jn] >= d:
                d_max[jn] = d

    e_uniform = np.full(nn, np.nan)
    for jn in range(nn):
        col = e_table[:, jn]
        if not np.isnan(col).all():
            e_uniform[jn] = np.nanmax(col)

    p_values = np.full(nn, np.nan)
    for jn, n in enumerate(n_list):
        if 2 * n in n_list:
            j2 = n_list.index(2 * n)
            if d_max[jn] > 0.0 and d_max[j2] > 0.0:
                p_values[jn] = math.log2(d_max[jn] / d_max[j2])
    p_star = float(np.nanmin(p_values)) if not np.isnan(p_values).all() else float("nan")

    return ConvergenceReport(
        problem=problem,
        mesh_kind=mesh_kind,
        sigma=sigma,
        lam=lam,
        eps_list=eps_list,
        n_list=n_list,
        e_table=e_table,
        e_uniform=e_uniform,
        d_values=d_max,
        p_values=p_values,
        p_star=p_star,
        failed_cells=failed,
    )


def layer_diagnostics(
    sol: SolutionGrid, spec: ProblemSpec, lam: float
) -> tuple[np.ndarray, np.ndarray]:
    """Layer envelopes exp(-x lam/par) + exp(-(1-x) lam/par) at the nodes,
    for the eps and mu scales; qualitative overlay data only."""
    x = sol.mesh_ref.nodes

    def env(par: float) -> np.ndarray:
        return np.exp(-x * lam / par) + np.exp(-(1.0 - x) * lam / par)

    return env(spec.eps), env(spec.mu)


def _fmt_eps(e: float) -> str:
    return f"{e:.0e}"


def _fmt_val(v: float) -> str:
    return "" if math.isnan(v) else f"{v:.6e}"


def _fmt_rate(v: float) -> str:
    return "" if math.isnan(v) else f"{v:.3f}"


def write_error_table_csv(report: ConvergenceReport, path) -> None:
    """Rows per eps, columns per N, final row the uniform maxima E^N."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["eps"] + [f"N={n}" for n in report.n_list])
        for je, eps in enumerate(report.eps_list):
            w.writerow([_fmt_eps(eps)] + [_fmt_val(v) for v in report.e_table[je]])
        w.writerow(["E^N"] + [_fmt_val(v) for v in report.e_uniform])


def write_rates_csv(report: ConvergenceReport, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["N", "D^N", "p^N"])
        for jn, n in enumerate(report.n_list):
            w.writerow([n, _fmt_val(report.d_values[jn]), _fmt_rate(report.p_values[jn])])


def error_table_markdown(report: ConvergenceReport) -> str:
    """E table in the display layout of the convergence studies."""
    head = "| eps | " + " | ".join(f"N={n}" for n in report.n_list) + " |"
    sep = "|" + "---|" * (len(report.n_list) + 1)
    lines = [head, sep]
    for je, eps in enumerate(report.eps_list):
        cells = " | ".join(_fmt_display(v) for v in report.e_table[je])
        lines.append(f"| {_fmt_eps(eps)} | {cells} |")
    cells = " | ".join(_fmt_display(v) for v in report.e_uniform)
    lines.append(f"| E^N | {cells} |")
    return "\n".join(lines)


def rates_markdown(report: ConvergenceReport) -> str:
    head = "| N | D^N | p^N |"
    sep = "|---|---|---|"
    lines = [head, sep]
    for jn, n in enumerate(report.n_list):
        lines.append(
            f"| {n} | {_fmt_display(report.d_values[jn])} | {_fmt_rate(report.p_values[jn])} |"
        )
    lines.append(f"| p* | | {_fmt_rate(report.p_star)} |")
    return "\n".join(lines)


def _fmt_display(v: float) -> str:
    return "" if math.isnan(v) else f"{v:.3e}"
