"""Direct solution of the assembled block-tridiagonal systems.

The default path is block Thomas elimination over the 2x2 blocks with
a determinant-magnitude pivot check but no reordering; the audited
M-matrix structure makes that safe on compliant meshes.  A dense
row-pivoted solve over the materialized matrix is provided as an
independent reference for tests and for exploratory runs outside the
audited regime.

``solve_problem`` wraps assembly plus solve and escalates precision on
sharply graded meshes.  The smooth component is discretized on the same
mesh as the layer component, so steps of order eps produce rows whose
mu^2/(h_i hbar_i) coefficients reach 1e20 and beyond while the row
still has to cancel down to an O(1) right-hand side.  Rounding those
coefficients perturbs the solution by an amount linear in the unit
round-off of whatever precision carries them; on the finest meshes the
float64 floor sits orders of magnitude above the discretization error
being measured.  The escalation ladder is float64 elimination, then
iterative refinement against np.longdouble coefficients, then a direct
extended-precision elimination once float64 corrections stop biting.
``data_rounding_noise`` measures the remaining floor for a given mesh
so sweeps can tell a converged error from arithmetic residue.
"""

from __future__ import annotations

import csv
import dataclasses
from dataclasses import dataclass

import numpy as np

from .discretize import DiscreteSystem, _assembly_arrays, assemble
from .meshes import Mesh, step_sizes
from .problems import ProblemSpec

DENSE_MAX_INTERVALS = 4096  # 2*(4096+1) square floats is ~0.5 GB

# below this smallest step, float64 rounding of coefficients like
# mu^2/(h_i hbar_i) shifts fine-mesh two-mesh differences by percents,
# so the solution is refined against extended-precision coefficients
EXTENDED_STEP_THRESHOLD = 1e-8


class LinearSolveError(ValueError):
    """Elimination hit a singular or near-singular pivot."""


@dataclass(frozen=True)
class SolutionGrid:
    """Nodal values of both components plus the achieved residual."""

    mesh_ref: Mesh
    y1: np.ndarray
    y2: np.ndarray
    residual_inf: float

    def __post_init__(self):
        y1 = np.ascontiguousarray(np.asarray(self.y1, dtype=float))
        y2 = np.ascontiguousarray(np.asarray(self.y2, dtype=float))
        m = self.mesh_ref.nodes.size
        if y1.shape != (m,) or y2.shape != (m,):
            raise LinearSolveError(
                f"solution length {y1.shape}/{y2.shape} does not match {m} mesh nodes"
            )
        if not np.isfinite(self.residual_inf):
            raise LinearSolveError(f"non-finite residual {self.residual_inf}")
        y1.setflags(write=False)
        y2.setflags(write=False)
        object.__setattr__(self, "y1", y1)
        object.__setattr__(self, "y2", y2)

    def stacked(self) -> np.ndarray:
        """(n_nodes, 2) array, the layout matvec expects."""
        return np.column_stack([self.y1, self.y2])


def _make_grid(sys: DiscreteSystem, y: np.ndarray) -> SolutionGrid:
    res = float(np.abs(sys.residual(y)).max())
    return SolutionGrid(mesh_ref=sys.mesh_ref, y1=y[:, 0], y2=y[:, 1], residual_inf=res)


def solve(sys: DiscreteSystem) -> SolutionGrid:
    """Block Thomas elimination, O(n) time and memory."""
    m = sys.n_nodes
    # scalar lists beat array indexing in the sequential sweep
    la = sys.blocks_lower[:, 0, 0].tolist()
    lb = sys.blocks_lower[:, 0, 1].tolist()
    lc = sys.blocks_lower[:, 1, 0].tolist()
    ld = sys.blocks_lower[:, 1, 1].tolist()
    da = sys.blocks_diag[:, 0, 0].tolist()
    db = sys.blocks_diag[:, 0, 1].tolist()
    dc = sys.blocks_diag[:, 1, 0].tolist()
    dd = sys.blocks_diag[:, 1, 1].tolist()
    ua = sys.blocks_upper[:, 0, 0].tolist()
    ub = sys.blocks_upper[:, 0, 1].tolist()
    uc = sys.blocks_upper[:, 1, 0].tolist()
    ud = sys.blocks_upper[:, 1, 1].tolist()
    r1 = sys.rhs[:, 0].tolist()
    r2 = sys.rhs[:, 1].tolist()

    # C_i = pivot^{-1} U_i, g_i = pivot^{-1} (rhs_i - L_i g_{i-1})
    ca = [0.0] * m
    cb = [0.0] * m
    cc = [0.0] * m
    cd = [0.0] * m
    g1 = [0.0] * m
    g2 = [0.0] * m
    pa = pb = pc = pd = 0.0
    w1 = w2 = 0.0
    for i in range(m):
        if i == 0:
            pa, pb, pc, pd = da[0], db[0], dc[0], dd[0]
            w1, w2 = r1[0], r2[0]
        else:
            xa, xb, xc, xd = la[i], lb[i], lc[i], ld[i]
            j = i - 1
            pa = da[i] - (xa * ca[j] + xb * cc[j])
            pb = db[i] - (xa * cb[j] + xb * cd[j])
            pc = dc[i] - (xc * ca[j] + xd * cc[j])
            pd = dd[i] - (xc * cb[j] + xd * cd[j])
            w1 = r1[i] - (xa * g1[j] + xb * g2[j])
            w2 = r2[i] - (xc * g1[j] + xd * g2[j])
        det = pa * pd - pb * pc
        scale = (abs(pa) + abs(pb)) * (abs(pc) + abs(pd))
        if not abs(det) > 1e-30 * scale:
            raise LinearSolveError(f"singular 2x2 pivot at row {i} (det={det})")
        ia = pd / det
        ib = -pb / det
        ic = -pc / det
        id_ = pa / det
        ca[i] = ia * ua[i] + ib * uc[i]
        cb[i] = ia * ub[i] + ib * ud[i]
        cc[i] = ic * ua[i] + id_ * uc[i]
        cd[i] = ic * ub[i] + id_ * ud[i]
        g1[i] = ia * w1 + ib * w2
        g2[i] = ic * w1 + id_ * w2

    y = np.empty((m, 2))
    v1, v2 = g1[m - 1], g2[m - 1]
    y[m - 1, 0] = v1
    y[m - 1, 1] = v2
    for i in range(m - 2, -1, -1):
        v1n, v2n = v1, v2
        v1 = g1[i] - (ca[i] * v1n + cb[i] * v2n)
        v2 = g2[i] - (cc[i] * v1n + cd[i] * v2n)
        y[i, 0] = v1
        y[i, 1] = v2
    return _make_grid(sys, y)


def _block_matvec(lower, diag, upper, y):
    # dtype-agnostic twin of DiscreteSystem.matvec
    out = np.einsum("ijk,ik->ij", diag, y)
    out[1:] += np.einsum("ijk,ik->ij", lower[1:], y[:-1])
    out[:-1] += np.einsum("ijk,ik->ij", upper[:-1], y[1:])
    return out


def _eliminate_extended(lower, diag, upper, rhs) -> np.ndarray:
    """Block Thomas elimination carried out in the arrays' own dtype.

    Python-level loop over numpy scalars, so roughly thirty times
    slower than ``solve``; reserved for the few meshes where float64
    corrections cannot reach the extended-precision solution.
    """
    m = rhs.shape[0]
    ca = np.empty(m, rhs.dtype)
    cb = np.empty_like(ca)
    cc = np.empty_like(ca)
    cd = np.empty_like(ca)
    g1 = np.empty_like(ca)
    g2 = np.empty_like(ca)
    for i in range(m):
        if i == 0:
            pa, pb, pc, pd = diag[0, 0, 0], diag[0, 0, 1], diag[0, 1, 0], diag[0, 1, 1]
            w1, w2 = rhs[0, 0], rhs[0, 1]
        else:
            xa, xb = lower[i, 0, 0], lower[i, 0, 1]
            xc, xd = lower[i, 1, 0], lower[i, 1, 1]
            j = i - 1
            pa = diag[i, 0, 0] - (xa * ca[j] + xb * cc[j])
            pb = diag[i, 0, 1] - (xa * cb[j] + xb * cd[j])
            pc = diag[i, 1, 0] - (xc * ca[j] + xd * cc[j])
            pd = diag[i, 1, 1] - (xc * cb[j] + xd * cd[j])
            w1 = rhs[i, 0] - (xa * g1[j] + xb * g2[j])
            w2 = rhs[i, 1] - (xc * g1[j] + xd * g2[j])
        det = pa * pd - pb * pc
        scale = (abs(pa) + abs(pb)) * (abs(pc) + abs(pd))
        if not abs(det) > 1e-30 * scale:
            raise LinearSolveError(f"singular 2x2 pivot at row {i} (det={det})")
        ia, ib, ic, id_ = pd / det, -pb / det, -pc / det, pa / det
        ca[i] = ia * upper[i, 0, 0] + ib * upper[i, 1, 0]
        cb[i] = ia * upper[i, 0, 1] + ib * upper[i, 1, 1]
        cc[i] = ic * upper[i, 0, 0] + id_ * upper[i, 1, 0]
        cd[i] = ic * upper[i, 0, 1] + id_ * upper[i, 1, 1]
        g1[i] = ia * w1 + ib * w2
        g2[i] = ic * w1 + id_ * w2
    y = np.empty((m, 2), rhs.dtype)
    y[m - 1, 0] = g1[m - 1]
    y[m - 1, 1] = g2[m - 1]
    for i in range(m - 2, -1, -1):
        y[i, 0] = g1[i] - (ca[i] * y[i + 1, 0] + cb[i] * y[i + 1, 1])
        y[i, 1] = g2[i] - (cc[i] * y[i + 1, 0] + cd[i] * y[i + 1, 1])
    return y


def solve_problem(spec: ProblemSpec, mesh: Mesh) -> SolutionGrid:
    """Assemble and solve on a mesh, escalating precision where needed.

    On meshes whose smallest step is below EXTENDED_STEP_THRESHOLD the
    float64 solution is iteratively refined against coefficients
    carried in np.longdouble: residuals are evaluated against the
    extended-precision system and corrections come from the float64
    elimination, so the iteration converges to the solution of the
    extended-precision system.  Once the corrections stall -- on the
    very finest meshes float64 elimination can no longer represent
    them -- the system is eliminated directly in extended precision.
    On platforms where np.longdouble is plain float64 both fallbacks
    still remove elimination round-off, just not coefficient rounding.
    """
    sys = assemble(spec, mesh)
    grid = solve(sys)
    if float(step_sizes(mesh).min()) >= EXTENDED_STEP_THRESHOLD:
        return grid
    lower, diag, upper, rhs = _assembly_arrays(spec, mesh, np.longdouble)
    y = grid.stacked().astype(np.longdouble)
    prev = np.inf
    for _ in range(6):
        r = rhs - _block_matvec(lower, diag, upper, y)
        corr = solve(dataclasses.replace(sys, rhs=r.astype(float)))
        delta = corr.stacked()
        y = y + delta
        step = float(np.abs(delta).max())
        if step <= 1e-12 * max(1.0, float(np.abs(y).max())):
            return _make_grid(sys, y.astype(float))
        if step > 0.25 * prev:
            break
        prev = step
    y = _eliminate_extended(lower, diag, upper, rhs)
    return _make_grid(sys, y.astype(float))


def data_rounding_noise(spec: ProblemSpec, mesh: Mesh, safety: float = 4.0) -> float:
    """Estimate the coefficient-rounding floor of a solve on this mesh.

    Assembles the system twice, in float64 and in np.longdouble, and
    eliminates both in extended precision, so the difference isolates
    what data rounding alone does to the solution.  That effect is
    linear in the unit round-off of the data, so scaling the gap by
    eps(longdouble)/eps(float64) extrapolates to the floor left in the
    longdouble-coefficient solution that ``solve_problem`` converges
    to.  ``safety`` absorbs the factor-of-a-few the linear model has
    been seen to miss.  On platforms where np.longdouble is plain
    float64 the gap degenerates to zero and the estimate is useless;
    callers should then treat fine-mesh values as unguarded.
    """
    base = _eliminate_extended(
        *(a.astype(np.longdouble) for a in _assembly_arrays(spec, mesh, float))
    )
    ext = _eliminate_extended(*_assembly_arrays(spec, mesh, np.longdouble))
    gap = float(np.abs((base - ext).astype(float)).max())
    ratio = float(np.finfo(np.longdouble).eps) / float(np.finfo(float).eps)
    return safety * ratio * gap


def solve_dense_reference(sys: DiscreteSystem) -> SolutionGrid:
    """Row-pivoted solve of the materialized matrix; test oracle only."""
    if sys.n_nodes - 1 > DENSE_MAX_INTERVALS:
        raise LinearSolveError(
            f"dense reference limited to {DENSE_MAX_INTERVALS} intervals, "
            f"got {sys.n_nodes - 1}"
        )
    a, b = sys.to_dense()
    try:
        y = np.linalg.solve(a, b)
    except np.linalg.LinAlgError as exc:
        raise LinearSolveError(f"dense solve failed: {exc}") from exc
    return _make_grid(sys, y.reshape(-1, 2))


def write_solution_csv(grid: SolutionGrid, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y1", "y2"])
        for x, v1, v2 in zip(grid.mesh_ref.nodes, grid.y1, grid.y2):
            w.writerow([f"{x:.16e}", f"{v1:.16e}", f"{v2:.16e}"])
