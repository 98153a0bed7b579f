"""Layer-adapted meshes on [0, 1] for two-parameter problems.

Both constructions split the interval at the transition points

    tau_mu  = min( 1/4, sigma mu ln N / lam )
    tau_eps = min( 1/8, tau_mu / 2, sigma eps ln N / lam )

into five pieces [0, tau_eps], [tau_eps, tau_mu], [tau_mu, 1 - tau_mu],
[1 - tau_mu, 1 - tau_eps], [1 - tau_eps, 1] carrying N/8, N/8, N/2,
N/8, N/8 intervals.

* ``shishkin``: each piece is uniform.
* ``bakhvalov_shishkin``: the four layer pieces are graded so that the
  layer exponentials are traversed in equal increments, which removes
  the ln N factor from the attainable order.  The inner pieces
  [tau_eps, tau_mu] and its mirror invert exp(-lam x / (2 mu)) between
  its endpoint values.  The outer pieces [0, tau_eps] and its mirror
  equidistribute the sum of both layer weights,

      (1 - exp(-lam x/(2 eps))) + (1 - exp(-lam x/(2 mu))),

  rather than the eps weight alone.  Single-weight grading of the
  outer piece lets the steps just before tau_eps grow to the eps ln N
  scale; for mu/eps ratios around 10-100 the mu layer still carries
  curvature of order 1/mu^2 there, and those few steps cap the whole
  error table at N^(-sigma eps/mu) instead of N^(-sigma).  The
  combined weight keeps every step small on whichever layer scale is
  still active and reduces to single-weight grading when eps = mu.
  With the clamps inactive the grading targets are the closed-form
  N-powers N^(-sigma/2) and N^(-sigma eps/(2 mu)); with a clamp
  active the same grading runs toward the clamped transition points,
  so the construction stays valid for eps = mu and for large
  parameters.

The mu-graded branch values are computed as convex combinations of the
endpoint targets inside the log, which is algebraically identical to
the usual closed form but free of cancellation near the junctions; the
combined-weight branch is resolved by a monotone Newton iteration.
The right half of every mesh is the exact reflection of the left half:
near x = 0 the node increments are far above the floating-point
spacing, while deriving near-1 nodes directly from the formulas
quantizes their increments to the spacing at 1 and can even collide
them for extreme parameter ratios.

Node positions near 1 are unavoidably rounded to the float64 grid, so
a mesh also carries its construction-exact step sizes.  Discrete
operators must be built from the steps: differences of the rounded
positions lose all relative accuracy once steps approach the grid
spacing (layer widths of order 1e-13 and below), while the positions
themselves are only ever used to sample smooth data, where an absolute
error at the float64 spacing is harmless.  Pinned refinements copy the
parent nodes bit-exactly into the refined node array so that a fine
solution can be read off at coarse nodes without position jitter.
"""

from __future__ import annotations

import csv
import dataclasses
import math
from dataclasses import dataclass

import numpy as np

SHISHKIN = "shishkin"
BAKHVALOV_SHISHKIN = "bakhvalov_shishkin"
UNIFORM = "uniform"

MESH_KINDS = (SHISHKIN, BAKHVALOV_SHISHKIN, UNIFORM)


class MeshParameterError(ValueError):
    """Invalid mesh construction parameters."""


@dataclass(frozen=True)
class MeshParams:
    """Construction parameters: interval count n, grading constants, problem parameters.

    n must be a positive multiple of 8 (the finest subdivision used is
    n/8) and sigma >= 2 (second-order layer resolution needs at least
    two powers of the layer exponential inside the fine region).
    """

    n: int
    sigma: float
    lam: float
    eps: float
    mu: float

    def __post_init__(self):
        if self.n <= 0 or self.n % 8 != 0:
            raise MeshParameterError(f"n must be a positive multiple of 8, got {self.n}")
        if self.sigma < 2.0:
            raise MeshParameterError(f"sigma must be >= 2, got {self.sigma}")
        if self.lam <= 0.0:
            raise MeshParameterError(f"lam must be positive, got {self.lam}")
        if not (0.0 < self.eps <= self.mu <= 1.0):
            raise MeshParameterError(
                f"need 0 < eps <= mu <= 1, got eps={self.eps}, mu={self.mu}"
            )


@dataclass(frozen=True)
class Mesh:
    """An ordered node set on [0, 1] plus the transition points actually used.

    ``params`` records how the mesh was built (None for ad-hoc uniform
    meshes).  Nodes are read-only; a refined mesh keeps the coarse
    transition points, so ``params.n`` reflects the node count while
    tau_eps/tau_mu stay authoritative.

    ``steps`` holds the construction-exact interval lengths when the
    builder can provide them.  They agree with differences of ``nodes``
    up to node rounding (near x = 1 a node is representable only to the
    float64 spacing at 1, which can exceed the relative size of a layer
    step); discrete operators should take their geometry from here, see
    ``step_sizes``.
    """

    kind: str
    nodes: np.ndarray
    tau_eps: float
    tau_mu: float
    params: MeshParams | None = None
    steps: np.ndarray | None = None

    def __post_init__(self):
        nodes = np.ascontiguousarray(np.asarray(self.nodes, dtype=float))
        if nodes.ndim != 1 or nodes.size < 2:
            raise MeshParameterError("nodes must be a 1-d array with at least 2 entries")
        if abs(nodes[0]) > 1e-12 or abs(nodes[-1] - 1.0) > 1e-12:
            raise MeshParameterError("mesh must span [0, 1]")
        if not (np.diff(nodes) > 0.0).all():
            raise MeshParameterError("nodes must be strictly increasing")
        if not (0.0 < self.tau_eps <= 0.5 * self.tau_mu * (1.0 + 1e-12)):
            raise MeshParameterError(
                f"need 0 < tau_eps <= tau_mu/2, got tau_eps={self.tau_eps}, tau_mu={self.tau_mu}"
            )
        if self.tau_mu > 0.25 * (1.0 + 1e-12):
            raise MeshParameterError(f"tau_mu must be <= 1/4, got {self.tau_mu}")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        if self.steps is not None:
            steps = np.ascontiguousarray(np.asarray(self.steps, dtype=float))
            if steps.shape != (nodes.size - 1,):
                raise MeshParameterError("steps must carry one entry per interval")
            if not np.isfinite(steps).all() or not (steps > 0.0).all():
                raise MeshParameterError("steps must be positive and finite")
            if abs(math.fsum(steps.tolist()) - 1.0) > 1e-12:
                raise MeshParameterError("steps must sum to the interval length 1")
            if np.abs(np.diff(nodes) - steps).max() > 1e-12:
                raise MeshParameterError("steps disagree with node differences beyond rounding")
            steps.setflags(write=False)
            object.__setattr__(self, "steps", steps)

    @property
    def n(self) -> int:
        """Number of intervals."""
        return self.nodes.size - 1


def transition_params(p: MeshParams) -> tuple[float, float]:
    """(tau_mu, tau_eps) from the min() formulas, exactly as written."""
    ln_n = math.log(p.n)
    tau_mu = min(0.25, p.sigma * p.mu * ln_n / p.lam)
    tau_eps = min(0.125, 0.5 * tau_mu, p.sigma * p.eps * ln_n / p.lam)
    return tau_mu, tau_eps


def _mirror_right_half(x: np.ndarray) -> np.ndarray:
    # right half as the exact reflection of the left: keeps the mesh
    # bit-symmetric and avoids re-deriving near-1 nodes from formulas
    # whose increments fall near the float64 spacing at 1
    n = x.size - 1
    x[n // 2 + 1 :] = 1.0 - x[: n // 2][::-1]
    x[n] = 1.0
    return x


def _mirror_steps(h: np.ndarray) -> np.ndarray:
    # symmetric mesh, so the step sequence is a palindrome
    h[h.size // 2 :] = h[: h.size // 2][::-1]
    return h


def _piecewise_uniform(n: int, tau_eps: float, tau_mu: float) -> tuple[np.ndarray, np.ndarray]:
    n8 = n // 8
    x = np.empty(n + 1)
    x[: n8 + 1] = np.linspace(0.0, tau_eps, n8 + 1)
    x[n8 : 2 * n8 + 1] = np.linspace(tau_eps, tau_mu, n8 + 1)
    x[2 * n8 : n // 2 + 1] = np.linspace(tau_mu, 1.0 - tau_mu, 4 * n8 + 1)[: 2 * n8 + 1]
    h = np.empty(n)
    h[:n8] = tau_eps / n8
    h[n8 : 2 * n8] = (tau_mu - tau_eps) / n8
    h[2 * n8 : n // 2] = (1.0 - 2.0 * tau_mu) / (4 * n8)
    return _mirror_right_half(x), _mirror_steps(h)


def shishkin(p: MeshParams) -> Mesh:
    """Piecewise-uniform layer mesh; transition nodes land exactly."""
    tau_mu, tau_eps = transition_params(p)
    nodes, steps = _piecewise_uniform(p.n, tau_eps, tau_mu)
    return Mesh(
        kind=SHISHKIN, nodes=nodes, tau_eps=tau_eps, tau_mu=tau_mu, params=p, steps=steps
    )


def _two_weight_nodes(
    s: np.ndarray, tau_eps: float, a: float, b: float, eps: float, mu: float, lam: float
) -> np.ndarray:
    """Interior nodes of the combined-weight graded piece [0, tau_eps].

    Solves F(x_i) = s_i ((1 - a) + (1 - b)) for the weight

        F(x) = (1 - exp(-lam x / (2 eps))) + (1 - exp(-lam x / (2 mu))),

    which is increasing and concave, so Newton iteration from any
    undershoot converges monotonically from below.  The pointwise
    minimum of the two single-weight inverses is such an undershoot:
    at that point each weight term sits at or below its share of the
    target.  Convergence is quadratic; the loop cap is never reached.
    """
    target = s * ((1.0 - a) + (1.0 - b))
    x_eps = (-2.0 * eps / lam) * np.log((1.0 - s) + s * a)
    x_mu = (-2.0 * mu / lam) * np.log((1.0 - s) + s * b)
    x = np.minimum(x_eps, x_mu)
    for _ in range(80):
        u = np.exp(-lam * x / (2.0 * eps))
        v = np.exp(-lam * x / (2.0 * mu))
        step = (target - (2.0 - u - v)) / ((0.5 * lam) * (u / eps + v / mu))
        np.maximum(step, 0.0, out=step)  # concavity: a float-noise step never overshoots
        x += step
        if float((step / x).max()) <= 1e-15:
            break
    return x


def _graded_nodes(
    n: int,
    tau_eps: float,
    tau_mu: float,
    a: float,
    b: float,
    c: float,
    eps: float,
    mu: float,
    lam: float,
) -> tuple[np.ndarray, np.ndarray]:
    # a = exp(-lam tau_eps / (2 eps)): outer-piece target in the eps scale
    # b = exp(-lam tau_eps / (2 mu)), c = exp(-lam tau_mu / (2 mu)):
    #     inner-piece endpoints in the mu scale (b > c required)
    if not (0.0 < a < 1.0 and 0.0 < c < b < 1.0):
        raise MeshParameterError(
            f"non-monotone grading targets a={a}, b={b}, c={c}; "
            "transition parameters do not separate the layer scales"
        )
    n8 = n // 8
    x = np.empty(n + 1)
    t = 8.0 * np.arange(n // 2 + 1) / n  # grading fraction, left half
    # [0, tau_eps]: equidistribute the combined layer weight
    x[0] = 0.0
    if n8 > 1:
        x[1:n8] = _two_weight_nodes(t[1:n8], tau_eps, a, b, eps, mu, lam)
    x[n8] = tau_eps
    # [tau_eps, tau_mu]: invert exp(-lam x/(2 mu)) from b down to c
    s = t[n8 + 1 : 2 * n8]
    x[n8 + 1 : 2 * n8] = (-2.0 * mu / lam) * np.log((s - 1.0) * c + (2.0 - s) * b)
    # uniform center, right half by reflection like everything else
    x[2 * n8 : n // 2 + 1] = np.linspace(tau_mu, 1.0 - tau_mu, 4 * n8 + 1)[: 2 * n8 + 1]
    # steps from the left half, where positions carry full relative
    # precision, then mirrored; the uniform center gets the exact value
    h = np.empty(n)
    h[: n // 2] = np.diff(x[: n // 2 + 1])
    h[2 * n8 : n // 2] = (1.0 - 2.0 * tau_mu) / (4 * n8)
    return _mirror_right_half(x), _mirror_steps(h)


def _graded_targets(p: MeshParams, tau_eps: float, tau_mu: float) -> tuple[float, float, float]:
    ln_n = math.log(p.n)
    raw_eps = p.sigma * p.eps * ln_n / p.lam
    raw_mu = p.sigma * p.mu * ln_n / p.lam
    if tau_eps == raw_eps and tau_mu == raw_mu:
        # clamps inactive: the closed-form N-power targets, verbatim
        a = p.n ** (-0.5 * p.sigma)
        b = p.n ** (-0.5 * p.sigma * p.eps / p.mu)
        return a, b, a
    a = math.exp(-p.lam * tau_eps / (2.0 * p.eps))
    b = math.exp(-p.lam * tau_eps / (2.0 * p.mu))
    c = math.exp(-p.lam * tau_mu / (2.0 * p.mu))
    return a, b, c


def bakhvalov_shishkin(p: MeshParams) -> Mesh:
    """Graded layer mesh: logarithmic node placement inside the layer pieces."""
    tau_mu, tau_eps = transition_params(p)
    a, b, c = _graded_targets(p, tau_eps, tau_mu)
    nodes, steps = _graded_nodes(p.n, tau_eps, tau_mu, a, b, c, p.eps, p.mu, p.lam)
    return Mesh(
        kind=BAKHVALOV_SHISHKIN,
        nodes=nodes,
        tau_eps=tau_eps,
        tau_mu=tau_mu,
        params=p,
        steps=steps,
    )


def uniform(n: int) -> Mesh:
    """Uniform mesh, mainly for tests and diagnostics (no layer resolution)."""
    if n < 4:
        raise MeshParameterError(f"need at least 4 intervals, got {n}")
    return Mesh(
        kind=UNIFORM,
        nodes=np.linspace(0.0, 1.0, n + 1),
        tau_eps=0.125,  # nominal: the fully clamped transition points
        tau_mu=0.25,
        params=None,
    )


def build(kind: str, p: MeshParams) -> Mesh:
    """Constructor dispatch by kind name."""
    if kind == SHISHKIN:
        return shishkin(p)
    if kind == BAKHVALOV_SHISHKIN:
        return bakhvalov_shishkin(p)
    if kind == UNIFORM:
        return uniform(p.n)
    raise MeshParameterError(f"unknown mesh kind {kind!r}; valid kinds: {MESH_KINDS}")


def refine_pinned(mesh: Mesh, factor: int) -> Mesh:
    """Same construction with factor times as many intervals, transition
    points held at the coarse values.

    This is what the two-mesh error estimators need: the refined mesh
    subdivides the same five pieces with the same grading targets, so
    every coarse node is also a fine node.  The shared nodes are copied
    from the coarse mesh bit-exactly; without that, re-deriving them at
    the finer resolution can move a near-1 node by one spacing unit at
    1, which is an order-one relative shift across a layer step.
    """
    if int(factor) != factor or factor < 2:
        raise MeshParameterError(f"refinement factor must be an integer >= 2, got {factor}")
    factor = int(factor)
    n2 = mesh.n * factor
    if mesh.kind == UNIFORM:
        return uniform(n2)
    p = mesh.params
    if p is None:
        raise MeshParameterError("mesh carries no construction parameters to refine")
    p2 = dataclasses.replace(p, n=n2)
    if mesh.kind == SHISHKIN:
        nodes, steps = _piecewise_uniform(n2, mesh.tau_eps, mesh.tau_mu)
    else:
        # recomputing the targets from the coarse parameters reproduces
        # the coarse construction exactly, clamped or not
        a, b, c = _graded_targets(p, mesh.tau_eps, mesh.tau_mu)
        nodes, steps = _graded_nodes(
            n2, mesh.tau_eps, mesh.tau_mu, a, b, c, p.eps, p.mu, p.lam
        )
    drift = float(np.abs(nodes[::factor] - mesh.nodes).max())
    if drift > 1e-9:
        raise MeshParameterError(
            f"refinement does not reproduce the coarse nodes (drift {drift:.3e})"
        )
    nodes[::factor] = mesh.nodes
    return Mesh(
        kind=mesh.kind,
        nodes=nodes,
        tau_eps=mesh.tau_eps,
        tau_mu=mesh.tau_mu,
        params=p2,
        steps=steps,
    )


def step_sizes(mesh: Mesh) -> np.ndarray:
    """h_i = x_i - x_{i-1}, i = 1..n; all positive by construction.

    Built meshes return their construction-exact steps, which match the
    node differences up to node rounding near x = 1 and stay accurate
    when layer steps approach the float64 spacing there.  Ad-hoc meshes
    fall back to differencing the nodes.
    """
    if mesh.steps is not None:
        return mesh.steps
    return np.diff(mesh.nodes)


def graded_junction_mismatch(p: MeshParams) -> dict[int, float]:
    """Relative mismatch of the graded branch formulas at the junction indices.

    Evaluates the neighbouring layer-branch formula at i = n/8, n/4,
    3n/4, 7n/8 and compares with the node the mesh actually assigns
    there.  The branches agree algebraically; this measures the genuine
    floating-point mismatch and never patches it.
    """
    mesh = bakhvalov_shishkin(p)
    a, b, c = _graded_targets(p, mesh.tau_eps, mesh.tau_mu)
    n = p.n
    n8 = n // 8

    def mu_branch_left(i):
        t = 8.0 * i / n
        return (-2.0 * p.mu / p.lam) * math.log((t - 1.0) * c + (2.0 - t) * b)

    def mu_branch_right(i):
        t = 8.0 * i / n
        return 1.0 + (2.0 * p.mu / p.lam) * math.log((7.0 - t) * c + (t - 6.0) * b)

    probes = {
        n8: mu_branch_left(n8),
        2 * n8: mu_branch_left(2 * n8),
        6 * n8: mu_branch_right(6 * n8),
        7 * n8: mu_branch_right(7 * n8),
    }
    out = {}
    for i, probe in probes.items():
        ref = float(mesh.nodes[i])
        out[i] = abs(probe - ref) / max(abs(ref), 1e-300)
    return out


def default_lambda(lambda_max: float) -> float:
    """Grading constant from a validation bound: lambda_max rounded down
    to 3 decimals (a slightly small lam widens the graded region, which
    is safe; a too-large one is not)."""
    if lambda_max <= 0.0:
        raise ValueError(f"lambda_max must be positive, got {lambda_max}")
    v = math.floor(lambda_max * 1000.0) / 1000.0
    if v <= 0.0:
        raise ValueError(f"lambda_max={lambda_max} rounds down to zero")
    return v


def write_mesh_csv(mesh: Mesh, path) -> None:
    """Write (i, x_i, h_i) rows; h is blank at i = 0."""
    h = step_sizes(mesh)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["i", "x", "h"])
        writer.writerow([0, f"{mesh.nodes[0]:.16e}", ""])
        for i in range(1, mesh.nodes.size):
            writer.writerow([i, f"{mesh.nodes[i]:.16e}", f"{h[i - 1]:.16e}"])
