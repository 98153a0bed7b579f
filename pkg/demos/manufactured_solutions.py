"""
Exactness on manufactured problems
==================================

Two built-in problems have known solutions. The constant one (y1 = y2
= 1) must be reproduced to rounding on any mesh because every stencil
row sums its coefficients against a constant. The quadratic one
exercises the spline boundary rows: central differences and the
one-sided spline derivatives are both exact on quadratics, so the
discrete solution again matches to rounding, on uniform and on heavily
graded meshes alike.
"""

import numpy as np

from layerlab import (
    MeshParams,
    build,
    builtin,
    exact_solution,
    grid_values,
    solve_problem,
    uniform,
)

def deviation(name: str, mesh) -> float:
    eps = mesh.params.eps if mesh.params else 1e-3
    mu = mesh.params.mu if mesh.params else 1e-3
    spec = builtin(name, eps, mu)
    grid = solve_problem(spec, mesh)
    y1, y2 = exact_solution(name)
    return max(
        float(np.abs(grid.y1 - grid_values(y1, mesh.nodes)).max()),
        float(np.abs(grid.y2 - grid_values(y2, mesh.nodes)).max()),
    )

print("constant_mms (exact solution y1 = y2 = 1):")
for eps, mu in ((1.0, 1.0), (1e-3, 1e-3), (1e-8, 1e-5)):
    p = MeshParams(n=64, sigma=2.0, lam=0.7, eps=eps, mu=mu)
    for kind in ("shishkin", "bakhvalov_shishkin"):
        print(f"  eps={eps:<6g} mu={mu:<6g} {kind:<19} max|Y-1| = {deviation('constant_mms', build(kind, p)):.2e}")

print("\npoly_mms (exact solution quadratic in x):")
print(f"  uniform N=32                           max|Y-exact| = {deviation('poly_mms', uniform(32)):.2e}")
for eps, mu in ((1e-3, 1e-3), (1e-6, 1e-3)):
    p = MeshParams(n=64, sigma=2.0, lam=0.7, eps=eps, mu=mu)
    for kind in ("shishkin", "bakhvalov_shishkin"):
        print(f"  eps={eps:<6g} mu={mu:<6g} {kind:<19} max|Y-exact| = {deviation('poly_mms', build(kind, p)):.2e}")

# the quadratic case is the sharper check: it has nonzero derivatives at
# both endpoints, so the Robin rows must combine the spline derivative
# and the boundary value with the right parameter scaling
spec = builtin("poly_mms", 1e-6, 1e-3)
print(f"\npoly_mms boundary data: P1={spec.bc1.P}  Q1={spec.bc1.Q}  P2={spec.bc2.P}  Q2={spec.bc2.Q}")
