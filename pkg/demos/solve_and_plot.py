"""
Solve a coupled two-parameter problem and look at the layers
============================================================

example1 at eps = 1e-6, mu = 1e-2: the first component carries a sharp
inner layer of width O(eps) inside the wider O(mu) layer of the second.
"""

import numpy as np

from layerlab import MeshParams, bakhvalov_shishkin, builtin, solve_problem

eps, mu = 1e-6, 1e-2
spec = builtin("example1", eps, mu)
mesh = bakhvalov_shishkin(MeshParams(n=512, sigma=2.0, lam=0.707, eps=eps, mu=mu))
grid = solve_problem(spec, mesh)

print(f"solved N={mesh.n}  residual={grid.residual_inf:.2e}")
print(f"transition points: tau_eps={mesh.tau_eps:.3e}  tau_mu={mesh.tau_mu:.3e}")

# the layer is where the solution moves: count the variation inside and
# outside the mu-transition band
x = mesh.nodes
inside = (x < mesh.tau_mu) | (x > 1.0 - mesh.tau_mu)
var = lambda y, m: float(np.abs(np.diff(y[m])).sum())
for name, y in (("y1", grid.y1), ("y2", grid.y2)):
    print(
        f"{name}: range [{y.min():.4f}, {y.max():.4f}]  "
        f"variation inside layers {var(y, inside):.3f} vs outside {var(y, ~inside):.3f}"
    )

# boundary values: the Robin data tie a combination of value and scaled
# slope, so the endpoint values themselves are parameter-dependent
print(f"endpoint values: y1(0)={grid.y1[0]:.6f}  y1(1)={grid.y1[-1]:.6f}")
print(f"                 y2(0)={grid.y2[0]:.6f}  y2(1)={grid.y2[-1]:.6f}")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    print("matplotlib not installed; skipping the figure")
else:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4), sharey=True)
    for ax, lim in ((ax1, (0.0, 1.0)), (ax2, (0.0, 4.0 * mesh.tau_mu))):
        ax.plot(x, grid.y1, label="y1", lw=1.0)
        ax.plot(x, grid.y2, label="y2", lw=1.0)
        ax.axvline(mesh.tau_eps, color="gray", ls=":", lw=0.8)
        ax.axvline(mesh.tau_mu, color="gray", ls="--", lw=0.8)
        ax.set_xlim(*lim)
        ax.set_xlabel("x")
    ax1.set_title("whole interval")
    ax2.set_title("left layer region (zoom)")
    ax1.legend()
    fig.tight_layout()
    fig.savefig("solve_and_plot.png", dpi=120)
    print("wrote solve_and_plot.png")
