"""
Where the mesh points go
========================

Node placement of the piecewise-uniform and the graded family for a few
(eps, mu) regimes, plus the step-size profile that makes the graded
mesh second-order: no step exceeds max(2/N, 4/(lam N)).
"""

import numpy as np

from layerlab import MeshParams, build, step_sizes, transition_params

N = 64
lam = 0.7
regimes = [
    ("one parameter   ", 1e-6, 1e-6),
    ("separated scales", 1e-8, 1e-4),
    ("close scales    ", 1e-7, 1e-6),
]

for label, eps, mu in regimes:
    p = MeshParams(n=N, sigma=2.0, lam=lam, eps=eps, mu=mu)
    tau_mu, tau_eps = transition_params(p)
    print(f"{label} eps={eps:.0e} mu={mu:.0e}  tau_eps={tau_eps:.2e} tau_mu={tau_mu:.2e}")
    for kind in ("shishkin", "bakhvalov_shishkin"):
        m = build(kind, p)
        h = step_sizes(m)
        in_eps = int((m.nodes <= tau_eps).sum()) - 1
        in_mu = int((m.nodes <= tau_mu).sum()) - 1
        print(
            f"  {kind:<19} h: min {h.min():.2e}  max {h.max():.2e}  "
            f"bound {max(2.0 / N, 4.0 / (lam * N)):.2e}  "
            f"intervals in [0,tau_eps]: {in_eps}, in [0,tau_mu]: {in_mu}"
        )
    print()

# the graded mesh is the same five-piece split, but inside the layer
# pieces the steps grow geometrically instead of staying uniform
p = MeshParams(n=N, sigma=2.0, lam=lam, eps=1e-8, mu=1e-4)
s = build("shishkin", p)
b = build("bakhvalov_shishkin", p)
hs, hb = step_sizes(s), step_sizes(b)
print("step growth across the eps piece (first N/8 steps), separated scales:")
print("  shishkin          :", " ".join(f"{v:.1e}" for v in hs[: N // 8][:: 2]))
print("  bakhvalov_shishkin:", " ".join(f"{v:.1e}" for v in hb[: N // 8][:: 2]))

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    print("matplotlib not installed; skipping the figure")
else:
    fig, axes = plt.subplots(2, 1, figsize=(9, 4), sharex=True)
    for ax, mesh, title in ((axes[0], s, "shishkin"), (axes[1], b, "bakhvalov_shishkin")):
        ax.plot(mesh.nodes, np.zeros_like(mesh.nodes), "|", ms=14)
        ax.set_yticks([])
        ax.set_title(title, fontsize=9, loc="left")
        ax.set_xscale("symlog", linthresh=1e-7)
    axes[1].set_xlabel("x (symlog)")
    fig.tight_layout()
    fig.savefig("mesh_gallery.png", dpi=120)
    print("wrote mesh_gallery.png")
