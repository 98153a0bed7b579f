"""
A small parameter-uniform convergence table
===========================================

The full study sweeps eps over 12 decades and N up to 4096; this demo
keeps 4 decades and N up to 512 so it finishes in well under a minute,
and already shows the difference between the two mesh families: the
graded mesh reaches rate 2 while the piecewise-uniform one drags a
log^2 N factor.
"""

from functools import partial

from layerlab import builtin, rates_markdown, uniform_sweep

n_list = [32, 64, 128, 256, 512]
eps_list = [1e-3, 1e-5, 1e-7, 1e-9]

for kind in ("shishkin", "bakhvalov_shishkin"):
    report = uniform_sweep(
        partial(builtin, "example1"),
        n_list,
        eps_list=eps_list,
        mesh_kind=kind,
        sigma=2.0,
    )
    print(f"example1 on {kind} (sigma=2, lambda={report.lam}):")
    print(rates_markdown(report))
    print()

# the same machinery over single cells: the E estimate against a 5x
# refined reference and the D difference against the 2x one
from layerlab import ErrorCell, MeshParams, error_vs_fine, two_mesh_difference

spec = builtin("example1", 1e-7, 1e-4)
for n in (64, 128, 256):
    p = MeshParams(n=n, sigma=2.0, lam=0.707, eps=spec.eps, mu=spec.mu)
    e = error_vs_fine(spec, p, "bakhvalov_shishkin")
    d = two_mesh_difference(spec, p, "bakhvalov_shishkin")
    print(f"N={n:4d}  E={e.value:.3e}  D={d.value:.3e}")
