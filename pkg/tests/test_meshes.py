import math

import numpy as np
import pytest

from layerlab.meshes import (
    BAKHVALOV_SHISHKIN,
    SHISHKIN,
    UNIFORM,
    Mesh,
    MeshParameterError,
    MeshParams,
    build,
    default_lambda,
    graded_junction_mismatch,
    refine_pinned,
    step_sizes,
    transition_params,
    uniform,
    write_mesh_csv,
)

GRADED_KINDS = (SHISHKIN, BAKHVALOV_SHISHKIN)


def _params(**kw):
    base = dict(n=64, sigma=2.0, lam=0.7, eps=1e-5, mu=1e-3)
    base.update(kw)
    return MeshParams(**base)


@pytest.mark.parametrize(
    "kw",
    [
        dict(n=0),
        dict(n=-8),
        dict(n=12),  # not a multiple of 8
        dict(sigma=1.9),
        dict(lam=0.0),
        dict(lam=-1.0),
        dict(eps=0.0),
        dict(eps=1e-2),  # eps > mu
        dict(mu=2.0),
    ],
)
def test_params_validation(kw):
    with pytest.raises(MeshParameterError):
        _params(**kw)


def test_transition_params_frozen():
    # sigma mu ln(64) / lam and its half, neither clamp active
    p = _params(eps=1e-3, mu=1e-3)
    tau_mu, tau_eps = transition_params(p)
    assert tau_mu == 0.01188252309531335
    assert tau_eps == 0.005941261547656675
    assert tau_eps == 0.5 * tau_mu  # the tau_mu/2 clamp binds at eps = mu


def test_transition_params_outer_clamps():
    p = _params(n=64, eps=0.1, mu=1.0, lam=0.7)
    tau_mu, tau_eps = transition_params(p)
    assert tau_mu == 0.25
    assert tau_eps == 0.125


@pytest.mark.parametrize("kind", GRADED_KINDS)
def test_mesh_invariants(kind):
    p = _params()
    m = build(kind, p)
    h = step_sizes(m)
    assert m.n == 64
    assert m.nodes[0] == 0.0 and m.nodes[-1] == 1.0
    assert (np.diff(m.nodes) > 0.0).all()
    assert (h > 0.0).all()
    assert abs(math.fsum(h.tolist()) - 1.0) <= 1e-12
    # symmetric construction mirrors the step sequence exactly
    assert np.array_equal(h, h[::-1])


@pytest.mark.parametrize("kind", GRADED_KINDS)
def test_transition_nodes_land_exactly(kind):
    p = _params()
    m = build(kind, p)
    tau_mu, tau_eps = transition_params(p)
    assert m.tau_mu == tau_mu and m.tau_eps == tau_eps
    assert m.nodes[8] == tau_eps
    assert m.nodes[16] == tau_mu
    assert m.nodes[48] == 1.0 - tau_mu
    assert m.nodes[56] == 1.0 - tau_eps


def test_shishkin_piecewise_uniform():
    p = _params()
    m = build(SHISHKIN, p)
    h = step_sizes(m)
    assert h[0] == m.tau_eps / 8.0
    for lo, hi in ((0, 8), (8, 16), (16, 48), (48, 56), (56, 64)):
        assert np.ptp(h[lo:hi]) == 0.0


def test_shishkin_first_step_frozen():
    p = _params(eps=1e-3, mu=1e-3)
    h = step_sizes(build(SHISHKIN, p))
    assert h[0] == 0.0007426576934570844


def test_graded_first_piece_frozen():
    """First-piece nodes against 50-digit equidistribution of the
    two-weight layer integral (independent bisection oracle)."""
    m = build(BAKHVALOV_SHISHKIN, _params())
    assert m.nodes[1] == pytest.approx(3.873496963922328e-06, rel=1e-13)
    assert m.nodes[4] == pytest.approx(2.0122390126399726e-05, rel=1e-13)
    assert m.nodes[7] == pytest.approx(5.9709159171504624e-05, rel=1e-13)
    # second piece follows the mu-scale log grading
    assert m.nodes[12] == pytest.approx(0.002053082053657808, rel=1e-13)


def test_graded_collapses_to_single_scale_at_equal_parameters():
    # at eps = mu both weights coincide and the first piece reduces to
    # the closed-form x_i = -(2 eps / lam) ln(1 - s (1 - a))
    eps = 1e-6
    p = _params(eps=eps, mu=eps)
    m = build(BAKHVALOV_SHISHKIN, p)
    a = math.exp(-p.lam * m.tau_eps / (2.0 * eps))
    for i in range(1, 8):
        s = i / 8.0
        xi = -(2.0 * eps / p.lam) * math.log(1.0 - s * (1.0 - a))
        assert m.nodes[i] == pytest.approx(xi, rel=1e-13)


def test_graded_junction_mismatch_small():
    out = graded_junction_mismatch(_params())
    assert set(out) == {8, 16, 48, 56}
    assert max(out.values()) <= 1e-12


@pytest.mark.parametrize("eps,mu", [(1e-8, 1e-4), (1e-6, 1e-3)])
@pytest.mark.parametrize("n", [64, 512])
def test_graded_step_bound(eps, mu, n):
    # no graded step may exceed max(2/N, 4/(lam N))
    p = _params(n=n, eps=eps, mu=mu, lam=0.707)
    h = step_sizes(build(BAKHVALOV_SHISHKIN, p))
    bound = max(2.0 / n, 4.0 / (p.lam * n))
    assert h.max() <= bound * (1.0 + 1e-12)


@pytest.mark.parametrize("kind", GRADED_KINDS)
@pytest.mark.parametrize("factor", [2, 5])
def test_refine_pinned_shares_nodes_bitwise(kind, factor):
    m = build(kind, _params())
    r = refine_pinned(m, factor)
    assert r.n == factor * m.n
    assert np.array_equal(r.nodes[::factor], m.nodes)
    assert r.tau_eps == m.tau_eps and r.tau_mu == m.tau_mu
    assert r.params.n == r.n


def test_refine_pinned_validation():
    m = build(SHISHKIN, _params())
    with pytest.raises(MeshParameterError):
        refine_pinned(m, 1)
    adhoc = Mesh(
        kind=SHISHKIN, nodes=m.nodes, tau_eps=m.tau_eps, tau_mu=m.tau_mu, params=None
    )
    with pytest.raises(MeshParameterError, match="no construction parameters"):
        refine_pinned(adhoc, 2)


def test_refine_uniform():
    r = refine_pinned(uniform(8), 2)
    assert r.kind == UNIFORM and r.n == 16


def test_uniform_mesh():
    m = uniform(10)
    assert np.allclose(m.nodes, np.linspace(0.0, 1.0, 11))
    with pytest.raises(MeshParameterError):
        uniform(3)


def test_build_dispatch():
    p = _params()
    assert build(SHISHKIN, p).kind == SHISHKIN
    assert build(BAKHVALOV_SHISHKIN, p).kind == BAKHVALOV_SHISHKIN
    assert build(UNIFORM, p).kind == UNIFORM
    with pytest.raises(MeshParameterError):
        build("chebyshev", p)


def test_mesh_direct_construction_validates():
    with pytest.raises(MeshParameterError):
        Mesh(kind=UNIFORM, nodes=np.array([0.0, 0.5, 0.5, 1.0]), tau_eps=0.125, tau_mu=0.25)
    with pytest.raises(MeshParameterError):
        Mesh(kind=UNIFORM, nodes=np.array([0.0, 0.5, 0.9]), tau_eps=0.125, tau_mu=0.25)
    with pytest.raises(MeshParameterError):
        Mesh(kind=UNIFORM, nodes=np.array([0.0, 0.5, 1.0]), tau_eps=0.2, tau_mu=0.25)


def test_default_lambda():
    assert default_lambda(math.sqrt(0.5)) == 0.707
    assert default_lambda(0.886445958661274) == 0.886
    assert default_lambda(1.0) == 1.0
    with pytest.raises(ValueError):
        default_lambda(0.0)
    with pytest.raises(ValueError):
        default_lambda(4e-4)  # rounds down to zero


def test_write_mesh_csv(tmp_path):
    import csv

    m = build(SHISHKIN, _params(n=16))
    path = tmp_path / "mesh.csv"
    write_mesh_csv(m, path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["i", "x", "h"]
    assert len(rows) == m.n + 2
    assert rows[1][2] == ""  # no step before the first node
    assert float(rows[-1][1]) == 1.0
