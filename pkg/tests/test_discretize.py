import csv

import numpy as np
import pytest

from layerlab.discretize import (
    AssemblyError,
    DiscreteSystem,
    assemble,
    m_matrix_audit,
    spline_derivative_coeffs,
    truncation_identities,
    write_system_csv,
)
from layerlab.meshes import (
    BAKHVALOV_SHISHKIN,
    SHISHKIN,
    MeshParams,
    build,
    step_sizes,
    uniform,
)
from layerlab.problems import ProblemSpec, RobinBC, builtin, exact_solution, grid_values

KINDS = (SHISHKIN, BAKHVALOV_SHISHKIN)


def _mesh(kind, n=64, eps=1e-6, mu=1e-3, lam=0.707):
    return build(kind, MeshParams(n=n, sigma=2.0, lam=lam, eps=eps, mu=mu))


def test_spline_coeffs():
    h = 0.3
    assert spline_derivative_coeffs(h, "left") == (-h / 3.0, -h / 6.0, 1.0 / h)
    assert spline_derivative_coeffs(h, "right") == (h / 6.0, h / 3.0, 1.0 / h)
    with pytest.raises(AssemblyError):
        spline_derivative_coeffs(0.0, "left")
    with pytest.raises(AssemblyError):
        spline_derivative_coeffs(h, "center")


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("eps,mu", [(1e-6, 1e-3), (1e-10, 1e-5)])
def test_scheme_exact_on_quadratics(kind, eps, mu):
    """Interior stencil and spline boundary rows annihilate quadratics,
    so the exact nodal values must satisfy the assembled system to
    roundoff relative to the row magnitudes."""
    spec = builtin("poly_mms", eps, mu)
    mesh = _mesh(kind, eps=eps, mu=mu)
    sys = assemble(spec, mesh)
    y1, y2 = (grid_values(f, mesh.nodes) for f in exact_solution("poly_mms"))
    r = sys.residual(np.column_stack([y1, y2]))
    assert np.abs(r).max() <= 1e-13 * sys.max_row_sum()


def test_assembled_block_structure():
    sys = assemble(builtin("example1", 1e-6, 1e-3), _mesh(SHISHKIN))
    assert not sys.blocks_lower[0].any()
    assert not sys.blocks_upper[-1].any()
    # interior rows couple the components through the diagonal block
    # only; the boundary rows also couple through their neighbour,
    # because the spline second derivatives carry the full system
    assert not sys.blocks_lower[1:-1, 0, 1].any()
    assert not sys.blocks_upper[1:-1, 0, 1].any()
    assert not sys.blocks_lower[1:-1, 1, 0].any()
    assert not sys.blocks_upper[1:-1, 1, 0].any()
    assert sys.blocks_upper[0, 0, 1] != 0.0
    assert sys.blocks_lower[-1, 0, 1] != 0.0


def test_out_of_range_coupling_rejected():
    sys = assemble(builtin("example1", 1e-6, 1e-3), _mesh(SHISHKIN, n=16))
    lower = sys.blocks_lower.copy()
    lower[0, 0, 0] = 1.0
    with pytest.raises(AssemblyError, match="out-of-range"):
        DiscreteSystem(
            blocks_lower=lower,
            blocks_diag=sys.blocks_diag,
            blocks_upper=sys.blocks_upper,
            rhs=sys.rhs,
            mesh_ref=sys.mesh_ref,
        )


def test_block_shape_mismatch_rejected():
    sys = assemble(builtin("example1", 1e-6, 1e-3), _mesh(SHISHKIN, n=16))
    with pytest.raises(AssemblyError, match="inconsistent"):
        DiscreteSystem(
            blocks_lower=sys.blocks_lower[:-1],
            blocks_diag=sys.blocks_diag,
            blocks_upper=sys.blocks_upper,
            rhs=sys.rhs,
            mesh_ref=sys.mesh_ref,
        )


def test_to_dense_matches_matvec():
    sys = assemble(builtin("example2", 1e-5, 1e-2), _mesh(BAKHVALOV_SHISHKIN, n=32))
    rng = np.random.default_rng(7)
    y = rng.standard_normal((sys.n_nodes, 2))
    a, b = sys.to_dense()
    gap = np.abs(a @ y.reshape(-1) - sys.matvec(y).reshape(-1)).max()
    assert gap <= 1e-13 * sys.max_row_sum()
    assert np.array_equal(b, sys.rhs.reshape(-1))


@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("n", [64, 256])
def test_truncation_identities(kind, n):
    spec = builtin("example1", 1e-6, 1e-3)
    mesh = _mesh(kind, n=n)
    rep = truncation_identities(spec, mesh)
    assert rep.h1 == step_sizes(mesh)[0]
    assert rep.max_relative() <= 1e-12
    # leading error coefficient of the boundary row: eps^2 beta h1^2 / 8
    assert rep.t4_normalized == pytest.approx(0.125, abs=1e-10)


def test_truncation_degenerate_boundary():
    # beta = 0 removes the derivative term; there is nothing to normalize
    spec = builtin("example1", 1e-6, 1e-3)
    bc1 = RobinBC(alpha=1.0, beta=0.0, gamma=1.0, delta=1.0, P=1.0, Q=1.0)
    import dataclasses

    spec = dataclasses.replace(spec, bc1=bc1)
    rep = truncation_identities(spec, _mesh(SHISHKIN))
    assert rep.t4_normalized is None
    assert rep.t4 == 0.0


def test_m_matrix_audit_flags():
    spec = builtin("example1", 1e-6, 1e-3)
    # N = 64 sits above the sufficient threshold and the sign pattern
    # does break; N = 256 is below it and the signs hold
    rep = m_matrix_audit(assemble(spec, _mesh(SHISHKIN, n=64)), 4.0, 0.707, 2.0)
    assert not rep.signs_ok and rep.dominance_ok
    assert rep.first_violation == (64, "A1-")
    assert rep.threshold_satisfied is False
    assert rep.threshold_value == pytest.approx(4.325383391047909, rel=1e-12)

    rep = m_matrix_audit(assemble(spec, _mesh(SHISHKIN, n=256)), 4.0, 0.707, 2.0)
    assert rep.signs_ok and rep.dominance_ok and rep.first_violation is None
    assert rep.threshold_satisfied is True
    assert rep.threshold_value == pytest.approx(0.48059815456087884, rel=1e-12)


def test_m_matrix_audit_graded():
    spec = builtin("example1", 1e-6, 1e-3)
    rep = m_matrix_audit(assemble(spec, _mesh(BAKHVALOV_SHISHKIN, n=64)), 4.0, 0.707, 2.0)
    assert rep.signs_ok and rep.dominance_ok
    assert rep.threshold_satisfied is True
    assert rep.threshold_value == pytest.approx(0.2759256690284782, rel=1e-12)


def test_m_matrix_audit_uniform_has_no_threshold():
    spec = builtin("example1", 1e-2, 1e-1)
    rep = m_matrix_audit(assemble(spec, uniform(64)), 4.0, 0.707, 2.0)
    assert rep.threshold_satisfied is None
    assert rep.threshold_value is None


def test_write_system_csv(tmp_path):
    sys = assemble(builtin("example1", 1e-6, 1e-3), _mesh(SHISHKIN, n=16))
    path = tmp_path / "system.csv"
    write_system_csv(sys, path)
    rows = list(csv.reader(path.open()))
    assert rows[0][0] == "i" and len(rows) == sys.n_nodes + 1
    assert float(rows[1][1]) == 0.0  # A1m at the first row
