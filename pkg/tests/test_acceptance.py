"""End-to-end acceptance checks.

Every test prints one [PASS]/[FAIL] summary line directly to the
terminal (bypassing capture) and then asserts, so a plain pytest run
shows the whole scorecard.  The convergence sweeps are shared through a
module fixture because they dominate the runtime.
"""

import math
import time
from functools import partial

import numpy as np
import pytest

from layerlab.discretize import assemble, m_matrix_audit, truncation_identities
from layerlab.errorlab import uniform_sweep
from layerlab.linsolve import solve, solve_dense_reference, solve_problem
from layerlab.meshes import (
    BAKHVALOV_SHISHKIN,
    SHISHKIN,
    MeshParams,
    build,
    default_lambda,
    graded_junction_mismatch,
    step_sizes,
)
from layerlab.problems import ProblemSpec, RobinBC, builtin, validate

KINDS = (SHISHKIN, BAKHVALOV_SHISHKIN)

# exact coupling bounds of the two benchmark problems: sqrt(1/2) and
# sqrt(2.2 - sqrt(2))
LAMS = {"example1": 0.7071067811865476, "example2": 0.886445958661274}
N_SWEEP = (64, 128, 256, 512, 1024, 2048, 4096)

# reference tables the comparison printout is measured against
REFERENCE_TABLES = {
    ("example1", SHISHKIN): {
        "E": (7.498e-2, 3.456e-2, 1.341e-2, 4.660e-3, 1.520e-3, 4.766e-4, 1.454e-4),
        "D": (5.405e-2, 2.609e-2, 1.034e-2, 3.625e-3, 1.186e-3, 3.722e-4, 1.136e-4),
        "p": (1.051, 1.335, 1.513, 1.612, 1.672, 1.713),
    },
    ("example1", BAKHVALOV_SHISHKIN): {
        "E": (3.395e-2, 1.070e-2, 3.053e-3, 8.271e-4, 2.170e-4, 5.551e-5, 1.384e-5),
        "D": (2.568e-2, 8.280e-3, 2.379e-3, 6.457e-4, 1.695e-4, 4.337e-5, 1.082e-5),
        "p": (1.633, 1.799, 1.881, 1.930, 1.967, 2.004),
    },
    ("example2", SHISHKIN): {
        "E": (2.389e-1, 1.046e-1, 3.961e-2, 1.373e-2, 4.509e-3, 1.429e-3, 4.412e-4),
        "D": (1.770e-1, 7.997e-2, 3.071e-2, 1.070e-2, 3.520e-3, 1.116e-3, 3.447e-4),
        "p": (1.146, 1.381, 1.521, 1.604, 1.657, 1.696),
    },
    ("example2", BAKHVALOV_SHISHKIN): {
        "E": (2.197e-1, 7.011e-2, 1.998e-2, 5.381e-3, 1.401e-3, 3.558e-4, 8.803e-5),
        "D": (1.649e-1, 5.412e-2, 1.556e-2, 4.200e-3, 1.095e-3, 2.779e-4, 6.877e-5),
        "p": (1.607, 1.798, 1.889, 1.940, 1.978, 2.015),
    },
}


def _report(capfd, num, ok, detail):
    with capfd.disabled():
        print(f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {detail}", flush=True)
    assert ok, f"criterion {num}: {detail}"


@pytest.fixture(scope="module")
def sweeps():
    """Full uniform-error sweeps for both problems on both meshes."""
    out = {}
    for prob, lam in LAMS.items():
        for kind in KINDS:
            t0 = time.perf_counter()
            rep = uniform_sweep(
                partial(builtin, prob),
                N_SWEEP,
                mesh_kind=kind,
                sigma=2.0,
                lam=lam,
                jobs=1,
            )
            out[(prob, kind)] = (rep, time.perf_counter() - t0)
    return out


def test_criterion_1_constant_solution(capfd):
    t0 = time.perf_counter()
    worst = 0.0
    count = 0
    for kind in KINDS:
        for n in (8, 64, 512):
            for par in (1.0, 1e-3, 1e-8):
                spec = builtin("constant_mms", par, par)
                mesh = build(kind, MeshParams(n=n, sigma=2.0, lam=0.707, eps=par, mu=par))
                g = solve_problem(spec, mesh)
                worst = max(
                    worst,
                    float(np.abs(g.y1 - 1.0).max()),
                    float(np.abs(g.y2 - 1.0).max()),
                )
                count += 1
    dt = time.perf_counter() - t0
    ok = worst <= 1e-9 and dt < 1.0
    _report(
        capfd, 1,
        ok,
        f"constant solution, {count} solves: max|Y-1|={worst:.3e} (tol 1e-09), "
        f"runtime {dt:.2f}s (< 1s)",
    )


def test_criterion_2_boundary_row_consistency(capfd):
    worst_rel = 0.0
    worst_t4 = 0.0
    for eps, mu in ((1e-6, 1e-3), (1e-8, 1e-4)):
        spec = builtin("example1", eps, mu)
        for kind in KINDS:
            for n in (64, 256):
                mesh = build(kind, MeshParams(n=n, sigma=2.0, lam=0.707, eps=eps, mu=mu))
                rep = truncation_identities(spec, mesh)
                worst_rel = max(worst_rel, rep.max_relative())
                worst_t4 = max(worst_t4, abs(rep.t4_normalized - 0.125))
    ok = worst_rel <= 1e-12 and worst_t4 <= 1e-10
    _report(
        capfd, 2,
        ok,
        f"boundary row identities: max|T_k| rel={worst_rel:.3e} (tol 1e-12), "
        f"|T4/(eps^2 b1 h1^2) - 1/8|={worst_t4:.3e} (tol 1e-10)",
    )


def test_criterion_3_two_solver_routes_agree(capfd):
    pairs = ((1.0, 1.0), (1e-2, 1e-1), (1e-3, 1e-3), (1e-4, 1e-2), (1e-5, 1e-3), (1e-6, 1e-4))
    worst = 0.0
    count = 0
    for name in ("example1", "example2"):
        for kind in KINDS:
            for eps, mu in pairs:
                sys = assemble(
                    builtin(name, eps, mu),
                    build(kind, MeshParams(n=1024, sigma=2.0, lam=0.707, eps=eps, mu=mu)),
                )
                a = solve(sys)
                b = solve_dense_reference(sys)
                worst = max(
                    worst,
                    float(np.abs(a.y1 - b.y1).max()),
                    float(np.abs(a.y2 - b.y2).max()),
                )
                count += 1
    ok = worst <= 1e-10
    _report(
        capfd, 3,
        ok,
        f"block elimination vs dense pivoted reference, {count} systems at N=1024: "
        f"max gap={worst:.3e} (tol 1e-10)",
    )


def _random_nonneg_spec(rng):
    c0, d0 = rng.uniform(0.5, 3.0, 2)
    c1, c2, d1, d2 = rng.uniform(0.0, 1.0, 4)
    u1 = float(rng.uniform(0.0, 0.9 * c0))  # keeps both row sums positive
    u2 = float(rng.uniform(0.0, 0.9 * d0))
    a1, a2 = rng.uniform(0.0, 2.0, 2)
    mu = float(10.0 ** rng.uniform(-4.0, 0.0))
    eps = mu * float(10.0 ** rng.uniform(-4.0, 0.0))

    def bc():
        return RobinBC(
            alpha=1.0,
            beta=float(rng.uniform(0.0, 2.0)),
            gamma=1.0 + float(rng.uniform(0.0, 1.0)),
            delta=float(rng.uniform(0.0, 2.0)),
            P=float(rng.uniform(0.0, 2.0)),
            Q=float(rng.uniform(0.0, 2.0)),
        )

    return ProblemSpec(
        eps=eps,
        mu=mu,
        b11=lambda x: c0 + c1 * x + c2 * x * x,
        b12=lambda x: -u1 + 0.0 * x,
        b21=lambda x: -u2 + 0.0 * x,
        b22=lambda x: d0 + d1 * x + d2 * x * x,
        f1=lambda x: a1 * (1.0 + np.sin(np.pi * x) ** 2),
        f2=lambda x: a2 * (1.0 + np.cos(np.pi * x) ** 2),
        bc1=bc(),
        bc2=bc(),
        name="random_nonneg",
    )


def test_criterion_4_nonnegativity_on_certified_systems(capfd):
    rng = np.random.default_rng(20260816)
    accepted = 0
    attempts = 0
    min_y = math.inf
    while accepted < 100 and attempts < 400:
        attempts += 1
        spec = _random_nonneg_spec(rng)
        rep = validate(spec)
        if not rep.valid:
            continue
        lam = default_lambda(rep.lambda_max)
        n = int(rng.choice((16, 32, 64)))
        kind = KINDS[int(rng.integers(2))]
        sys = assemble(
            spec, build(kind, MeshParams(n=n, sigma=2.0, lam=lam, eps=spec.eps, mu=spec.mu))
        )
        audit = m_matrix_audit(sys, rep.lambda_star, lam, 2.0)
        if not (audit.signs_ok and audit.dominance_ok):
            continue  # certification is the hypothesis, not the claim
        g = solve(sys)
        min_y = min(min_y, float(g.y1.min()), float(g.y2.min()))
        accepted += 1
    ok = accepted == 100 and min_y >= -1e-10
    _report(
        capfd, 4,
        ok,
        f"nonnegative data on {accepted} sign-certified random systems "
        f"({attempts} sampled): min Y={min_y:.3e} (tol -1e-10)",
    )


def _finite_rates(report):
    return [float(v) for v in report.p_values if math.isfinite(v)]


def test_criterion_5_uniform_convergence_orders(sweeps, capfd):
    r1bs, t1bs = sweeps[("example1", BAKHVALOV_SHISHKIN)]
    r1s, t1s = sweeps[("example1", SHISHKIN)]
    r2bs, t2bs = sweeps[("example2", BAKHVALOV_SHISHKIN)]
    r2s, t2s = sweeps[("example2", SHISHKIN)]

    complete = all(
        np.isfinite(rep.e_uniform).all() and np.isfinite(rep.d_values).all()
        for rep, _ in sweeps.values()
    )
    p1bs = _finite_rates(r1bs)
    p1s = _finite_rates(r1s)
    nondecr = all(b >= a for a, b in zip(p1bs, p1bs[1:]))
    ok = (
        complete
        and nondecr
        and 1.9 <= p1bs[-1] <= 2.1
        and r1bs.p_star >= 1.5
        and 1.6 <= p1s[-1] <= 1.8
        and r1s.p_star >= 1.0
        and r2bs.p_star >= 1.5
        and r2s.p_star >= 1.05
        and max(t1bs, t1s, t2bs, t2s) < 300.0
    )
    _report(
        capfd, 5,
        ok,
        "orders over 12 eps decades: "
        f"ex1 graded p*={r1bs.p_star:.3f} final={p1bs[-1]:.3f} nondecreasing={nondecr}, "
        f"ex1 piecewise p*={r1s.p_star:.3f} final={p1s[-1]:.3f}, "
        f"ex2 graded p*={r2bs.p_star:.3f}, ex2 piecewise p*={r2s.p_star:.3f}; "
        f"sweep times {t1s:.0f}/{t1bs:.0f}/{t2s:.0f}/{t2bs:.0f}s (< 300s each)",
    )


def _leading_digit(v):
    if not math.isfinite(v) or v <= 0.0:
        return None
    e = math.floor(math.log10(v))
    return int(v / 10.0**e), e


def test_criterion_6_reference_table_comparison(sweeps, capfd):
    """Side-by-side with the reference tables; agreement is reported,
    the strict acceptance is the order criterion above."""
    matched = 0
    compared = 0
    lines = []
    for (prob, kind), (rep, _) in sweeps.items():
        ref = REFERENCE_TABLES[(prob, kind)]
        ours = {
            "E": list(rep.e_uniform),
            "D": list(rep.d_values),
            "p": _finite_rates(rep),
        }
        lines.append(f"criterion 6 comparison, {prob} {kind} (N >= 256):")
        for key in ("E", "D", "p"):
            start = 2  # first column with N >= 256
            pairs = list(zip(ours[key][start:], ref[key][start:]))
            hits = sum(
                _leading_digit(a) == _leading_digit(b) for a, b in pairs
            )
            matched += hits
            compared += len(pairs)
            fmt = "{:.3f}".format if key == "p" else "{:.3e}".format
            lines.append(f"  {key}^N ours: " + "  ".join(fmt(a) for a, _ in pairs))
            lines.append(f"  {key}^N ref:  " + "  ".join(fmt(b) for _, b in pairs))
            lines.append(f"  leading digit matches: {hits}/{len(pairs)}")
    complete = all(
        np.isfinite(rep.e_uniform).all() and np.isfinite(rep.d_values).all()
        for rep, _ in sweeps.values()
    )
    with capfd.disabled():
        for line in lines:
            print(line, flush=True)
    _report(
        capfd, 6,
        complete,
        f"reference table comparison produced for all 4 tables: "
        f"{matched}/{compared} leading-digit matches (reported, not asserted)",
    )


def test_criterion_7_graded_step_bound(capfd):
    # the O(1/N) step law is stated under the hypothesis mu <= 1/N;
    # above it the mu-graded piece legitimately carries steps of order mu
    worst = 0.0
    checked = 0
    lam = 0.707
    for eps, mu in ((1e-8, 1e-4), (1e-6, 1e-3)):
        for n in N_SWEEP:
            if mu > 1.0 / n:
                continue
            p = MeshParams(n=n, sigma=2.0, lam=lam, eps=eps, mu=mu)
            h = step_sizes(build(BAKHVALOV_SHISHKIN, p))
            bound = max(2.0 / n, 4.0 / (lam * n))
            worst = max(worst, float(h.max()) / bound)
            checked += 1
    ok = worst <= 1.0 + 1e-12 and checked == 11
    _report(
        capfd, 7,
        ok,
        f"graded steps vs max(2/N, 4/(lam N)) on the {checked} cells with "
        f"mu <= 1/N: worst ratio={worst:.6f} (<= 1)",
    )


def test_criterion_8_graded_branch_continuity(capfd):
    out = graded_junction_mismatch(
        MeshParams(n=64, sigma=2.0, lam=0.7, eps=1e-5, mu=1e-3)
    )
    worst = max(out.values())
    ok = set(out) == {8, 16, 48, 56} and worst <= 1e-12
    _report(
        capfd, 8,
        ok,
        f"graded branch formulas agree at junctions {sorted(out)}: "
        f"max relative mismatch={worst:.3e} (tol 1e-12)",
    )
