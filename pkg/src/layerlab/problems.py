"""Coupled reaction-diffusion problems with Robin boundary data.

The model is a weakly coupled pair of singularly perturbed equations on
the unit interval,

    -eps^2 y1''(x) + b11(x) y1(x) + b12(x) y2(x) = f1(x),
    -mu^2  y2''(x) + b21(x) y1(x) + b22(x) y2(x) = f2(x),

with 0 < eps <= mu <= 1.  Each endpoint carries a Robin condition whose
derivative term is scaled by the matching diffusion parameter, so the
boundary data stay O(1) as the parameters shrink:

    alpha1 y1(0) - eps beta1 y1'(0) = P1,
    gamma1 y1(1) + eps delta1 y1'(1) = Q1,

and the same shape with (mu, alpha2, ...) for y2.  Solutions develop
boundary layers at both endpoints, an inner one of width O(eps) and an
outer one of width O(mu).

The coupling must be cooperative, b12 <= 0 and b21 <= 0, and the rows
of B must dominate: there is a lambda > 0 with

    lambda^2 < min( b11(x) + b12(x), b21(x) + b22(x) )    on [0, 1].

``validate`` estimates the largest such lambda and the magnitude bound
lambda_star = max |bij| by dense sampling; the mesh generators take
lambda as their grading parameter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

Coefficient = Callable[[float], float]

BUILTIN_NAMES = ("example1", "example2", "constant_mms", "poly_mms")


class CoefficientEvaluationError(ValueError):
    """A coefficient function produced a non-finite value."""


@dataclass(frozen=True)
class RobinBC:
    """Robin data for one component.

    alpha * y(0) - par * beta * y'(0) = P
    gamma * y(1) + par * delta * y'(1) = Q

    where par is that component's diffusion parameter (eps or mu).
    Requires alpha, beta >= 0 with alpha + beta > 0, gamma > 0 and
    delta >= 0.
    """

    alpha: float
    beta: float
    gamma: float
    delta: float
    P: float
    Q: float

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ValueError(
                f"alpha and beta must be nonnegative, got alpha={self.alpha}, beta={self.beta}"
            )
        if self.alpha + self.beta <= 0:
            raise ValueError("alpha + beta must be positive")
        if self.gamma <= 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if self.delta < 0:
            raise ValueError(f"delta must be nonnegative, got {self.delta}")


@dataclass(frozen=True)
class ProblemSpec:
    """One problem instance: parameters, coefficients, forcing, boundary data.

    Coefficients are callables of x on [0, 1]; they may be scalar-only or
    numpy-vectorized (``grid_values`` copes with either).  ``name`` is
    provenance only and never affects the numerics.
    """

    eps: float
    mu: float
    b11: Coefficient
    b12: Coefficient
    b21: Coefficient
    b22: Coefficient
    f1: Coefficient
    f2: Coefficient
    bc1: RobinBC
    bc2: RobinBC
    name: str = "custom"

    def __post_init__(self):
        if not (0.0 < self.eps <= self.mu <= 1.0):
            raise ValueError(
                f"parameters must satisfy 0 < eps <= mu <= 1, got eps={self.eps}, mu={self.mu}"
            )


@dataclass(frozen=True)
class ValidationReport:
    """Result of sampling the coefficient assumptions on a dense grid.

    lambda_max = sqrt(min row sum of B) when that minimum is positive,
    else 0.0 with ``valid`` False.  lambda_star = max |bij| over the
    samples.  ``valid`` means both the sign pattern and the row-sum
    positivity held on every sample.
    """

    offdiag_ok: bool
    lambda_max: float
    lambda_star: float
    sample_count: int
    valid: bool


def grid_values(f: Coefficient, x: np.ndarray) -> np.ndarray:
    """Evaluate a coefficient on a grid, accepting scalar-only callables.

    Raises CoefficientEvaluationError naming the offending x if any
    value comes back non-finite.
    """
    x = np.asarray(x, dtype=float)
    try:
        vals = np.asarray(f(x), dtype=float)
    except (TypeError, ValueError):
        vals = np.array([float(f(float(xi))) for xi in x], dtype=float)
    else:
        if vals.ndim == 0:
            vals = np.full(x.shape, float(vals))
        elif vals.shape != x.shape:
            # not actually vectorized; fall back to pointwise calls
            vals = np.array([float(f(float(xi))) for xi in x], dtype=float)
    bad = ~np.isfinite(vals)
    if bad.any():
        i = int(np.argmax(bad))
        raise CoefficientEvaluationError(
            f"coefficient returned non-finite value {vals[i]!r} at x={x[i]!r}"
        )
    return vals


def validate(problem: ProblemSpec, samples: int = 1001) -> ValidationReport:
    """Check the coupling assumptions by dense sampling on [0, 1].

    Sampling cannot certify the assumptions between grid points; it is a
    screen, and 1001 uniform samples resolve the built-in coefficient
    families easily.
    """
    if samples < 2:
        raise ValueError("need at least 2 samples")
    x = np.linspace(0.0, 1.0, samples)
    b11 = grid_values(problem.b11, x)
    b12 = grid_values(problem.b12, x)
    b21 = grid_values(problem.b21, x)
    b22 = grid_values(problem.b22, x)
    offdiag_ok = bool((b12 <= 0.0).all() and (b21 <= 0.0).all())
    row_min = float(min((b11 + b12).min(), (b21 + b22).min()))
    lambda_max = math.sqrt(row_min) if row_min > 0.0 else 0.0
    lambda_star = float(
        max(np.abs(b11).max(), np.abs(b12).max(), np.abs(b21).max(), np.abs(b22).max())
    )
    return ValidationReport(
        offdiag_ok=offdiag_ok,
        lambda_max=lambda_max,
        lambda_star=lambda_star,
        sample_count=samples,
        valid=offdiag_ok and lambda_max > 0.0,
    )


# ---------------------------------------------------------------------------
# built-in problems

def _example1(eps: float, mu: float) -> ProblemSpec:
    bc = RobinBC(alpha=1.0, beta=1.0, gamma=1.0, delta=1.0, P=1.0, Q=1.0)
    return ProblemSpec(
        eps=eps,
        mu=mu,
        b11=lambda x: (x + 1.0) ** 2,
        b12=lambda x: -(x + 0.5),
        b21=lambda x: -1.0 + 0.0 * x,
        b22=lambda x: 2.0 + 0.0 * x,
        f1=lambda x: x**5 - 0.08,
        f2=lambda x: np.sin(np.pi * x),
        bc1=bc,
        bc2=bc,
        name="example1",
    )


def _example2(eps: float, mu: float) -> ProblemSpec:
    return ProblemSpec(
        eps=eps,
        mu=mu,
        b11=lambda x: 2.0 * (x + 1.0) ** 2,
        b12=lambda x: -(1.0 + x**3),
        b21=lambda x: -2.0 * np.cos(np.pi * x / 4.0),
        b22=lambda x: 2.2 * np.exp(1.0 - x),
        f1=lambda x: 2.0 * np.exp(x),
        f2=lambda x: 10.0 * x + 1.0,
        bc1=RobinBC(alpha=1.0, beta=1.0, gamma=2.0, delta=1.0, P=0.0, Q=1.0),
        bc2=RobinBC(alpha=1.0, beta=3.0, gamma=1.0, delta=1.0, P=0.0, Q=1.0),
        name="example2",
    )


def _constant_mms(eps: float, mu: float) -> ProblemSpec:
    # exact solution y1 = y2 = 1: f = row sums of example1's B, and the
    # Robin data reduce to P = alpha, Q = gamma since y' = 0
    bc = RobinBC(alpha=1.0, beta=1.0, gamma=1.0, delta=1.0, P=1.0, Q=1.0)
    return ProblemSpec(
        eps=eps,
        mu=mu,
        b11=lambda x: (x + 1.0) ** 2,
        b12=lambda x: -(x + 0.5),
        b21=lambda x: -1.0 + 0.0 * x,
        b22=lambda x: 2.0 + 0.0 * x,
        f1=lambda x: (x + 1.0) ** 2 - (x + 0.5),
        f2=lambda x: 1.0 + 0.0 * x,
        bc1=bc,
        bc2=bc,
        name="constant_mms",
    )


# poly_mms manufactured solution (quadratics; the interior stencil and the
# spline boundary rows are both exact on quadratics, on any mesh)
def _poly_y1(x):
    return 1.0 + 2.0 * x - x**2


def _poly_y2(x):
    return 2.0 - x + x**2


def _poly_mms(eps: float, mu: float) -> ProblemSpec:
    # y1'' = -2, y2'' = 2; forcing and Robin data follow from the equations
    def f1(x):
        return 2.0 * eps**2 + (x + 1.0) ** 2 * _poly_y1(x) - (x + 0.5) * _poly_y2(x)

    def f2(x):
        return -2.0 * mu**2 - _poly_y1(x) + 2.0 * _poly_y2(x)

    # y1(0)=1, y1'(0)=2, y1(1)=2, y1'(1)=0; y2(0)=2, y2'(0)=-1, y2(1)=2, y2'(1)=1
    bc1 = RobinBC(alpha=1.0, beta=1.0, gamma=1.0, delta=1.0, P=1.0 - 2.0 * eps, Q=2.0)
    bc2 = RobinBC(alpha=1.0, beta=1.0, gamma=1.0, delta=1.0, P=2.0 + mu, Q=2.0 + mu)
    return ProblemSpec(
        eps=eps,
        mu=mu,
        b11=lambda x: (x + 1.0) ** 2,
        b12=lambda x: -(x + 0.5),
        b21=lambda x: -1.0 + 0.0 * x,
        b22=lambda x: 2.0 + 0.0 * x,
        f1=f1,
        f2=f2,
        bc1=bc1,
        bc2=bc2,
        name="poly_mms",
    )


_FACTORIES = {
    "example1": _example1,
    "example2": _example2,
    "constant_mms": _constant_mms,
    "poly_mms": _poly_mms,
}

_EXACT = {
    "constant_mms": (lambda x: 1.0 + 0.0 * x, lambda x: 1.0 + 0.0 * x),
    "poly_mms": (_poly_y1, _poly_y2),
}


def builtin(name: str, eps: float, mu: float) -> ProblemSpec:
    """Construct a built-in problem at the given parameters.

    example1, example2 are layer benchmark problems without closed-form
    solutions; constant_mms and poly_mms are manufactured problems whose
    exact solutions the scheme reproduces to roundoff.
    """
    try:
        factory = _FACTORIES[name]
    except KeyError:
        raise ValueError(
            f"unknown problem {name!r}; valid names: {', '.join(BUILTIN_NAMES)}"
        ) from None
    return factory(eps, mu)


def exact_solution(name: str) -> tuple[Coefficient, Coefficient] | None:
    """Exact (y1, y2) for the manufactured built-ins, None for the rest."""
    if name not in _FACTORIES:
        raise ValueError(
            f"unknown problem {name!r}; valid names: {', '.join(BUILTIN_NAMES)}"
        )
    return _EXACT.get(name)
