"""Fixed-point solver for lam_1 f + lam_2 f^2 + ... + lam_n f^n = F on I.

The solution operator is T f = L_f^{-1} o F with
L_f = lam_1 id + lam_2 f + ... + lam_n f^{n-1}.  Picard iteration from the
identity converges in the C^1 norm whenever the contraction constant K of
``constants.compute_constants`` lies in (0, 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .classes import ClassVerdict, check_F_class
from .conjugate import lift_f_to_g, reduce_G_to_F
from .constants import ConstantSet, compute_constants
from .expr import PiecewiseExpr
from .gridfn import (
    DEFAULT_GRID, RANGE_TOL, ClassParams, GridFunction, RangeError, c1_distance,
    invert_monotone, iterates, sample_expr,
)

RESIDUAL_REFINE = 3  # interior points per cell, i.e. a 4x refined grid


class SolveError(RuntimeError):
    reason = "solve_failed"


class HypothesisError(SolveError):
    """The constants violate lam_1 > K0 M^2 > 0 or 0 < K < 1."""

    def __init__(self, constants: ConstantSet, reason: str):
        super().__init__(f"contraction hypotheses fail: {reason}")
        self.constants = constants
        self.reason = reason


class ClassMembershipError(SolveError):
    reason = "F_not_in_class"

    def __init__(self, verdict: ClassVerdict):
        conds = ", ".join(sorted(verdict.conditions_violated()))
        super().__init__(f"F is not in the required class (violated: {conds})")
        self.verdict = verdict


class ConvergenceError(SolveError):
    reason = "no_convergence"


@dataclass(frozen=True)
class ProblemSpec:
    """A problem in additive form on I, optionally remembering the product form.

    ``params`` carries (delta, M, M*) as used for the solution class; the
    right-hand side F is checked against (delta, lam_1 M, M*).
    """

    lam: tuple[float, ...]
    F: PiecewiseExpr
    interval: tuple[float, float]
    params: ClassParams
    grid_size: int = DEFAULT_GRID
    tol: float = 1e-10
    max_iters: int = 200
    G: PiecewiseExpr | None = None
    J: tuple[float, float] | None = None

    def __post_init__(self):
        a, b = self.interval
        if not a < b:
            raise ValueError("need a < b")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        object.__setattr__(self, "lam", tuple(float(v) for v in self.lam))

    @classmethod
    def from_G(cls, lam, G: PiecewiseExpr, J, delta, M, Mstar, **kwargs) -> "ProblemSpec":
        c, d = J
        I = (math.log(c), math.log(d))
        return cls(lam=tuple(lam), F=reduce_G_to_F(G), interval=I,
                   params=ClassParams(delta, M, Mstar, I), G=G, J=(float(c), float(d)), **kwargs)

    def F_params(self) -> ClassParams:
        return self.params.replace(M=self.lam[0] * self.params.M, interval=self.interval)


@dataclass
class SolveReport:
    f: GridFunction
    constants: ConstantSet
    iterations: int
    distances: list[float]
    apriori_bound: float
    aposteriori_bound: float
    residual_star: float
    g: GridFunction | None = None
    residual_product: float | None = None
    verdict: ClassVerdict | None = None
    trivial_weights: bool = False
    notes: list[str] = field(default_factory=list)

    @property
    def lam(self) -> tuple[float, ...]:
        return self.constants.lam

    def ratios(self) -> list[float]:
        d = self.distances
        return [d[m + 1] / d[m] for m in range(len(d) - 1) if d[m] > 0]


def build_L(f: GridFunction, lam: Sequence[float]) -> GridFunction:
    """L_f = sum_k lam_k f^{k-1} on f's nodes, endpoints pinned when f fixes them."""
    lam = np.asarray(lam, dtype=float)
    its = iterates(f, lam.size - 1)
    values = np.einsum("k,kn->n", lam, np.stack([g.values for g in its]))
    derivs = np.einsum("k,kn->n", lam, np.stack([g.derivs for g in its]))
    a, b = f.a, f.b
    if abs(values[0] - a) <= RANGE_TOL * max(1.0, abs(a)):
        values[0] = a
    if abs(values[-1] - b) <= RANGE_TOL * max(1.0, abs(b)):
        values[-1] = b
    return GridFunction(f.nodes, values, derivs)


def sample_rhs(F: PiecewiseExpr, nodes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a, b = float(nodes[0]), float(nodes[-1])
    Fv, Fd = sample_expr(F, nodes)
    tol = RANGE_TOL * max(1.0, abs(a), abs(b))
    if np.any(Fv < a - tol) or np.any(Fv > b + tol):
        raise RangeError(f"F leaves I=[{a!r}, {b!r}] on the grid")
    return np.clip(Fv, a, b), Fd


def _apply_T_sampled(f: GridFunction, Fv, Fd, lam, tol: float) -> GridFunction:
    L = build_L(f, lam)
    x = invert_monotone(L, Fv, tol)
    if Fv[0] == f.a:
        x[0] = f.a
    if Fv[-1] == f.b:
        x[-1] = f.b
    return GridFunction(f.nodes, x, Fd / L.derivative(x))


def apply_T(f: GridFunction, F: PiecewiseExpr, lam: Sequence[float], tol: float = 1e-11) -> GridFunction:
    """T f = L_f^{-1} o F on f's nodes; derivative F' / L_f'(T f) by the chain rule."""
    Fv, Fd = sample_rhs(F, f.nodes)
    return _apply_T_sampled(f, Fv, Fd, lam, tol)


def residual_star(f: GridFunction, F: PiecewiseExpr, lam: Sequence[float], per_cell: int = RESIDUAL_REFINE) -> float:
    """sup |sum_k lam_k f^k(x) - F(x)| on a refined grid, iterating the interpolant."""
    x = f.refined_points(per_cell)
    y = x
    total = np.zeros_like(x)
    for w in lam:
        y = f.evaluate(np.clip(y, f.a, f.b))
        total = total + w * y
    return float(np.max(np.abs(total - F.eval(x))))


def fixed_point_defect(f: GridFunction, F: PiecewiseExpr, lam: Sequence[float], per_cell: int = RESIDUAL_REFINE) -> float:
    """sup |L_f(f(x)) - F(x)|, the same equation written through L_f."""
    L = build_L(f, lam)
    x = f.refined_points(per_cell)
    return float(np.max(np.abs(L.evaluate(np.clip(f.evaluate(x), f.a, f.b)) - F.eval(x))))


def product_of_iterates(g: GridFunction, lam: Sequence[float], x: np.ndarray) -> np.ndarray:
    integer_weights = all(float(w).is_integer() for w in lam)
    y = np.asarray(x, dtype=float)
    prod = np.ones_like(y)
    for w in lam:
        y = g.evaluate(np.clip(y, g.a, g.b))
        if not integer_weights and np.any(y <= 0):
            raise ValueError("non-positive iterate value with non-integer weight")
        prod = prod * np.power(y, w)
    return prod


def residual_product(g: GridFunction, G: PiecewiseExpr, lam: Sequence[float], J=None,
                     per_cell: int = RESIDUAL_REFINE) -> float:
    """sup |prod_k (g^k(x))^lam_k - G(x)| on a refined grid of J."""
    if J is not None and not np.allclose(g.interval, J, rtol=0, atol=1e-12 * max(1.0, abs(J[1]))):
        raise ValueError(f"g lives on {g.interval}, not on J={J}")
    x = g.refined_points(per_cell)
    return float(np.max(np.abs(product_of_iterates(g, lam, x) - G.eval(x))))


def solve(spec: ProblemSpec, *, verify_class: bool = True) -> SolveReport:
    """Picard iteration f_{m+1} = T f_m from the identity until ||f_{m+1} - f_m||_C1 <= tol."""
    p = spec.params
    constants = compute_constants(spec.lam, p.delta, p.M, p.Mstar)
    trivial = constants.trivial_weights
    if not trivial and not constants.hypotheses_hold:
        raise HypothesisError(constants, constants.failure_reason())

    verdict = None
    if verify_class:
        verdict = check_F_class(spec.F, spec.F_params())
        if not verdict.member:
            raise ClassMembershipError(verdict)

    a, b = spec.interval
    f = GridFunction.identity(a, b, spec.grid_size)
    Fv, Fd = sample_rhs(spec.F, f.nodes)
    inner_tol = spec.tol / 10

    distances: list[float] = []
    converged = False
    for _ in range(spec.max_iters):
        nxt = _apply_T_sampled(f, Fv, Fd, spec.lam, inner_tol)
        distances.append(c1_distance(nxt, f))
        f = nxt
        # with only the first weight T is constant, so one step is exact
        if distances[-1] <= spec.tol or trivial:
            converged = True
            break
    if not converged:
        raise ConvergenceError(
            f"no convergence in {spec.max_iters} iterations (last distance {distances[-1]:.3g})")

    K = constants.K
    m = len(distances)
    if trivial:
        apriori = aposteriori = 0.0
    else:
        apriori = K**m / (1 - K) * distances[0]
        aposteriori = K / (1 - K) * distances[-1]

    report = SolveReport(
        f=f, constants=constants, iterations=m, distances=distances,
        apriori_bound=apriori, aposteriori_bound=aposteriori,
        residual_star=residual_star(f, spec.F, spec.lam),
        verdict=verdict, trivial_weights=trivial,
    )
    if trivial:
        report.notes.append("only lambda_1 is non-zero: the solution is F itself")
    if spec.G is not None:
        report.g = lift_f_to_g(f)
        report.notes.append("g is unique among maps conjugate by exp to the solution class on I; "
                            "no converse class inclusion is claimed")
        report.residual_product = residual_product(report.g, spec.G, spec.lam, spec.J)
    return report


def evaluate_solution_on_R(report: SolveReport, F: PiecewiseExpr, x: float) -> tuple[float, float]:
    """(f(x), f'(x)) anywhere on the line; outside I, f(x) = L_f^{-1}(F(x))."""
    f = report.f
    if f.a <= x <= f.b:
        return f.evaluate(x), f.derivative(x)
    y = F.eval(x)
    tol = RANGE_TOL * max(1.0, abs(f.a), abs(f.b))
    if y < f.a - tol or y > f.b + tol:
        raise RangeError(f"F({x!r}) = {y!r} is outside I")
    y = min(max(y, f.a), f.b)
    L = build_L(f, report.lam)
    fx = invert_monotone(L, y, 1e-14)
    dF = F.eval_derivative(x, side="right")
    return fx, dF / L.derivative(fx)
