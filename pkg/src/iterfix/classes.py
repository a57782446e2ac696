"""Membership tests for the function classes F_I, A_I, G_J, B_J.

Membership over a continuum cannot be decided exactly; every check samples
the candidate densely (all nodes plus ``per_cell`` interior points per cell)
and reports the sampling it used, so a verdict can be reproduced.

Measured quantities are compared with the class bounds as they are, apart
from a relative slack of ``FP_RTOL`` that absorbs last-digit rounding.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .expr import PiecewiseExpr
from .gridfn import DEFAULT_GRID, ClassParams, GridFunction

PER_CELL = 8
NEAR_CELLS = 10
TAIL_DECADES = 3
TAIL_POINTS = 1000
FP_RTOL = 1e-12


class Regime(enum.Enum):
    EMPTY = "Empty"
    IDENTITY_ONLY = "IdentityOnly"
    NONTRIVIAL = "Nontrivial"


def classify_regime(p: ClassParams) -> Regime:
    """Which (delta, M) pairs leave room for non-identity class members."""
    if p.M < 1 or p.delta > 1:
        return Regime.EMPTY
    if p.M == 1 or p.delta == 1:
        return Regime.IDENTITY_ONLY
    return Regime.NONTRIVIAL


@dataclass(frozen=True)
class Violation:
    condition: str
    points: tuple[float, ...]
    value: float
    bound: float

    def as_dict(self) -> dict:
        return {"condition": self.condition, "points": list(self.points), "value": self.value, "bound": self.bound}


@dataclass
class ClassVerdict:
    cls: str
    violations: list[Violation] = field(default_factory=list)
    sampling: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    @property
    def member(self) -> bool:
        return not self.violations

    def conditions_violated(self) -> set[str]:
        return {v.condition for v in self.violations}

    def as_dict(self) -> dict:
        return {
            "class": self.cls,
            "member": self.member,
            "violations": [v.as_dict() for v in self.violations],
            "sampling": dict(self.sampling),
            "notes": list(self.notes),
        }


def _slack(bound: float) -> float:
    return FP_RTOL * max(1.0, abs(bound))


def _band(verdict: ClassVerdict, cond: str, x: np.ndarray, q: np.ndarray, lo: float | None, hi: float | None):
    if lo is not None:
        i = int(np.argmin(q))
        if q[i] < lo - _slack(lo):
            verdict.violations.append(Violation(cond, (float(x[i]),), float(q[i]), lo))
    if hi is not None:
        i = int(np.argmax(q))
        if q[i] > hi + _slack(hi):
            verdict.violations.append(Violation(cond, (float(x[i]),), float(q[i]), hi))


def max_difference_quotient(t: np.ndarray, q: np.ndarray, node_step: int, window: int):
    """Largest |q_i - q_j| / |t_i - t_j| over all node pairs and near-diagonal pairs.

    ``node_step`` picks the nodes out of the sample; ``window`` is the largest
    index offset considered for near-diagonal pairs.
    """
    best, wit = 0.0, (float(t[0]), float(t[0]))
    for k in range(1, min(window, t.size - 1) + 1):
        dq = np.abs(q[k:] - q[:-k]) / (t[k:] - t[:-k])
        i = int(np.argmax(dq))
        if dq[i] > best:
            best, wit = float(dq[i]), (float(t[i]), float(t[i + k]))
    tn, qn = t[::node_step], q[::node_step]
    chunk = 512
    for start in range(0, tn.size, chunk):
        rows = slice(start, start + chunk)
        dt = np.abs(tn[rows, None] - tn[None, :])
        with np.errstate(divide="ignore", invalid="ignore"):
            dq = np.abs(qn[rows, None] - qn[None, :]) / dt
        dq[dt == 0] = 0.0
        flat = int(np.argmax(dq))
        r, c = divmod(flat, tn.size)
        if dq.flat[flat] > best:
            best, wit = float(dq.flat[flat]), (float(tn[start + r]), float(tn[c]))
    return best, wit


def _lipschitz(verdict: ClassVerdict, cond: str, t, q, bound: float, per_cell: int, to_points=None):
    step = per_cell + 1
    value, wit = max_difference_quotient(t, q, step, NEAR_CELLS * step)
    if value > bound + _slack(bound):
        pts = tuple(to_points(np.array(wit))) if to_points else wit
        verdict.violations.append(Violation(cond, tuple(float(v) for v in pts), value, bound))
    return value


def _endpoint_checks(verdict: ClassVerdict, ends, vals, lo: float, hi: float, x, v):
    for e, fe in zip(ends, vals):
        if abs(fe - e) > _slack(e) + 1e-12:
            verdict.violations.append(Violation("endpoints", (float(e),), float(fe), float(e)))
    tol = 1e-12 + _slack(max(abs(lo), abs(hi)))
    out = (v < lo - tol) | (v > hi + tol)
    if np.any(out):
        i = int(np.argmax(np.maximum(lo - v, v - hi)))
        verdict.violations.append(Violation("range", (float(x[i]),), float(v[i]), float(hi if v[i] > hi else lo)))


def _check_interval(f_interval, p_interval):
    if not np.allclose(f_interval, p_interval, rtol=0, atol=1e-12):
        raise ValueError(f"interval mismatch: function on {f_interval}, params on {p_interval}")


def _expr_sample(e: PiecewiseExpr, x: np.ndarray):
    """Values and both one-sided derivatives of e on a sorted sample."""
    v = e.eval(x)
    right = np.empty_like(x)
    left = np.empty_like(x)
    right[:-1] = e.eval_derivative(x[:-1], side="right")
    right[-1] = e.eval_derivative(x[-1], side="left")
    left[1:] = e.eval_derivative(x[1:], side="left")
    left[0] = e.eval_derivative(x[0], side="right")
    return v, left, right


def _linear_tails(a: float, b: float, e: PiecewiseExpr, span: float):
    dom = e.domain
    lo = np.linspace(a - span, a, TAIL_POINTS + 1)[:-1]
    hi = np.linspace(b, b + span, TAIL_POINTS + 1)[1:]
    x = np.concatenate([lo, hi])
    inside = dom.contains(x)
    return x[inside], bool(np.all(inside))


def _tail_derivs(e: PiecewiseExpr, x: np.ndarray) -> np.ndarray:
    """Both one-sided derivatives on the tail mesh, stacked."""
    return np.concatenate([e.eval_derivative(x, side="left"), e.eval_derivative(x, side="right")])


def _i_sample(f, p: ClassParams, per_cell: int, n: int):
    """Sample points, values, inner derivatives (left and right) of f on I."""
    if isinstance(f, GridFunction):
        _check_interval(f.interval, p.interval)
        x = f.refined_points(per_cell)
        v = f.evaluate(x)
        d = f.derivative(x)
        return x, v, d, d, len(f)
    a, b = p.interval
    x = GridFunction.identity(a, b, n).refined_points(per_cell)
    v, dl, dr = _expr_sample(f, x)
    return x, v, dl, dr, n


def _check_linear(cls: str, f, p: ClassParams, tails, per_cell: int, n: int, deriv_lo: float) -> ClassVerdict:
    verdict = ClassVerdict(cls)
    a, b = p.interval
    if tails is None and isinstance(f, PiecewiseExpr):
        tails = f
    x, v, dl, dr, nodes = _i_sample(f, p, per_cell, n)
    verdict.sampling = {"grid_nodes": nodes, "per_cell": per_cell, "near_diagonal_cells": NEAR_CELLS}
    band = "slope_band" if cls == "F" else "slope_nonneg"

    _endpoint_checks(verdict, (a, b), (v[0], v[-1]), a, b, x, v)
    _band(verdict, band, np.concatenate([x, x]), np.concatenate([dl, dr]), deriv_lo, p.M)
    _lipschitz(verdict, "slope_lipschitz", x, dr, p.Mstar, per_cell)
    if not np.array_equal(dl, dr):
        _lipschitz(verdict, "slope_lipschitz", x, dl, p.Mstar, per_cell)

    if tails is None:
        verdict.notes.append("unchecked outside I")
        return verdict
    span = TAIL_DECADES * math.log(10.0)
    tx, covered = _linear_tails(a, b, tails, span)
    verdict.sampling.update(tail_points=int(tx.size), tail_span=span)
    if not covered:
        verdict.notes.append("tail mesh clipped to the declared domain")
    if tx.size:
        tv = tails.eval(tx)
        _endpoint_checks(verdict, (), (), a, b, tx, tv)
        if cls == "F":
            _band(verdict, "slope_outside", np.concatenate([tx, tx]), np.abs(_tail_derivs(tails, tx)), None, p.M)
    return verdict


def check_F_class(f, p: ClassParams, tails: PiecewiseExpr | None = None, *,
                  per_cell: int = PER_CELL, n: int = DEFAULT_GRID) -> ClassVerdict:
    """Membership of f in F_I(delta, M, M*).

    ``f`` is a GridFunction on I or a PiecewiseExpr (then it is also its own
    tail definition). Without tails, the slope bound outside I cannot be checked and the
    verdict says so in its notes.
    """
    return _check_linear("F", f, p, tails, per_cell, n, p.delta)


def check_A_class(f, p: ClassParams, tails: PiecewiseExpr | None = None, *,
                  per_cell: int = PER_CELL, n: int = DEFAULT_GRID) -> ClassVerdict:
    """Membership of f in A_I(delta, M, M*): 0 <= f' <= M and f' is M*-Lipschitz."""
    return _check_linear("A", f, p, tails, per_cell, n, 0.0)


def _log_sample(c: float, d: float, per_cell: int, n: int) -> np.ndarray:
    t = GridFunction.identity(math.log(c), math.log(d), n).refined_points(per_cell)
    s = np.exp(t)
    s[0], s[-1] = c, d
    return s


def _elasticity(s, g, dg):
    return s * dg / g


def check_G_class(g_expr: PiecewiseExpr, J: tuple[float, float] | None, p: ClassParams, *,
                  per_cell: int = PER_CELL, n: int = DEFAULT_GRID) -> ClassVerdict:
    """Membership of g in G_J(delta, M, M*), using the elasticity x g'(x)/g(x)."""
    c, d = J if J is not None else p.interval
    _check_interval((c, d), p.interval)
    if c <= 0:
        raise ValueError("G_J needs J inside the positive half-line")
    verdict = ClassVerdict("G")
    s = _log_sample(c, d, per_cell, n)
    gv, gl, gr = _expr_sample(g_expr, s)
    if np.any(gv <= 0):
        raise ValueError("g must be positive for the logarithmic conjugation")
    ul, ur = _elasticity(s, gv, gl), _elasticity(s, gv, gr)
    t = np.log(s)

    _endpoint_checks(verdict, (c, d), (gv[0], gv[-1]), c, d, s, gv)
    _band(verdict, "elasticity_band", np.concatenate([s, s]), np.concatenate([ul, ur]), p.delta, p.M)
    _lipschitz(verdict, "elasticity_lipschitz", t, ur, p.Mstar, per_cell, np.exp)
    if not np.array_equal(ul, ur):
        _lipschitz(verdict, "elasticity_lipschitz", t, ul, p.Mstar, per_cell, np.exp)

    span = TAIL_DECADES * math.log(10.0)
    tt, covered = _linear_tails(math.log(c), math.log(d), _LogView(g_expr), span)
    if not covered:
        raise ValueError("g must be defined on the whole tail mesh of the positive half-line")
    ts = np.exp(tt)
    tv = g_expr.eval(ts)
    if np.any(tv <= 0):
        raise ValueError("g must be positive for the logarithmic conjugation")
    _endpoint_checks(verdict, (), (), c, d, ts, tv)
    du = _tail_derivs(g_expr, ts)
    u = np.abs(np.concatenate([ts, ts]) * du / np.concatenate([tv, tv]))
    _band(verdict, "elasticity_outside", np.concatenate([ts, ts]), u, None, p.M)
    verdict.sampling = {
        "grid_nodes": n, "per_cell": per_cell, "near_diagonal_cells": NEAR_CELLS,
        "tail_points": int(ts.size), "tail_decades": TAIL_DECADES,
    }
    return verdict


class _LogView:
    """Domain of an expression on the positive axis seen in log coordinates."""

    def __init__(self, e: PiecewiseExpr):
        self.e = e

    @property
    def domain(self):
        return _LogDomain(self.e.domain)


class _LogDomain:
    def __init__(self, dom):
        self.dom = dom

    def contains(self, t):
        return self.dom.contains(np.exp(t))


def check_B_class(g: GridFunction, J: tuple[float, float] | None, p: ClassParams, tails: PiecewiseExpr | None = None, *,
                  per_cell: int = PER_CELL) -> ClassVerdict:
    """Membership of a sampled g in B_J(delta, M, M*): 0 <= x g'/g <= M and x g'/g Lipschitz in log x."""
    c, d = J if J is not None else p.interval
    _check_interval(g.interval, (c, d))
    _check_interval((c, d), p.interval)
    if c <= 0:
        raise ValueError("B_J needs J inside the positive half-line")
    verdict = ClassVerdict("B")
    s = g.refined_points(per_cell)
    gv = g.evaluate(s)
    if np.any(gv <= 0):
        raise ValueError("g must be positive")
    u = _elasticity(s, gv, g.derivative(s))
    verdict.sampling = {"grid_nodes": len(g), "per_cell": per_cell, "near_diagonal_cells": NEAR_CELLS}
    _endpoint_checks(verdict, (c, d), (gv[0], gv[-1]), c, d, s, gv)
    _band(verdict, "elasticity_nonneg", s, u, 0.0, p.M)
    _lipschitz(verdict, "elasticity_lipschitz", np.log(s), u, p.Mstar, per_cell, np.exp)
    if tails is None:
        verdict.notes.append("unchecked outside J")
    else:
        ts = np.exp(_linear_tails(math.log(c), math.log(d), _LogView(tails), TAIL_DECADES * math.log(10.0))[0])
        if ts.size:
            _endpoint_checks(verdict, (), (), c, d, ts, tails.eval(ts))
    return verdict
