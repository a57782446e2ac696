"""Conjugations between the product equation and the additive one.

On the positive half-line, x -> e^x turns the product of iterates into the
weighted sum of iterates: f = log o g o exp, F = log o G o exp.  On the
negative half-line, x -> -x moves the problem to the positive half-line
provided every weight is an integer and the weights have an odd sum.

Symbolic inputs are transformed symbolically (pieces are re-mapped); solved
functions only exist as grids and are transported numerically.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .expr import (
    BinOp, Call, Interval, Neg, Node, Piece, PiecewiseExpr, Var, validate_pieces,
)
from .gridfn import GridFunction


class ConjugationError(ValueError):
    def __init__(self, message: str, reason: str):
        super().__init__(message)
        self.reason = reason


class Direction(enum.Enum):
    RPLUS_TO_R = "RplusToR"
    R_TO_RPLUS = "RToRplus"
    RMINUS_TO_RPLUS = "RminusToRplus"
    RPLUS_TO_RMINUS = "RplusToRminus"


def check_odd_integer_weights(lam: Sequence[float]) -> None:
    """Reflection through x -> -x needs integer weights with an odd sum."""
    if any(float(v) != math.floor(float(v)) for v in lam):
        raise ConjugationError(
            f"weights {tuple(lam)} are not all integers; the negative half-line needs "
            "integer weights with an odd sum", "negative_axis_noninteger_lambda")
    if int(sum(int(v) for v in lam)) % 2 == 0:
        raise ConjugationError(
            f"weights {tuple(lam)} have an even sum; the negative half-line needs an odd sum",
            "negative_axis_even_lambda_sum")


@dataclass(frozen=True)
class Reduction:
    direction: Direction
    lam: tuple[float, ...]

    def __post_init__(self):
        if self.direction in (Direction.RMINUS_TO_RPLUS, Direction.RPLUS_TO_RMINUS):
            check_odd_integer_weights(self.lam)


def substitute(node: Node, var: str, replacement: Node) -> Node:
    if isinstance(node, Var):
        return replacement if node.name == var else node
    if isinstance(node, Neg):
        return Neg(substitute(node.arg, var, replacement))
    if isinstance(node, Call):
        return Call(node.func, substitute(node.arg, var, replacement))
    if isinstance(node, BinOp):
        return BinOp(node.op, substitute(node.left, var, replacement), substitute(node.right, var, replacement))
    return node


def _positivity_mesh(iv: Interval, points: int = 2001) -> np.ndarray:
    lo = math.log(iv.lo) if iv.lo > 0 else -14.0
    hi = math.log(iv.hi) if math.isfinite(iv.hi) else 14.0
    hi = max(hi, lo)
    x = np.exp(np.linspace(lo, hi, points))
    return x[iv.contains(x)]


def reduce_G_to_F(G: PiecewiseExpr) -> PiecewiseExpr:
    """F = log o G o exp, with piece intervals mapped through log."""
    if G.domain.lo < 0:
        raise ConjugationError("G must be defined on the positive half-line", "domain_not_positive")
    for p in G.pieces:
        x = _positivity_mesh(p.interval)
        if x.size and np.any(G.eval(x) <= 0):
            bad = x[G.eval(x) <= 0][0]
            raise ConjugationError(f"G({bad!r}) <= 0; log-conjugation impossible", "G_not_positive")
    var = G.variable
    pieces = []
    for p in G.pieces:
        iv = p.interval
        lo = -math.inf if iv.lo == 0 else math.log(iv.lo)
        hi = math.log(iv.hi)
        mapped = Interval(lo, hi, iv.lo_closed and iv.lo > 0, iv.hi_closed and math.isfinite(hi))
        body = Call("log", substitute(p.body, var, Call("exp", Var(var))))
        pieces.append(Piece(mapped, body))
    return PiecewiseExpr(validate_pieces(pieces), var)


def reduce_negative_axis(G: PiecewiseExpr, lam: Sequence[float]) -> PiecewiseExpr:
    """H(x) = -G(-x): the negative half-line problem moved to the positive one."""
    check_odd_integer_weights(lam)
    if G.domain.hi > 0:
        raise ConjugationError("G must be defined on the negative half-line", "domain_not_negative")
    var = G.variable
    pieces = []
    for p in G.pieces:
        iv = p.interval
        mirrored = Interval(-iv.hi, -iv.lo, iv.hi_closed, iv.lo_closed)
        pieces.append(Piece(mirrored, Neg(substitute(p.body, var, Neg(Var(var))))))
    return PiecewiseExpr(validate_pieces(pieces), var)


def lift_f_to_g(f: GridFunction) -> GridFunction:
    """g = exp o f o log on J = e^I, with g'(x) = f'(log x) g(x) / x."""
    nodes = np.exp(f.nodes)
    values = np.exp(f.values)
    return GridFunction(nodes, values, f.derivs * values / nodes)


def reduce_g_to_f(g: GridFunction) -> GridFunction:
    """f = log o g o exp for a sampled positive g; inverse of ``lift_f_to_g``."""
    if g.a <= 0 or np.any(g.values <= 0):
        raise ConjugationError("g must be a positive map on a positive interval", "g_not_positive")
    return GridFunction(np.log(g.nodes), np.log(g.values), g.derivs * g.nodes / g.values)


def reflect(h: GridFunction) -> GridFunction:
    """x -> -h(-x); maps a solution on the positive side to the negative side."""
    return GridFunction(-h.nodes[::-1], -h.values[::-1], h.derivs[::-1])


def reflect_interval(J: tuple[float, float]) -> tuple[float, float]:
    return (-J[1], -J[0])
