"""Differentiable solutions of the product-of-iterates equation.

The equation (g(x))^l1 (g^2(x))^l2 ... (g^n(x))^ln = G(x) on a half-line is
conjugated to l1 f + l2 f^2 + ... + ln f^n = F on the real line and solved by
contraction (Picard) iteration on a compact interval.
"""

__version__ = "0.1.0"

from .expr import PiecewiseExpr, parse
from .gridfn import ClassParams, GridFunction
from .constants import ConstantSet, compute_constants
from .solver import ProblemSpec, SolveReport, solve

__all__ = [
    "ClassParams", "ConstantSet", "GridFunction", "PiecewiseExpr", "ProblemSpec",
    "SolveReport", "compute_constants", "parse", "solve",
]
