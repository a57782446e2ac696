"""Sampled C^1 functions on a compact interval.

A ``GridFunction`` stores values and derivatives at strictly increasing nodes
and is evaluated by piecewise cubic Hermite interpolation, so the represented
function is C^1 and honours the stored derivative field.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .expr import PiecewiseExpr

DEFAULT_GRID = 1025
RANGE_TOL = 1e-12


class GridError(ValueError):
    pass


class RangeError(GridError):
    """A value left the interval by more than the clamping tolerance."""


class NotMonotoneError(GridError):
    pass


@dataclass(frozen=True, eq=False)
class ClassParams:
    """Parameters (delta, M, M*) of the function classes, plus the interval."""

    delta: float
    M: float
    Mstar: float
    interval: tuple[float, float]

    def __post_init__(self):
        if self.delta < 0 or self.M < 0 or self.Mstar < 0:
            raise ValueError("delta, M and Mstar must be non-negative")
        a, b = self.interval
        if not a < b:
            raise ValueError(f"degenerate interval {self.interval}")

    def replace(self, **changes) -> "ClassParams":
        d = dict(delta=self.delta, M=self.M, Mstar=self.Mstar, interval=self.interval)
        d.update(changes)
        return ClassParams(**d)


@dataclass(frozen=True, eq=False)
class GridFunction:
    nodes: np.ndarray
    values: np.ndarray
    derivs: np.ndarray
    _h: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        values = np.asarray(self.values, dtype=float)
        derivs = np.asarray(self.derivs, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise GridError("need at least two nodes")
        if values.shape != nodes.shape or derivs.shape != nodes.shape:
            raise GridError("nodes, values and derivs must have the same length")
        if np.any(np.diff(nodes) <= 0):
            raise GridError("nodes must be strictly increasing")
        if not (np.all(np.isfinite(values)) and np.all(np.isfinite(derivs))):
            raise GridError("values and derivs must be finite")
        for name, arr in (("nodes", nodes), ("values", values), ("derivs", derivs)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "_h", np.diff(nodes))

    @property
    def a(self) -> float:
        return float(self.nodes[0])

    @property
    def b(self) -> float:
        return float(self.nodes[-1])

    @property
    def interval(self) -> tuple[float, float]:
        return (self.a, self.b)

    def __len__(self) -> int:
        return self.nodes.size

    # -- construction -----------------------------------------------------

    @classmethod
    def identity(cls, a: float, b: float, n: int = DEFAULT_GRID) -> "GridFunction":
        nodes = uniform_nodes(a, b, n)
        return cls(nodes, nodes.copy(), np.ones_like(nodes))

    @classmethod
    def from_callable(cls, func, deriv, a: float, b: float, n: int = DEFAULT_GRID) -> "GridFunction":
        nodes = uniform_nodes(a, b, n)
        return cls(nodes, np.asarray(func(nodes), float), np.asarray(deriv(nodes), float))

    @classmethod
    def from_expr(cls, e: PiecewiseExpr, a: float, b: float, n: int = DEFAULT_GRID) -> "GridFunction":
        nodes = uniform_nodes(a, b, n)
        values, derivs = sample_expr(e, nodes)
        return cls(nodes, values, derivs)

    # -- evaluation -------------------------------------------------------

    def _locate(self, x: np.ndarray):
        if np.any(x < self.a) or np.any(x > self.b):
            bad = x[(x < self.a) | (x > self.b)][0]
            raise GridError(f"x={bad!r} outside [{self.a!r}, {self.b!r}]")
        i = np.clip(np.searchsorted(self.nodes, x, side="right") - 1, 0, self.nodes.size - 2)
        h = self._h[i]
        t = (x - self.nodes[i]) / h
        return i, h, t

    def __call__(self, x):
        return self.evaluate(x)

    def evaluate(self, x):
        arr = np.asarray(x, dtype=float)
        flat = np.atleast_1d(arr)
        i, h, t = self._locate(flat)
        y0, y1 = self.values[i], self.values[i + 1]
        m0, m1 = self.derivs[i] * h, self.derivs[i + 1] * h
        t2 = t * t
        t3 = t2 * t
        out = (2 * t3 - 3 * t2 + 1) * y0 + (t3 - 2 * t2 + t) * m0 + (-2 * t3 + 3 * t2) * y1 + (t3 - t2) * m1
        exact = t == 0.0
        out[exact] = y0[exact]
        at_end = t == 1.0
        out[at_end] = y1[at_end]
        return out.reshape(arr.shape) if arr.ndim else float(out[0])

    def derivative(self, x):
        arr = np.asarray(x, dtype=float)
        flat = np.atleast_1d(arr)
        i, h, t = self._locate(flat)
        y0, y1 = self.values[i], self.values[i + 1]
        d0, d1 = self.derivs[i], self.derivs[i + 1]
        t2 = t * t
        out = (6 * t2 - 6 * t) * (y0 - y1) / h + (3 * t2 - 4 * t + 1) * d0 + (3 * t2 - 2 * t) * d1
        exact = t == 0.0
        out[exact] = d0[exact]
        at_end = t == 1.0
        out[at_end] = d1[at_end]
        return out.reshape(arr.shape) if arr.ndim else float(out[0])

    def refined_points(self, per_cell: int) -> np.ndarray:
        """Nodes plus ``per_cell`` equally spaced interior points in every cell."""
        if per_cell <= 0:
            return self.nodes.copy()
        frac = np.arange(1, per_cell + 1) / (per_cell + 1)
        inner = self.nodes[:-1, None] + self._h[:, None] * frac[None, :]
        pts = np.concatenate([np.column_stack([self.nodes[:-1], inner]).ravel(), self.nodes[-1:]])
        return pts

    # -- misc -------------------------------------------------------------

    def with_nodes(self, values, derivs) -> "GridFunction":
        return GridFunction(self.nodes, values, derivs)

    def is_self_map(self, tol: float = RANGE_TOL) -> bool:
        return bool(np.all(self.values >= self.a - tol) and np.all(self.values <= self.b + tol))

    def to_csv(self, path) -> None:
        write_csv(self, path)


def uniform_nodes(a: float, b: float, n: int) -> np.ndarray:
    if n < 2:
        raise GridError("need at least two nodes")
    nodes = np.linspace(a, b, n)
    nodes[0], nodes[-1] = a, b
    return nodes


def sample_expr(e: PiecewiseExpr, nodes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Values and derivatives of ``e`` at ``nodes``.

    Derivatives are one-sided towards the interior at the two ends of the
    node range and right-sided at interior piece boundaries.
    """
    nodes = np.asarray(nodes, dtype=float)
    values = e.eval(nodes)
    derivs = np.empty_like(nodes)
    derivs[:-1] = e.eval_derivative(nodes[:-1], side="right")
    derivs[-1] = e.eval_derivative(nodes[-1], side="left")
    return values, derivs


def _clamp_into(values: np.ndarray, a: float, b: float, tol: float = RANGE_TOL) -> np.ndarray:
    if np.any(values < a - tol) or np.any(values > b + tol):
        worst = max(float(np.max(a - values)), float(np.max(values - b)))
        raise RangeError(f"values leave [{a!r}, {b!r}] by {worst:.3g}")
    return np.clip(values, a, b)


def compose(f: GridFunction, g: GridFunction) -> GridFunction:
    """f o g, resampled on g's nodes, with the chain-rule derivative."""
    inner = _clamp_into(g.values, f.a, f.b)
    return GridFunction(g.nodes, f.evaluate(inner), f.derivative(inner) * g.derivs)


def iterate(f: GridFunction, k: int) -> GridFunction:
    """The k-th iterate f^k; k = 0 gives the identity on f's nodes."""
    if k < 0:
        raise ValueError("k must be non-negative")
    if not f.is_self_map():
        raise RangeError("iteration needs a self-map of the interval")
    result = GridFunction(f.nodes, f.nodes.copy(), np.ones_like(f.nodes))
    for _ in range(k):
        result = compose(f, result)
    return result


def iterates(f: GridFunction, k: int) -> list[GridFunction]:
    """[f^0, f^1, ..., f^k], each built from its predecessor."""
    if not f.is_self_map():
        raise RangeError("iteration needs a self-map of the interval")
    out = [GridFunction(f.nodes, f.nodes.copy(), np.ones_like(f.nodes))]
    for _ in range(k):
        out.append(compose(f, out[-1]))
    return out


def invert_monotone(f: GridFunction, y, tol: float = 1e-12):
    """Solve f(x) = y for strictly increasing f.

    Each target is bracketed by a node cell and solved by Newton's method,
    falling back to bisection whenever a step leaves the bracket.
    """
    if np.any(f.derivs <= 0) or np.any(np.diff(f.values) <= 0):
        raise NotMonotoneError("f is not strictly increasing on its nodes")
    arr = np.asarray(y, dtype=float)
    ys = np.atleast_1d(arr).astype(float)
    lo_val, hi_val = f.values[0], f.values[-1]
    if np.any(ys < lo_val - RANGE_TOL) or np.any(ys > hi_val + RANGE_TOL):
        raise RangeError(f"targets outside [{lo_val!r}, {hi_val!r}]")
    ys = np.clip(ys, lo_val, hi_val)

    i = np.clip(np.searchsorted(f.values, ys, side="right") - 1, 0, len(f) - 2)
    lo = f.nodes[i].copy()
    hi = f.nodes[i + 1].copy()
    span = f.values[i + 1] - f.values[i]
    x = lo + (hi - lo) * (ys - f.values[i]) / span

    for _ in range(200):
        r = f.evaluate(x) - ys
        done = np.abs(r) <= tol
        if np.all(done):
            break
        # the bracket keeps r(lo) <= 0 <= r(hi)
        lo = np.where(r < 0, x, lo)
        hi = np.where(r > 0, x, hi)
        d = f.derivative(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = x - r / d
        bad = ~np.isfinite(step) | (step <= lo) | (step >= hi) | (d <= 0)
        step = np.where(bad, 0.5 * (lo + hi), step)
        x = np.where(done, x, step)
    else:
        raise GridError("monotone inversion did not converge")

    # polish: Newton is quadratic here, so two extra steps reach rounding level
    for _ in range(2):
        r = f.evaluate(x) - ys
        cand = np.clip(x - r / f.derivative(x), f.a, f.b)
        better = np.abs(f.evaluate(cand) - ys) < np.abs(r)
        x = np.where(better, cand, x)

    return x.reshape(arr.shape) if arr.ndim else float(x[0])


def inverse(f: GridFunction, tol: float = 1e-13) -> GridFunction:
    """f^{-1} sampled on f's value range, with derivative 1/f'(f^{-1}(y))."""
    ys = uniform_nodes(f.values[0], f.values[-1], len(f))
    xs = invert_monotone(f, ys, tol)
    return GridFunction(ys, xs, 1.0 / f.derivative(xs))


def sup_norm(f1: GridFunction, f2: GridFunction, per_cell: int = 0) -> float:
    """sup |f1 - f2| over f1's nodes plus ``per_cell`` points per cell."""
    x = f1.refined_points(per_cell)
    return float(np.max(np.abs(f1.evaluate(x) - f2.evaluate(x))))


def sup_norm_deriv(f1: GridFunction, f2: GridFunction, per_cell: int = 0) -> float:
    x = f1.refined_points(per_cell)
    return float(np.max(np.abs(f1.derivative(x) - f2.derivative(x))))


def c1_distance(f1: GridFunction, f2: GridFunction, per_cell: int = 0) -> float:
    """||f1 - f2||_inf + ||f1' - f2'||_inf on the sample of f1's interval."""
    if per_cell == 0 and np.array_equal(f1.nodes, f2.nodes):
        return float(np.max(np.abs(f1.values - f2.values)) + np.max(np.abs(f1.derivs - f2.derivs)))
    return sup_norm(f1, f2, per_cell) + sup_norm_deriv(f1, f2, per_cell)


def write_csv(f: GridFunction, path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "value", "deriv"])
        for row in zip(f.nodes, f.values, f.derivs):
            w.writerow([f"{v:.17g}" for v in row])


def read_csv(path) -> GridFunction:
    with Path(path).open(newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header != ["x", "value", "deriv"]:
            raise GridError(f"unexpected CSV header {header}")
        rows = np.array([[float(v) for v in row] for row in r])
    return GridFunction(rows[:, 0], rows[:, 1], rows[:, 2])
