"""Seeded random members of the function classes, for tests and demos.

Fixtures are identity-plus-sine perturbations

    f(x) = x + sum_j c_j sin(j pi (x - a) / (b - a)),

which fix both ends of I. The coefficients are scaled so that
``min_slope <= f' <= M`` and ``|f''| <= M*`` hold with a margin, so the
sampled grid stays in the class despite interpolation error.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .gridfn import GridFunction

SEED_ENV = "ITERFIX_SEED"


def default_rng(seed: int | None = None) -> np.random.Generator:
    if seed is None:
        seed = int(os.environ.get(SEED_ENV, "0"))
    return np.random.default_rng(seed)


@dataclass(frozen=True)
class SineFixture:
    a: float
    b: float
    coeffs: tuple[float, ...]

    def _freq(self):
        L = self.b - self.a
        return np.arange(1, len(self.coeffs) + 1) * math.pi / L

    def value(self, x):
        x = np.asarray(x, dtype=float)
        w = self._freq()
        return x + np.sin(np.multiply.outer(x - self.a, w)) @ np.array(self.coeffs)

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        w = self._freq()
        return 1.0 + np.cos(np.multiply.outer(x - self.a, w)) @ (np.array(self.coeffs) * w)

    def second(self, x):
        x = np.asarray(x, dtype=float)
        w = self._freq()
        return -np.sin(np.multiply.outer(x - self.a, w)) @ (np.array(self.coeffs) * w**2)

    def grid(self, n: int = 257) -> GridFunction:
        g = GridFunction.from_callable(self.value, self.deriv, self.a, self.b, n)
        values = np.clip(g.values, self.a, self.b)
        values[0], values[-1] = self.a, self.b
        return GridFunction(g.nodes, values, g.derivs)


def random_member(interval, M: float, Mstar: float, *, min_slope: float = 0.0,
                  rng: np.random.Generator | None = None, modes: int = 4,
                  margin: float = 0.9) -> SineFixture:
    """A random f with f(a)=a, f(b)=b, min_slope <= f' <= M and |f''| <= M*.

    Requires min_slope <= 1 <= M; when either bound equals 1 only the
    identity qualifies and it is returned.
    """
    a, b = map(float, interval)
    if not (min_slope <= 1.0 <= M):
        raise ValueError("need min_slope <= 1 <= M for a non-empty class")
    rng = rng if rng is not None else default_rng()
    m = int(rng.integers(1, modes + 1))
    c = rng.normal(size=m) / np.arange(1, m + 1)
    w = np.arange(1, m + 1) * math.pi / (b - a)
    slope_room = min(1.0 - min_slope, M - 1.0)
    s1 = float(np.sum(np.abs(c) * w))
    s2 = float(np.sum(np.abs(c) * w**2))
    if slope_room <= 0 or s1 == 0:
        return SineFixture(a, b, (0.0,))
    scale = margin * min(slope_room / s1, Mstar / s2)
    scale *= rng.uniform(0.2, 1.0)
    return SineFixture(a, b, tuple(float(v) for v in c * scale))


def random_pairs(count: int, interval, M: float, Mstar: float, *, min_slope: float = 0.0,
                 n: int = 257, rng: np.random.Generator | None = None):
    """``count`` pairs of sampled fixtures."""
    rng = rng if rng is not None else default_rng()
    out = []
    for _ in range(count):
        f1 = random_member(interval, M, Mstar, min_slope=min_slope, rng=rng)
        f2 = random_member(interval, M, Mstar, min_slope=min_slope, rng=rng)
        out.append((f1.grid(n), f2.grid(n)))
    return out
