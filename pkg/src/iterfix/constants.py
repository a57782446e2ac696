"""Constants of the contraction argument and the hypotheses they must satisfy.

Indices follow the usual convention: ``lam[0]`` is the weight of the first
iterate f, ``lam[k-1]`` the weight of f^k.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

LAMBDA_SUM_TOL = 1e-12


class ConstantsError(ValueError):
    """Invalid weights; ``reason`` is a machine-readable code."""

    def __init__(self, message: str, reason: str):
        super().__init__(message)
        self.reason = reason


def q(s: int) -> int:
    """0 for s = 1, 1 for s >= 2."""
    if s < 1:
        raise ValueError("q is defined for s >= 1")
    return 0 if s == 1 else 1


def _geom(M: float, lo: int, hi: int) -> float:
    """sum_{j=lo}^{hi} M^j (empty sum is 0)."""
    return math.fsum(M**j for j in range(lo, hi + 1))


def _weighted_power_sum(M: float, k: int) -> float:
    """sum_{j=1}^{k} (k-j+1) M^{k+j-1}."""
    return math.fsum((k - j + 1) * M ** (k + j - 1) for j in range(1, k + 1))


@dataclass(frozen=True)
class LemmaBounds:
    """Coefficients of the five iterate/inverse estimates for iterate order k.

    ``iter_deriv_lipschitz``: Lipschitz constant of (f^k)'.
    ``iter_sup``: ||f1^k - f2^k|| <= iter_sup * ||f1 - f2||.
    ``iter_deriv_sup``/``iter_deriv_sup_values``: ||(f1^k)' - (f2^k)'|| <=
    iter_deriv_sup * ||f1' - f2'|| + iter_deriv_sup_values * ||f1 - f2||.
    ``inverse_deriv_lipschitz``: Lipschitz constant of (f^{-1})' when f' >= delta.
    ``sup_by_inverse``: ||f1 - f2|| <= sup_by_inverse * ||f1^{-1} - f2^{-1}||
    for maps that are Mstar-Lipschitz.
    """

    k: int
    iter_deriv_lipschitz: float
    iter_sup: float
    iter_deriv_sup: float
    iter_deriv_sup_values: float
    inverse_deriv_lipschitz: float
    sup_by_inverse: float


def lemma_bounds(k: int, M: float, Mstar: float, delta: float) -> LemmaBounds:
    if k < 1:
        raise ValueError("k must be >= 1")
    if delta <= 0:
        raise ValueError("delta must be positive for the inverse-derivative bound")
    m = k - 1  # the derivative-difference estimate is stated for f^{m+1}
    return LemmaBounds(
        k=k,
        iter_deriv_lipschitz=Mstar * _geom(M, k - 1, 2 * k - 2),
        iter_sup=_geom(M, 0, k - 1),
        iter_deriv_sup=float((m + 1) * M**m),
        iter_deriv_sup_values=q(m + 1) * Mstar * _weighted_power_sum(M, m),
        inverse_deriv_lipschitz=Mstar / delta**3,
        sup_by_inverse=Mstar,
    )


@dataclass(frozen=True)
class ConstantSet:
    lam: tuple[float, ...]
    delta: float
    M: float
    Mstar: float
    K0: float
    K1: float
    K2: float
    K3: float
    K4: float
    K5: float
    K6: float
    K3p: float
    K5p: float
    Mp: float
    K: float
    K_branches: tuple[float, float]
    K0M2: float
    hyp_lambda1_pos: bool
    hyp_K0M2: bool
    hyp_K_in_01: bool
    hyp_sum_one: bool

    @property
    def hypotheses_hold(self) -> bool:
        return self.hyp_lambda1_pos and self.hyp_K0M2 and self.hyp_K_in_01 and self.hyp_sum_one

    @property
    def trivial_weights(self) -> bool:
        """True when only the first iterate carries weight."""
        return all(l == 0 for l in self.lam[1:])

    def failure_reason(self) -> str | None:
        if not self.hyp_lambda1_pos:
            return "lambda1_not_positive"
        if not self.hyp_sum_one:
            return "lambda_sum_not_one"
        if not self.hyp_K0M2:
            return "lambda1_le_K0M2" if self.lam[0] <= self.K0M2 else "K0M2_not_positive"
        if not self.hyp_K_in_01:
            return "K_not_in_01"
        return None

    def as_dict(self) -> dict:
        d = asdict(self)
        d["lam"] = list(self.lam)
        d["K_branches"] = list(self.K_branches)
        return d


def validate_weights(lam: Sequence[float]) -> tuple[float, ...]:
    lam = tuple(float(v) for v in lam)
    if not lam:
        raise ConstantsError("need at least one weight", "lambda_empty")
    if not lam[0] > 0:
        raise ConstantsError(f"lambda_1 must be positive, got {lam[0]}", "lambda1_not_positive")
    for k, v in enumerate(lam[1:], start=2):
        if not 0.0 <= v <= 1.0:
            raise ConstantsError(f"lambda_{k}={v} outside [0, 1]", "lambda_out_of_range")
    total = math.fsum(lam)
    if abs(total - 1.0) > LAMBDA_SUM_TOL:
        raise ConstantsError(f"weights sum to {total!r}, not 1", "lambda_sum_not_one")
    return lam


def compute_constants(lam: Sequence[float], delta: float, M: float, Mstar: float) -> ConstantSet:
    """All constants for weights ``lam`` and class parameters (delta, M, M*).

    When lambda_1 <= K0 M^2 the derived quantities M', K3', K5' and K are
    undefined and set to nan; the hypothesis flags record why.
    """
    lam = validate_weights(lam)
    n = len(lam)
    l1 = lam[0]

    def w(k):  # weight of f^k, 1-based
        return lam[k - 1]

    K0 = math.fsum(w(k + 1) * _geom(M, k - 1, 2 * k - 2) for k in range(1, n))
    K1 = math.fsum(w(k) * M ** (k - 1) for k in range(1, n + 1))
    K2 = math.fsum(w(k) * _geom(M, 0, k - 2) for k in range(2, n + 1))
    K3 = math.fsum(w(k + 2) * q(k + 1) * Mstar * _weighted_power_sum(M, k) for k in range(0, n - 1))
    K4 = math.fsum(w(k + 2) * (k + 1) * M**k for k in range(0, n - 1))
    K5 = K3 / l1**2 + Mstar * K0 * K2 / l1**3
    K6 = K4 / l1**2
    K0M2 = K0 * M**2

    hyp_K0M2 = l1 > K0M2 > 0
    if l1 > K0M2:
        Mp = Mstar / (l1 - K0M2)
        K3p = math.fsum(w(k + 2) * q(k + 1) * Mp * _weighted_power_sum(M, k) for k in range(0, n - 1))
        K5p = K3p / l1**2 + Mp * K0 * K2 / l1**3
        branches = (K2 / l1 + l1 * M * K5p, l1 * M * K6)
        K = max(branches)
    else:
        Mp = K3p = K5p = K = math.nan
        branches = (math.nan, l1 * M * K6)

    return ConstantSet(
        lam=lam, delta=float(delta), M=float(M), Mstar=float(Mstar),
        K0=K0, K1=K1, K2=K2, K3=K3, K4=K4, K5=K5, K6=K6,
        K3p=K3p, K5p=K5p, Mp=Mp, K=K, K_branches=branches, K0M2=K0M2,
        hyp_lambda1_pos=l1 > 0,
        hyp_K0M2=hyp_K0M2,
        hyp_K_in_01=bool(0 < K < 1),
        hyp_sum_one=True,
    )


def normalize_weights(lam: Sequence[float]) -> tuple[tuple[float, ...], float]:
    """Divide the weights by their sum; returns (normalised weights, sum).

    The right-hand side must be transformed accordingly: G becomes G^(1/sum),
    i.e. F becomes F / sum.
    """
    total = math.fsum(lam)
    if total <= 0:
        raise ConstantsError("weights must have a positive sum", "lambda_sum_not_positive")
    return tuple(v / total for v in lam), total
