"""Acceptance criteria 1-8, one PASS/FAIL line per criterion.

The lines are collected and shown in the pytest terminal summary, so they
appear in a plain ``pytest -v`` run as well.
"""

import math
import sys
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import ACCEPTANCE_LINES, DELTA, F_SOURCE, G_SOURCE, I, J, LAM, M, MSTAR  # noqa: E402
from lemma_checks import run_suite  # noqa: E402

from iterfix.classes import Regime, check_A_class, check_F_class, check_G_class, classify_regime  # noqa: E402
from iterfix.conjugate import (  # noqa: E402
    ConjugationError, check_odd_integer_weights, lift_f_to_g, reduce_g_to_f, reduce_negative_axis,
    reflect,
)
from iterfix.constants import compute_constants  # noqa: E402
from iterfix.expr import parse  # noqa: E402
from iterfix.fixtures import default_rng, random_member, random_pairs  # noqa: E402
from iterfix.gridfn import ClassParams, c1_distance, sample_expr  # noqa: E402
from iterfix.solver import ProblemSpec, apply_T, residual_product, solve  # noqa: E402

SLACK = 1e-9
K_EXAMPLE = 0.17115


@contextmanager
def criterion(number, title):
    """Print one PASS/FAIL line for the enclosed checks, straight to the terminal."""
    def emit(line):
        ACCEPTANCE_LINES.append(line)
        print(line)

    try:
        yield
    except BaseException as exc:
        emit(f"[FAIL] criterion {number}: {title} ({type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''})")
        raise
    emit(f"[PASS] criterion {number}: {title}")


@pytest.fixture(scope="module")
def example():
    G = parse(G_SOURCE)
    t0 = time.perf_counter()
    rep = solve(ProblemSpec.from_G(LAM, G, J, DELTA, M, MSTAR, grid_size=1025, tol=1e-10))
    return rep, time.perf_counter() - t0


def test_criterion_1_constants():
    with criterion(1, "constants reproduce K0=K2=K4=0.1, K3'=0, M'=2.09176, K0M^2=0.23726, K=0.17115"):
        c = compute_constants(LAM, DELTA, M, MSTAR)
        assert c.K0 == 0.1 and c.K2 == 0.1 and c.K4 == 0.1
        assert c.K3p == 0.0
        assert abs(c.Mp - 2.09176) <= 1e-4
        assert abs(c.K0M2 - 0.23726) <= 1e-4
        assert abs(c.K_branches[0] - 0.15089) <= 1e-4
        assert abs(c.K_branches[1] - 0.17115) <= 1e-4
        assert abs(c.K - 0.17115) <= 1e-4
        reps = 200
        t0 = time.perf_counter()
        for _ in range(reps):
            compute_constants(LAM, DELTA, M, MSTAR)
        assert (time.perf_counter() - t0) / reps < 1e-3


def test_criterion_2_class_membership():
    with criterion(2, "example F is in F_I and G is in G_J at the default sampling"):
        p = ClassParams(DELTA, LAM[0] * M, MSTAR, I)
        vF = check_F_class(parse(F_SOURCE), p)
        vG = check_G_class(parse(G_SOURCE), J, p.replace(interval=J))
        assert vF.member, vF.as_dict()["violations"]
        assert vG.member, vG.as_dict()["violations"]


def test_criterion_3_end_to_end(example):
    rep, elapsed = example
    with criterion(3, "example solve: <= 20 iterations, residuals, solution class, < 5 s"):
        c = rep.constants
        assert rep.iterations <= 20
        # geometric bound: iterations needed for K^m d0 / (1 - K) <= tol
        needed = math.ceil(math.log(1e-10 * (1 - K_EXAMPLE) / rep.distances[0]) / math.log(K_EXAMPLE))
        assert rep.iterations <= max(needed, 1) + 1
        assert rep.residual_star <= 1e-8
        assert rep.residual_product <= 1e-6
        v = check_A_class(rep.f, ClassParams(DELTA / c.K1, M, c.Mp, I))
        assert v.member, v.as_dict()["violations"]
        assert elapsed < 5.0


def test_criterion_4_contraction(example):
    rep, _ = example
    with criterion(4, "||Tf1 - Tf2|| <= 0.17115 ||f1 - f2|| on 60 seeded pairs; Picard ratios <= K"):
        c = compute_constants(LAM, DELTA, M, MSTAR)
        F = parse(F_SOURCE)
        pairs = random_pairs(60, I, M, c.Mp, n=513, rng=default_rng(2024))
        for f1, f2 in pairs:
            assert check_A_class(f1, ClassParams(0.0, M, c.Mp, I)).member
            lhs = c1_distance(apply_T(f1, F, LAM), apply_T(f2, F, LAM))
            assert lhs <= K_EXAMPLE * c1_distance(f1, f2) + 1e-8
        for ratio in rep.ratios():
            assert ratio <= c.K + 1e-6


def test_criterion_5_lemma_suite():
    with criterion(5, "iterate, inverse and L_f estimates on 50 seeded fixtures (slack 1e-9)"):
        worst = run_suite(default_rng(7), count=50)
        bad = {k: v for k, v in worst.items() if v > SLACK}
        assert len(worst) >= 20
        assert not bad, bad


def test_criterion_6_degenerate_regimes():
    with criterion(6, "Empty / IdentityOnly regimes; identity right-hand side returns the identity"):
        cases = [((0.5, 0.9), Regime.EMPTY), ((1.2, 2.0), Regime.EMPTY),
                 ((1.0, 2.0), Regime.IDENTITY_ONLY), ((0.5, 1.0), Regime.IDENTITY_ONLY)]
        for (d, m), want in cases:
            assert classify_regime(ClassParams(d, m, 1.0, (0.0, 1.0))) is want
        # the identity of I, held constant outside so that F maps the line into I
        ident = parse("piece (-inf,0]: 0; piece [0,1]: x; piece [1,inf): 1")
        for lam, (d, m) in (((0.9, 0.1), (1.0, 2.0)), ((1.0, 0.0), (0.5, 1.0))):
            spec = ProblemSpec(lam, ident, (0.0, 1.0), ClassParams(d, m, 1.0, (0.0, 1.0)))
            rep = solve(spec)
            assert rep.distances[0] <= 1e-12
            assert np.max(np.abs(rep.f.values - rep.f.nodes)) <= 1e-12
            assert np.max(np.abs(rep.f.derivs - 1.0)) <= 1e-12


def test_criterion_7_conjugation():
    with criterion(7, "log round trip within 1e-10; reflected residual matches; lambda=(1,1) rejected"):
        rng = default_rng(11)
        logJ = (0.0, math.log(2.0))
        for _ in range(50):
            fx = random_member(logJ, 1.5, 1.0, rng=rng)
            g = lift_f_to_g(fx.grid(257))
            back = lift_f_to_g(reduce_g_to_f(g))
            for attr in ("nodes", "values", "derivs"):
                assert np.max(np.abs(getattr(back, attr) - getattr(g, attr))) <= 1e-10

        lam = (1, 2)
        G_neg = parse("piece (-inf,0): x^3")
        H = reduce_negative_axis(G_neg, lam)
        h = lift_f_to_g(random_member(logJ, 1.5, 1.0, rng=rng).grid(257))
        r_pos = residual_product(h, H, lam, (1.0, 2.0))
        r_neg = residual_product(reflect(h), G_neg, lam, (-2.0, -1.0))
        assert abs(r_pos - r_neg) <= 1e-9

        with pytest.raises(ConjugationError) as info:
            check_odd_integer_weights((1, 1))
        assert info.value.reason == "negative_axis_even_lambda_sum"


def test_criterion_8_trivial_weights():
    with criterion(8, "lambda=(1,0): one iteration returns F at the nodes within 1e-9"):
        F = parse(F_SOURCE)
        rep = solve(ProblemSpec((1.0, 0.0), F, I, ClassParams(DELTA, M, MSTAR, I)))
        assert rep.iterations == 1 and rep.trivial_weights
        Fv, Fd = sample_expr(F, rep.f.nodes)
        assert np.max(np.abs(rep.f.values - Fv)) <= 1e-9
        assert np.max(np.abs(rep.f.derivs - Fd)) <= 1e-9


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
