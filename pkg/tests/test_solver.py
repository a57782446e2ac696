import math

import numpy as np
import pytest

from iterfix.classes import check_A_class
from iterfix.constants import compute_constants
from iterfix.expr import parse
from iterfix.fixtures import default_rng, random_member
from iterfix.gridfn import ClassParams, GridFunction, RangeError
from iterfix.solver import (
    ClassMembershipError, ConvergenceError, HypothesisError, ProblemSpec, apply_T, build_L,
    evaluate_solution_on_R, fixed_point_defect, residual_product, residual_star, solve,
)

from conftest import DELTA, I, J, LAM, M, MSTAR

C = compute_constants(LAM, DELTA, M, MSTAR)


@pytest.fixture(scope="module")
def example_report(G_expr):
    spec = ProblemSpec.from_G(LAM, G_expr, J, DELTA, M, MSTAR)
    return solve(spec)


def test_example_converges(example_report):
    r = example_report
    assert r.iterations <= 20
    assert r.distances[-1] <= 1e-10
    assert r.residual_star <= 1e-8
    assert r.residual_product <= 1e-6
    assert r.aposteriori_bound <= C.K / (1 - C.K) * 1e-10


def test_apriori_bound_consistent(example_report):
    r = example_report
    m = r.iterations
    assert r.apriori_bound == pytest.approx(C.K**m / (1 - C.K) * r.distances[0])


def test_solution_is_a_self_map_fixing_the_ends(example_report):
    f = example_report.f
    assert f.values[0] == I[0] and f.values[-1] == pytest.approx(I[1], abs=1e-15)
    assert f.is_self_map()
    assert np.all(np.diff(f.values) > 0)


def test_solution_slope_band(example_report):
    f = example_report.f
    x = f.refined_points(4)
    d = f.derivative(x)
    assert np.min(d) >= DELTA / C.K1 - 1e-9
    assert np.max(d) <= M + 1e-9
    assert check_A_class(f, ClassParams(DELTA / C.K1, M, C.Mp, I)).member


def test_fixed_point_defect(example_report, F_expr):
    assert fixed_point_defect(example_report.f, F_expr, LAM) <= 2e-10


def test_T_maps_into_the_solution_class(F_expr):
    rng = default_rng(3)
    for _ in range(10):
        f = random_member(I, M, C.Mp, rng=rng).grid(257)
        Tf = apply_T(f, F_expr, LAM)
        assert Tf.values[0] == I[0] and Tf.values[-1] == I[1]
        d = Tf.derivative(Tf.refined_points(3))
        assert np.min(d) >= DELTA / C.K1 - 1e-9 and np.max(d) <= M + 1e-9


def test_build_L_fixes_the_ends():
    f = random_member(I, M, C.Mp, rng=default_rng(4)).grid(129)
    L = build_L(f, LAM)
    assert L.values[0] == I[0] and L.values[-1] == I[1]
    assert np.all(L.derivs >= LAM[0] - 1e-12) and np.all(L.derivs <= C.K1 + 1e-12)


def test_evaluate_solution_outside_I(example_report, F_expr):
    assert evaluate_solution_on_R(example_report, F_expr, -5.0) == (0.0, 0.0)
    fx, dfx = evaluate_solution_on_R(example_report, F_expr, 10.0)
    L = build_L(example_report.f, LAM)
    assert L.evaluate(fx) == pytest.approx(F_expr.eval(10.0), abs=1e-13)
    h = 1e-5
    num = (evaluate_solution_on_R(example_report, F_expr, 10 + h)[0]
           - evaluate_solution_on_R(example_report, F_expr, 10 - h)[0]) / (2 * h)
    assert dfx == pytest.approx(num, rel=1e-6)
    inside = evaluate_solution_on_R(example_report, F_expr, 0.3)
    assert inside[0] == example_report.f.evaluate(0.3)


def test_residual_detects_a_perturbed_solution(example_report, G_expr):
    g = example_report.g
    bump = 0.01 * np.sin(math.pi * (g.nodes - 1.0))
    bent = GridFunction(g.nodes, g.values + bump, g.derivs + 0.01 * math.pi * np.cos(math.pi * (g.nodes - 1.0)))
    assert residual_product(bent, G_expr, LAM, J) > 1e-3


def test_residual_star_of_identity_against_identity():
    F = parse("piece (-inf,inf): x")
    assert residual_star(GridFunction.identity(0, 1, 33), F, LAM) < 1e-15


def test_hypothesis_failure(G_expr):
    spec = ProblemSpec.from_G(LAM, G_expr, J, DELTA, 3.0, MSTAR)
    with pytest.raises(HypothesisError) as info:
        solve(spec)
    assert info.value.reason == "lambda1_le_K0M2"


def test_rhs_outside_class_rejected():
    F = parse("piece (-inf,inf): x^2")
    spec = ProblemSpec(LAM, F, (0.0, 1.0), ClassParams(0.5, 1.2, 1.0, (0.0, 1.0)))
    with pytest.raises(ClassMembershipError) as info:
        solve(spec)
    assert info.value.reason == "F_not_in_class"


def test_rhs_leaving_I_is_a_range_error():
    F = parse("piece (-inf,inf): 2*x")
    spec = ProblemSpec(LAM, F, (0.0, 1.0), ClassParams(0.5, 2.5, 1.0, (0.0, 1.0)))
    with pytest.raises(RangeError):
        solve(spec, verify_class=False)


def test_iteration_cap(G_expr):
    spec = ProblemSpec.from_G(LAM, G_expr, J, DELTA, M, MSTAR, max_iters=2)
    with pytest.raises(ConvergenceError):
        solve(spec)


def test_grid_refinement_changes_little(example_report, G_expr):
    coarse = solve(ProblemSpec.from_G(LAM, G_expr, J, DELTA, M, MSTAR, grid_size=257))
    x = np.linspace(*I, 101)
    assert np.max(np.abs(coarse.f.evaluate(x) - example_report.f.evaluate(x))) < 1e-8


def test_spec_validation(F_expr):
    with pytest.raises(ValueError):
        ProblemSpec(LAM, F_expr, (1.0, 0.0), ClassParams(0.5, 2.0, 1.0, (0.0, 1.0)))
    with pytest.raises(ValueError):
        ProblemSpec(LAM, F_expr, I, ClassParams(0.5, 2.0, 1.0, I), tol=0.0)
