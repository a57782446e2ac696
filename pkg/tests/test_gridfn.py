import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.interpolate import CubicHermiteSpline

from iterfix.fixtures import SineFixture, default_rng, random_member
from iterfix.gridfn import (
    ClassParams, GridError, GridFunction, NotMonotoneError, RangeError, c1_distance, compose,
    inverse, invert_monotone, iterate, iterates, read_csv, sup_norm, write_csv,
)

I = (0.0, 1.0)


def sine(seed, M=1.8, Mstar=3.0, min_slope=0.2):
    return random_member(I, M, Mstar, min_slope=min_slope, rng=default_rng(seed))


def test_hermite_matches_scipy():
    f = sine(3).grid(65)
    ref = CubicHermiteSpline(f.nodes, f.values, f.derivs)
    x = np.linspace(0, 1, 4001)
    assert np.max(np.abs(f.evaluate(x) - ref(x))) < 1e-14
    assert np.max(np.abs(f.derivative(x) - ref.derivative()(x))) < 1e-12


def test_exact_at_nodes():
    f = sine(4).grid(33)
    assert np.array_equal(f.evaluate(f.nodes), f.values)
    assert np.array_equal(f.derivative(f.nodes), f.derivs)


def test_interpolation_error_is_fourth_order():
    fx = sine(5)
    x = np.linspace(0, 1, 5001)
    errs = [np.max(np.abs(fx.grid(n).evaluate(x) - fx.value(x))) for n in (33, 65)]
    assert errs[0] / errs[1] > 12


def test_outside_interval_rejected():
    f = GridFunction.identity(0, 1, 5)
    with pytest.raises(GridError):
        f.evaluate(1.5)


def test_bad_construction():
    with pytest.raises(GridError):
        GridFunction([0.0, 0.0], [0, 0], [1, 1])
    with pytest.raises(GridError):
        GridFunction([0.0, 1.0], [0, np.nan], [1, 1])


def test_arrays_are_read_only():
    f = GridFunction.identity(0, 1, 5)
    with pytest.raises(ValueError):
        f.values[0] = 3.0


def test_class_params_validation():
    with pytest.raises(ValueError):
        ClassParams(-1.0, 1.0, 1.0, (0, 1))
    p = ClassParams(0.5, 2.0, 1.0, (0, 1))
    assert p.replace(M=3.0).M == 3.0


def test_iterates_match_direct_composition():
    fx = sine(6)
    f = fx.grid(513)
    f3 = iterate(f, 3)
    x = f.nodes
    direct = fx.value(fx.value(fx.value(x)))
    assert np.max(np.abs(f3.values - direct)) < 1e-9
    d = fx.deriv(x) * fx.deriv(fx.value(x)) * fx.deriv(fx.value(fx.value(x)))
    assert np.max(np.abs(f3.derivs - d)) < 1e-7
    its = iterates(f, 3)
    assert np.array_equal(its[3].values, f3.values)
    assert np.array_equal(its[0].values, f.nodes)


def test_chain_rule_against_finite_differences():
    f = sine(7).grid(257)
    g = sine(8).grid(257)
    fg = compose(f, g)
    h = 1e-6
    x = np.linspace(0.1, 0.9, 50)
    num = (f.evaluate(g.evaluate(x + h)) - f.evaluate(g.evaluate(x - h))) / (2 * h)
    assert np.max(np.abs(fg.derivative(x) - num)) < 1e-5


def test_compose_needs_range_inside():
    f = GridFunction.identity(0, 1, 5)
    g = GridFunction(f.nodes, f.nodes * 2, np.full(5, 2.0))
    with pytest.raises(RangeError):
        compose(f, g)


@given(st.integers(0, 10_000))
def test_compose_associative(seed):
    rng = np.random.default_rng(seed)
    f, g, h = (random_member(I, 1.8, 3.0, rng=rng).grid(257) for _ in range(3))
    left = compose(compose(f, g), h)
    right = compose(f, compose(g, h))
    assert np.max(np.abs(left.values - right.values)) < 1e-8


@given(st.integers(0, 10_000))
def test_inverse_is_right_inverse(seed):
    f = sine(seed).grid(257)
    y = np.linspace(0, 1, 333)
    x = invert_monotone(f, y, 1e-14)
    assert np.max(np.abs(f.evaluate(x) - y)) < 1e-13


def test_inverse_derivative():
    f = sine(11).grid(257)
    fi = inverse(f)
    x = np.linspace(0, 1, 101)
    assert np.allclose(fi.derivative(f.evaluate(x)) * f.derivative(x), 1.0, atol=1e-6)


def test_invert_requires_monotone():
    nodes = np.linspace(0, 1, 5)
    f = GridFunction(nodes, nodes, np.array([1, 1, 0, 1, 1.0]))
    with pytest.raises(NotMonotoneError):
        invert_monotone(f, 0.5)


def test_c1_distance_and_sup_norm():
    f = GridFunction.identity(0, 1, 9)
    g = f.with_nodes(f.values * 0.5, f.derivs * 0.5)
    assert c1_distance(f, g) == pytest.approx(0.5 + 0.5)
    assert sup_norm(f, g, per_cell=4) == pytest.approx(0.5)


def test_csv_round_trip(tmp_path):
    f = sine(12).grid(65)
    write_csv(f, tmp_path / "f.csv")
    back = read_csv(tmp_path / "f.csv")
    assert np.array_equal(back.nodes, f.nodes)
    assert np.array_equal(back.values, f.values)
    assert np.array_equal(back.derivs, f.derivs)


def test_fixture_derivatives():
    fx = SineFixture(0.0, 2.0, (0.1, -0.05))
    x = np.linspace(0, 2, 11)
    h = 1e-6
    assert np.allclose(fx.deriv(x), (fx.value(x + h) - fx.value(x - h)) / (2 * h), atol=1e-8)
    assert np.allclose(fx.second(x), (fx.deriv(x + h) - fx.deriv(x - h)) / (2 * h), atol=1e-6)
    assert fx.value(0.0) == 0.0 and math.isclose(fx.value(2.0), 2.0, abs_tol=1e-15)
