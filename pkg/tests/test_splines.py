"""Spline evaluation, quadrature, and cardinal inner products."""

from fractions import Fraction

import numpy as np
import pytest

from chronospline.splines import (
    SplineSpace,
    basis_all,
    bspline_one,
    cardinal_at_integers,
    cardinal_inner,
    element_tables,
    eval_bspline,
    eval_cardinal,
    gauss_rule,
)


def test_hat_peak_is_one():
    space = SplineSpace(degree=1, intervals=8)
    # interior hat j peaks at mesh node j
    assert eval_bspline(space, 3, 3 / 8) == pytest.approx(1.0, abs=1e-14)


def test_quadratic_mid_support_value():
    # interior quadratic basis function at the center of its support equals
    # the quadratic cardinal spline at 3/2, i.e. 3/4
    space = SplineSpace(degree=2, intervals=8)
    assert eval_bspline(space, 3, 2.5 / 8) == pytest.approx(0.75, abs=1e-14)
    assert eval_cardinal(2, Fraction(3, 2)) == Fraction(3, 4)


def test_partition_of_unity():
    rng = np.random.default_rng(42)
    for p in (1, 2, 3, 4):
        space = SplineSpace(degree=p, intervals=11, interval=(-1.0, 3.0))
        for t in rng.uniform(-1.0, 3.0, 50):
            s = sum(eval_bspline(space, j, t) for j in range(space.dimension))
            assert abs(s - 1.0) < 1e-12


def test_trimming_removes_exactly_one_function():
    full = SplineSpace(degree=3, intervals=10)
    both = SplineSpace(degree=3, intervals=10, trim_start=True, trim_end=True)
    assert full.dimension == 13
    assert both.dimension == 11
    # trimmed space vanishes at the corresponding endpoint
    assert sum(eval_bspline(both, j, 0.0) for j in range(both.dimension)) == 0.0
    assert sum(eval_bspline(both, j, 1.0) for j in range(both.dimension)) == 0.0


def test_basis_nonnegative():
    rng = np.random.default_rng(3)
    space = SplineSpace(degree=4, intervals=9)
    for t in rng.uniform(0, 1, 40):
        for j in range(space.dimension):
            assert eval_bspline(space, j, t) >= -1e-15


def test_eval_bspline_errors():
    space = SplineSpace(degree=2, intervals=8)
    with pytest.raises(IndexError):
        eval_bspline(space, space.dimension, 0.5)
    with pytest.raises(ValueError):
        eval_bspline(space, 0, 0.5, deriv_order=3)


def test_cardinal_values():
    assert eval_cardinal(1, 1.0) == 1.0
    assert eval_cardinal(3, Fraction(2)) == Fraction(2, 3)
    assert eval_cardinal(3, 2.0, deriv_order=1) == 0.0
    # zero outside the support
    assert eval_cardinal(3, -0.5) == 0
    assert eval_cardinal(3, 4.5) == 0


def test_cardinal_spline_object():
    from chronospline.splines import CardinalSpline
    phi = CardinalSpline(3)
    assert phi.support == (0.0, 4.0)
    assert phi(Fraction(2)) == Fraction(2, 3)
    assert phi(2.0, deriv_order=1) == 0.0
    assert phi.at_integers()[2] == Fraction(2, 3)
    rng = np.random.default_rng(2)
    for t in rng.uniform(0.1, 3.9, 20):
        assert phi(t) > 0.0
    with pytest.raises(ValueError):
        CardinalSpline(-1)


def test_cardinal_symmetry():
    rng = np.random.default_rng(7)
    for j in (1, 2, 3, 4, 5):
        mid = (j + 1) / 2
        for s in rng.uniform(0, mid, 20):
            left = eval_cardinal(j, mid - s)
            right = eval_cardinal(j, mid + s)
            assert abs(left - right) < 1e-12


def test_cardinal_partition_of_unity():
    rng = np.random.default_rng(11)
    for j in (1, 2, 3, 5):
        for t in rng.uniform(0, 1, 10):
            total = sum(eval_cardinal(j, t + i) for i in range(j + 1))
            assert abs(total - 1.0) < 1e-12


def test_cardinal_recursion_matches_exact_fraction_path():
    # float evaluation agrees with the exact Fraction evaluation
    rng = np.random.default_rng(19)
    for j in range(1, 7):
        for t in rng.uniform(0, j + 1, 20):
            ft = Fraction(t).limit_denominator(10**8)
            exact = eval_cardinal(j, ft)
            assert abs(eval_cardinal(j, float(ft)) - float(exact)) < 1e-12


def test_cardinal_inner_reduction_identity():
    # int Phi_p(t+j) dPhi_p(t) dt = dPhi_{2p+1}(p+1-j), odd in j
    for p in range(1, 6):
        dvals = cardinal_at_integers(2 * p + 1, 1)
        for j in range(-p, p + 1):
            quad = cardinal_inner(p, 0, 1, j)
            expect = float(dvals[p + 1 - j])
            assert abs(quad - expect) < 1e-13
            assert abs(quad + cardinal_inner(p, 0, 1, -j)) < 1e-13
        # mass-type reduction: int Phi_p(t+j) Phi_p(t) = Phi_{2p+1}(p+1-j)
        vals = cardinal_at_integers(2 * p + 1, 0)
        for j in range(-p, p + 1):
            assert abs(cardinal_inner(p, 0, 0, j) - float(vals[p + 1 - abs(j)])) < 1e-13


def test_cardinal_inner_examples():
    assert cardinal_inner(1, 0, 0, 0) == pytest.approx(2 / 3, abs=1e-14)
    assert cardinal_inner(2, 1, 1, 0) == pytest.approx(1.0, abs=1e-13)
    assert cardinal_inner(3, 0, 0, 5) == 0.0
    assert cardinal_inner(2, 1, 0, -4) == 0.0


def test_gauss_rule_exactness():
    r1 = gauss_rule(1)
    x, w = r1.mapped(0.0, 2.0)
    assert x[0] == pytest.approx(1.0) and w[0] == pytest.approx(2.0)
    r2 = gauss_rule(2)
    x, w = r2.mapped(0.0, 1.0)
    assert np.dot(w, x**3) == pytest.approx(0.25, abs=1e-15)
    # per-piece integration of a shifted cardinal spline
    r3 = gauss_rule(3)
    total = 0.0
    # Phi_2(2t + 1/2) on [0,1]: breakpoints where 2t+1/2 hits 1, 2, and 3
    for a, b in [(0.0, 0.25), (0.25, 0.75), (0.75, 1.0)]:
        x, w = r3.mapped(a, b)
        total += np.dot(w, [eval_cardinal(2, 2 * t + 0.5) for t in x])
    # symbolic value: (1/2) * int_{1/2}^{5/2} Phi_2 = (1/2)(1 - 2*int_0^{1/2})
    exact = 0.5 * (1 - 2 * float(_int_phi2_0_to_half()))
    assert total == pytest.approx(exact, abs=1e-14)


def _int_phi2_0_to_half():
    # int_0^{1/2} t^2/2 dt = 1/48
    return Fraction(1, 48)


def test_fast_tables_match_recursive_evaluation():
    rng = np.random.default_rng(0)
    for p in (1, 2, 3, 4):
        space = SplineSpace(degree=p, intervals=9, interval=(0.0, 2.0))
        for t in rng.uniform(0.0, 2.0, 20):
            first, D = basis_all(space.knots, p, t, min(p, 2))
            for a in range(p + 1):
                for r in range(min(p, 2) + 1):
                    ref = bspline_one(space.knots, p, first + a, t, r)
                    assert abs(D[r, a] - ref) < 1e-11 * max(1.0, abs(ref))


def test_element_tables_shapes_and_quadrature():
    space = SplineSpace(degree=2, intervals=5)
    tab = element_tables(space, 3, nderiv=1)
    assert tab.values.shape == (5, 2, 3, 3)
    # integrating the basis sum recovers the interval length
    total = float(np.einsum("eq,eqa->", tab.weights, tab.values[:, 0]))
    assert total == pytest.approx(1.0, abs=1e-13)


def test_top_order_derivative_left_convention():
    # order-p derivative is piecewise constant; at an interior knot the
    # left-limit convention applies
    space = SplineSpace(degree=2, intervals=4)
    j = 2
    at_knot = eval_bspline(space, j, 0.5, deriv_order=2)
    just_left = eval_bspline(space, j, 0.5 - 1e-9, deriv_order=2)
    assert at_knot == pytest.approx(just_left, rel=1e-6)


def test_c0_interface_space():
    space = SplineSpace(degree=2, intervals=8, c0_points=(0.5,))
    assert space.full_dimension == 11  # one extra knot raises the dimension
    with pytest.raises(ValueError):
        SplineSpace(degree=2, intervals=8, c0_points=(0.3,))
