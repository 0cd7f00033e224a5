import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cbtree.field_recursion import (
    FieldAssignment,
    child_to_parent,
    critical_curve,
    interval_check,
    iterate_ti_map,
    phase_predicate,
    propagate_inward,
    ti_fixed_points,
    ti_map,
)
from cbtree.model import ModelParams
from cbtree.topology import build_tree

TWO_FIVE = ModelParams.from_thetas(5.0, 2.0)

moderate = st.floats(min_value=-8.0, max_value=8.0, allow_nan=False)


def cubic_roots_oracle(theta: float, theta1: float) -> list[float]:
    """Independent root finder for the constant-field polynomial."""
    coeffs = [theta, 2 * theta1 - theta1**2 * theta, theta1**2 * theta - 2 * theta1, -theta]
    roots = np.roots(coeffs)
    real = [float(r.real) for r in roots if abs(r.imag) < 1e-9 and r.real > 0]
    return sorted(real)


class TestChildToParent:
    def test_zero_fields_map_to_zero(self):
        for params in (TWO_FIVE, ModelParams(J=-1.2, J1=0.7, beta=3.0)):
            assert child_to_parent(params, 0.0, 0.0) == pytest.approx(0.0, abs=1e-15)

    def test_fixed_point_residual(self):
        fps = ti_fixed_points(TWO_FIVE)
        h3 = fps.h3
        assert child_to_parent(TWO_FIVE, h3, h3) == pytest.approx(h3, abs=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(moderate, moderate)
    def test_antisymmetry(self, hy, hz):
        got = child_to_parent(TWO_FIVE, hy, hz)
        assert child_to_parent(TWO_FIVE, -hy, -hz) == pytest.approx(-got, abs=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(moderate, moderate, st.floats(-4, 4), st.floats(-4, 4))
    def test_matches_theta_form(self, hy, hz, bj, bj1):
        params = ModelParams(J=bj, J1=bj1, beta=1.0)
        th, th1 = params.theta_exp, params.theta1_exp
        uy, uz = math.exp(2 * hy), math.exp(2 * hz)
        num = th1 * th1 * th * uy * uz + th1 * (uy + uz) + th
        den = th * uy * uz + th1 * (uy + uz) + th1 * th1 * th
        expected = 0.5 * math.log(num / den)
        assert child_to_parent(params, hy, hz) == pytest.approx(expected, abs=1e-12)

    def test_symmetric_in_children(self):
        assert child_to_parent(TWO_FIVE, 0.3, -0.9) == pytest.approx(
            child_to_parent(TWO_FIVE, -0.9, 0.3), abs=1e-14
        )

    def test_overflow_safe(self):
        params = ModelParams(J=1.0, J1=1.0, beta=500.0)
        out = child_to_parent(params, 900.0, 900.0)
        assert math.isfinite(out)

    def test_broadcasts(self):
        hy = np.array([0.0, 0.5, -0.5])
        out = child_to_parent(TWO_FIVE, hy, hy)
        assert out.shape == (3,)
        assert out[0] == pytest.approx(0.0, abs=1e-15)
        assert out[1] == pytest.approx(child_to_parent(TWO_FIVE, 0.5, 0.5))


class TestPropagateInward:
    def test_fixed_point_boundary_stays_constant(self):
        tree = build_tree(3, "full")
        fps = ti_fixed_points(TWO_FIVE)
        fields = propagate_inward(tree, TWO_FIVE, fps.h3)
        assert np.allclose(fields.h_array, fps.h3, atol=1e-12)

    def test_zero_boundary_stays_zero(self):
        tree = build_tree(3, "half")
        fields = propagate_inward(tree, TWO_FIVE, 0.0)
        assert np.allclose(fields.h_array, 0.0, atol=1e-14)

    def test_interval_containment(self):
        tree = build_tree(3, "full")
        fps = ti_fixed_points(TWO_FIVE)
        rng = np.random.default_rng(31)
        boundary = rng.uniform(fps.h1, fps.h3, tree.level_size(3))
        fields = propagate_inward(tree, TWO_FIVE, boundary)
        assert np.all(fields.h_array >= fps.h1 - 1e-12)
        assert np.all(fields.h_array <= fps.h3 + 1e-12)

    def test_interior_satisfies_recursion(self):
        tree = build_tree(2, "full")
        rng = np.random.default_rng(13)
        fields = propagate_inward(tree, TWO_FIVE, rng.uniform(-1, 1, 6))
        h = fields.h_array
        for x in tree.vertices_at(1):
            y, z = tree.children[x]
            assert h[x] == pytest.approx(child_to_parent(TWO_FIVE, h[y], h[z]), abs=1e-14)

    def test_root_rule_metadata(self):
        assert propagate_inward(build_tree(2, "full"), TWO_FIVE, 0.1).root_rule == "first_child_pair"
        assert propagate_inward(build_tree(2, "half"), TWO_FIVE, 0.1).root_rule is None

    def test_rejects_bad_boundary(self):
        tree = build_tree(2, "full")
        with pytest.raises(ValueError):
            propagate_inward(tree, TWO_FIVE, [0.1, 0.2])
        with pytest.raises(ValueError):
            propagate_inward(tree, TWO_FIVE, [math.nan] * 6)


class TestFieldAssignment:
    def test_u_accessor(self):
        tree = build_tree(1, "full")
        fields = FieldAssignment(tree, (0.0, 0.5, -0.5, 1.0))
        assert np.allclose(fields.u_array, np.exp([0.0, 1.0, -1.0, 2.0]))

    def test_validation(self):
        tree = build_tree(1, "full")
        with pytest.raises(ValueError):
            FieldAssignment(tree, (0.0, 0.0))
        with pytest.raises(ValueError):
            FieldAssignment(tree, (0.0, math.inf, 0.0, 0.0))


class TestTIFixedPoints:
    def test_two_five_against_root_oracle(self):
        fps = ti_fixed_points(TWO_FIVE)
        assert fps.regime == "three"
        oracle = cubic_roots_oracle(5.0, 2.0)
        assert len(oracle) == 3
        for got, want in zip((fps.u1, fps.u2, fps.u3), oracle):
            assert got == pytest.approx(want, abs=1e-10)
        # quadratic closed form at this point: (11 -+ sqrt(21)) / 10
        assert fps.u1 == pytest.approx((11 - math.sqrt(21)) / 10, abs=1e-12)
        assert fps.u3 == pytest.approx((11 + math.sqrt(21)) / 10, abs=1e-12)

    def test_root_product(self):
        fps = ti_fixed_points(TWO_FIVE)
        assert abs(fps.u1 * fps.u3 - 1.0) < 1e-12

    def test_residuals(self):
        fps = ti_fixed_points(TWO_FIVE)
        for u in (fps.u1, fps.u2, fps.u3):
            assert abs(ti_map(TWO_FIVE, u) - u) < 1e-10

    def test_degenerate_on_curve(self):
        fps = ti_fixed_points(ModelParams.from_thetas(4.0, 2.0))
        assert fps.regime == "degenerate"
        assert fps.u1 == fps.u2 == fps.u3 == 1.0

    @pytest.mark.parametrize("theta", [0.2, 1.0, 10.0, 100.0])
    def test_unique_below_sqrt3(self, theta):
        fps = ti_fixed_points(ModelParams.from_thetas(theta, 1.5))
        assert fps.regime == "unique"
        assert fps.u1 == fps.u2 == fps.u3 == 1.0

    def test_branch_accessor(self):
        fps = ti_fixed_points(TWO_FIVE)
        assert fps.branch("u3") == fps.u3
        with pytest.raises(ValueError):
            fps.branch("u4")

    def test_large_beta_stable(self):
        params = ModelParams(J=1.0, J1=1.0, beta=50.0)
        fps = ti_fixed_points(params)
        assert fps.regime == "three"
        assert math.isfinite(fps.h3)
        assert abs(fps.u1 * fps.u3 - 1.0) < 1e-12


class TestPhasePredicate:
    def test_examples(self):
        assert phase_predicate(TWO_FIVE) is True
        assert phase_predicate(ModelParams.from_thetas(10.0, math.sqrt(3.0))) is False
        assert phase_predicate(ModelParams.from_thetas(3.9, 2.0)) is False

    def test_agrees_with_root_count(self):
        rng = np.random.default_rng(41)
        for _ in range(200):
            theta1 = rng.uniform(1.2, 4.0)
            theta = rng.uniform(0.5, 8.0)
            if theta1 > math.sqrt(3.0):
                if abs(theta - 2 * theta1 / (theta1**2 - 3)) < 1e-6:
                    continue
            params = ModelParams.from_thetas(theta, theta1)
            assert phase_predicate(params) == (ti_fixed_points(params).regime == "three")


class TestCriticalCurve:
    def test_point_value(self):
        rows = critical_curve([2.0])
        t1, tc, j1b, jb = rows[0]
        assert (t1, tc) == (2.0, 4.0)
        assert j1b == pytest.approx(0.5 * math.log(2.0))
        assert jb == pytest.approx(0.5 * math.log(4.0))

    def test_monotone_decreasing_tail(self):
        grid = np.linspace(2.0, 50.0, 40)
        tcs = [row[1] for row in critical_curve(grid)]
        assert all(a > b for a, b in zip(tcs, tcs[1:]))
        assert tcs[-1] < 0.05

    def test_pole_guard(self):
        with pytest.raises(ValueError, match="pole"):
            critical_curve([math.sqrt(3.0) + 1e-15])


class TestIntervalCheck:
    def test_two_five(self):
        assert interval_check(TWO_FIVE, grid_size=64) is True

    def test_corners_are_fixed_points(self):
        fps = ti_fixed_points(TWO_FIVE)
        assert ti_map(TWO_FIVE, fps.u1) == pytest.approx(fps.u1, abs=1e-12)
        assert ti_map(TWO_FIVE, fps.u3) == pytest.approx(fps.u3, abs=1e-12)
        assert ti_map(TWO_FIVE, 1.0) == pytest.approx(1.0, abs=1e-14)

    def test_wrong_regime_rejected(self):
        with pytest.raises(ValueError, match="regime"):
            interval_check(ModelParams.from_thetas(1.0, 1.5))


class TestIterateTIMap:
    def test_unique_regime_converges_to_one(self):
        params = ModelParams.from_thetas(1.0, 1.5)
        res = iterate_ti_map(params, 7.0, tol=1e-13)
        assert res.converged
        assert res.u == pytest.approx(1.0, abs=1e-10)

    def test_three_regime_upper_attractor(self):
        res = iterate_ti_map(TWO_FIVE, 1.2, tol=1e-13)
        fps = ti_fixed_points(TWO_FIVE)
        assert res.converged
        assert abs(res.u - fps.u3) < 10 * 1e-13

    def test_stays_at_symmetric_point(self):
        res = iterate_ti_map(TWO_FIVE, 1.0)
        assert res.converged
        assert res.u == 1.0
        assert res.iterations == 1

    def test_nonconvergence_reported_not_raised(self):
        res = iterate_ti_map(TWO_FIVE, 1.2, tol=1e-13, max_iter=3)
        assert not res.converged

    def test_rejects_nonpositive_start(self):
        with pytest.raises(ValueError):
            iterate_ti_map(TWO_FIVE, 0.0)
