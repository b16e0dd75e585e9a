import math

import numpy as np
import pytest

from conftest import random_constraint_set
from fwrta.constraints import (
    BarrierEval,
    ConstraintSet,
    GeofencePlane,
    MovingObstacle,
    compose_h_p,
    grad_collision,
    h_collision,
    h_geofence,
    hdot_collision,
    hdot_geofence,
    softmax,
    softmin,
    softmin_weights,
)
from fwrta.errors import CoincidentPosition

TABLE_OBSTACLE = MovingObstacle.constant_velocity([-3048.0, 0.0, 0.0], [121.92, 161.32, 0.0], 30.0)
TABLE_PLANE_2 = GeofencePlane([0.0, 11901.0, 0.0], [-4.0, -1.0, 0.0], 15.0)


class TestCollision:
    def test_table_values_at_origin(self):
        assert h_collision(np.zeros(3), 0.0, TABLE_OBSTACLE) == pytest.approx(3018.0, abs=1e-9)

    def test_on_sphere_boundary(self):
        r = np.array([-3048.0 + 30.0, 0.0, 0.0])
        assert h_collision(r, 0.0, TABLE_OBSTACLE) == pytest.approx(0.0, abs=1e-12)

    def test_coincident_raises(self):
        with pytest.raises(CoincidentPosition):
            h_collision(np.array([-3048.0, 0.0, 0.0]), 0.0, TABLE_OBSTACLE)

    def test_rate_zero_relative_velocity(self):
        v_i = np.array([121.92, 161.32, 0.0])
        assert hdot_collision(np.zeros(3), 0.0, v_i, TABLE_OBSTACLE) == pytest.approx(0.0, abs=1e-12)

    def test_rate_projection_identity(self, rng):
        for _ in range(50):
            r = rng.uniform(-1000, 1000, size=3)
            t = float(rng.uniform(0, 10))
            n = grad_collision(r, t, TABLE_OBSTACLE)
            s = float(rng.uniform(-50, 50))
            v = TABLE_OBSTACLE.trajectory(t)[1] + s * n
            assert hdot_collision(r, t, v, TABLE_OBSTACLE) == pytest.approx(s, rel=1e-12, abs=1e-12)

    def test_rate_matches_finite_difference(self, rng):
        for _ in range(50):
            r0 = rng.uniform(-2000, 2000, size=3)
            v = rng.uniform(-100, 100, size=3)
            t0 = float(rng.uniform(0, 10))
            got = hdot_collision(r0, t0, v, TABLE_OBSTACLE)
            h = 1e-4
            fd = (
                h_collision(r0 + v * h, t0 + h, TABLE_OBSTACLE)
                - h_collision(r0 - v * h, t0 - h, TABLE_OBSTACLE)
            ) / (2 * h)
            assert got == pytest.approx(fd, rel=1e-6, abs=1e-8)


class TestGeofence:
    def test_table_plane_value(self):
        expected = 11901.0 / math.sqrt(17.0) - 15.0
        assert h_geofence(np.zeros(3), TABLE_PLANE_2) == pytest.approx(expected, rel=1e-14)

    def test_boundary(self):
        plane = TABLE_PLANE_2
        r = plane.point + plane.rho * plane.normal
        assert h_geofence(r, plane) == pytest.approx(0.0, abs=1e-10)

    def test_orthogonal_velocity(self, rng):
        n = TABLE_PLANE_2.normal
        for _ in range(20):
            v = rng.normal(size=3)
            v -= n * (n @ v)
            assert hdot_geofence(v, TABLE_PLANE_2) == pytest.approx(0.0, abs=1e-12)

    def test_normal_is_normalized(self):
        p = GeofencePlane([0, 0, 0], [3.0, 0.0, 4.0], 1.0)
        assert np.linalg.norm(p.normal) == pytest.approx(1.0, abs=1e-15)


class TestSoftmin:
    def test_single_element_identity(self):
        assert softmin([4.25], 0.007) == 4.25

    def test_two_equal_values(self):
        c, kappa = 3.7, 0.11
        assert softmin([c, c], kappa) == pytest.approx(c - math.log(2.0) / kappa, rel=1e-14)

    def test_bounds_property(self, rng):
        for _ in range(10_000):
            n = int(rng.integers(1, 9))
            vals = rng.uniform(-500, 3000, size=n)
            kappa = float(rng.uniform(0.002, 2.0))
            sm = softmin(list(vals), kappa)
            assert sm <= vals.min() + 1e-12
            assert sm >= vals.min() - math.log(n) / kappa - 1e-12

    def test_softmax_mirror(self, rng):
        for _ in range(2000):
            n = int(rng.integers(1, 9))
            vals = rng.uniform(-500, 3000, size=n)
            kappa = float(rng.uniform(0.002, 2.0))
            sx = softmax(list(vals), kappa)
            assert sx >= vals.max() - 1e-12
            assert sx <= vals.max() + math.log(n) / kappa + 1e-12

    def test_sharpness_limit(self, rng):
        for n in (2, 4, 16):
            vals = rng.uniform(-10, 10, size=n)
            err = vals.min() - softmin(list(vals), 1e3)
            assert 0.0 <= err <= math.log(16) / 1e3 + 1e-12

    def test_no_overflow_for_extreme_inputs(self):
        out = softmin([1e6, -1e6], 5.0)
        assert math.isfinite(out)
        assert out == pytest.approx(-1e6, abs=1e-9)

    def test_weights_sum_to_one(self, rng):
        for _ in range(200):
            vals = list(rng.uniform(-100, 100, size=int(rng.integers(1, 7))))
            _, w = softmin_weights(vals, float(rng.uniform(0.01, 1.0)))
            assert sum(w) == pytest.approx(1.0, abs=1e-12)
            assert all(x >= 0.0 for x in w)


class TestCompose:
    def test_single_member_identity(self):
        cset = ConstraintSet([TABLE_PLANE_2], kappa=0.007)
        out = compose_h_p(np.zeros(3), 0.0, cset)
        assert isinstance(out, BarrierEval)
        assert out.value == h_geofence(np.zeros(3), TABLE_PLANE_2)
        np.testing.assert_allclose(out.gradient_r, TABLE_PLANE_2.normal, atol=1e-15)
        assert out.weights == [1.0]

    def test_weights_sum(self, rng):
        for _ in range(100):
            r = rng.uniform(-500, 500, size=3)
            cset = random_constraint_set(rng, r)
            out = compose_h_p(r, float(rng.uniform(0, 20)), cset)
            assert sum(out.weights) == pytest.approx(1.0, abs=1e-12)

    def test_gradient_matches_finite_differences(self, rng):
        for _ in range(60):
            r = rng.uniform(-500, 500, size=3)
            t = float(rng.uniform(0, 20))
            cset = random_constraint_set(rng, r)
            out = compose_h_p(r, t, cset)
            h = 1e-4
            for i in range(3):
                dr = np.zeros(3)
                dr[i] = h
                fd = (compose_h_p(r + dr, t, cset).value - compose_h_p(r - dr, t, cset).value) / (2 * h)
                assert out.gradient_r[i] == pytest.approx(fd, rel=1e-6, abs=1e-8)
            fd_t = (compose_h_p(r, t + h, cset).value - compose_h_p(r, t - h, cset).value) / (2 * h)
            assert out.dt_partial == pytest.approx(fd_t, rel=1e-6, abs=1e-8)

    def test_geofence_only_time_invariant(self, rng):
        planes = [
            GeofencePlane(rng.uniform(-100, 100, size=3), rng.normal(size=3), 5.0) for _ in range(3)
        ]
        cset = ConstraintSet(planes, kappa=0.01)
        out = compose_h_p(np.array([4000.0, 0.0, 0.0]), 3.0, cset)
        assert out.dt_partial == 0.0

    def test_propagates_coincident(self):
        cset = ConstraintSet([TABLE_OBSTACLE, TABLE_PLANE_2], kappa=0.007)
        with pytest.raises(CoincidentPosition):
            compose_h_p(np.array([-3048.0, 0.0, 0.0]), 0.0, cset)


def test_constraint_set_validation():
    with pytest.raises(ValueError):
        ConstraintSet([], kappa=0.007)
    with pytest.raises(ValueError):
        ConstraintSet([TABLE_PLANE_2], kappa=0.0)
    with pytest.raises(ValueError):
        MovingObstacle.constant_velocity([0, 0, 0], [1, 1, 1], rho=-2.0)
    with pytest.raises(ValueError):
        GeofencePlane([0, 0, 0], [0.0, 0.0, 0.0], 1.0)
