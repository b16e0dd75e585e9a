import numpy as np
import pytest

from fwrta.constraints import ConstraintSet, GeofencePlane, MovingObstacle
from fwrta.model import AircraftState, GravityParam


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture
def gravity():
    return GravityParam()


def random_state(rng, v_range=(50.0, 300.0), theta_max=1.2, phi_max=1.4, pos_scale=4000.0):
    return AircraftState(
        n=float(rng.uniform(-pos_scale, pos_scale)),
        e=float(rng.uniform(-pos_scale, pos_scale)),
        d=float(rng.uniform(-pos_scale, pos_scale)),
        phi=float(rng.uniform(-phi_max, phi_max)),
        theta=float(rng.uniform(-theta_max, theta_max)),
        psi=float(rng.uniform(-np.pi, np.pi)),
        V_T=float(rng.uniform(*v_range)),
    )


def random_constraint_set(rng, r_ref, kappa=None):
    """One moving obstacle plus two planes, all well clear of ``r_ref``."""
    r_ref = np.asarray(r_ref, dtype=float)
    direction = rng.normal(size=3)
    direction /= np.linalg.norm(direction)
    center = r_ref + direction * rng.uniform(800.0, 4000.0)
    obs = MovingObstacle.constant_velocity(
        center, rng.uniform(-150.0, 150.0, size=3), rho=rng.uniform(20.0, 80.0)
    )
    planes = []
    for _ in range(2):
        n = rng.normal(size=3)
        n /= np.linalg.norm(n)
        point = r_ref + n * rng.uniform(1000.0, 6000.0)
        # normal points from the plane back toward the reference point
        planes.append(GeofencePlane(point, -n, rng.uniform(0.0, 30.0)))
    if kappa is None:
        kappa = float(rng.uniform(0.004, 0.05))
    return ConstraintSet([obs] + planes, kappa=kappa)
