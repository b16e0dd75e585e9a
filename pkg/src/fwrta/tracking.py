"""Velocity-tracking flight controller via backstepping.

A desired acceleration drives the velocity error down exponentially; it
is converted through the inverse acceleration map into ``(A_T, Q)`` and
a desired turn rate.  The roll rate is then synthesized from a scalar
closed-form program that enforces decay of a composite certificate
containing the turn-rate gap, which makes the commanded turn realizable
through rolling.

The rate coefficients of the turn-rate pair ("lengthy calculation") are
obtained by forward-mode dual numbers: the turn rate and its desired
counterpart are differentiated against state and time, then contracted
with the closed-loop drift; the roll-rate coefficient is read off the
roll row.  When the command being tracked is the model-free safe
velocity, its command derivative needs first derivatives of a filtered
quantity inside an outer derivative; a second-order forward pass over
position and time supplies those pieces exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np

from . import dual as dm
from .constraints import ConstraintSet
from .model import (
    AircraftState,
    ControlInput,
    GravityParam,
    accel_to_rates_raw,
    check_pitch,
    check_speed,
    euler_cols,
    f_vec,
    g_mat,
    turn_rate_raw,
    velocity,
    velocity_vec,
)
from .modelfree import ModelFreeParams, safe_velocity_terms


@dataclass(frozen=True)
class TrackingParams:
    """Position/velocity gains, turn-gap scale and certified decay rate."""

    K_r: np.ndarray
    K_v: np.ndarray
    mu: float
    lam: float

    def __post_init__(self):
        K_r = np.asarray(self.K_r, dtype=float)
        K_v = np.asarray(self.K_v, dtype=float)
        object.__setattr__(self, "K_r", K_r)
        object.__setattr__(self, "K_v", K_v)
        if not (self.mu > 0.0 and self.lam > 0.0):
            raise ValueError("mu and lam must be positive")
        for name, K in (("K_r", K_r), ("K_v", K_v)):
            if K.shape != (3, 3) or not np.allclose(K, K.T):
                raise ValueError(f"{name} must be a symmetric 3x3 matrix")
            if np.linalg.eigvalsh(K).min() <= 0.0:
                raise ValueError(f"{name} must be positive definite")
        if self.lam > np.linalg.eigvalsh(K_v).min() + 1e-12:
            raise ValueError("lam must not exceed the smallest eigenvalue of K_v")

    @classmethod
    def from_scalars(cls, k_r: float, k_v: float, mu: float, lam: float) -> "TrackingParams":
        return cls(k_r * np.eye(3), k_v * np.eye(3), mu, lam)


@dataclass(frozen=True)
class GoalTrajectory:
    """Goal position/velocity/acceleration as functions of time.

    The three callables must be mutually consistent derivatives; the
    derivative-based controller pieces assume the acceleration's own
    rate is zero (exact for the linear goal).
    """

    position: Callable[[float], np.ndarray]
    velocity: Callable[[float], np.ndarray]
    accel: Callable[[float], np.ndarray]

    @classmethod
    def linear(cls, v_g, r0=(0.0, 0.0, 0.0)) -> "GoalTrajectory":
        v = np.asarray(v_g, dtype=float)
        r0 = np.asarray(r0, dtype=float)
        zero = np.zeros(3)
        return cls(
            position=lambda t: r0 + v * t,
            velocity=lambda t: v.copy(),
            accel=lambda t: zero.copy(),
        )

    def eval(self, t: float):
        return (
            np.asarray(self.position(t), dtype=float),
            np.asarray(self.velocity(t), dtype=float),
            np.asarray(self.accel(t), dtype=float),
        )


def desired_velocity(r, t: float, goal: GoalTrajectory, params: TrackingParams) -> np.ndarray:
    """Goal velocity plus proportional position-error correction."""
    r_g, v_g, _ = goal.eval(float(t))
    return v_g + params.K_r @ (r_g - np.asarray(r, dtype=float))


class TrackContext:
    """State-side dual quantities shared by every command at one (x, t).

    Holds the 8-direction seeds, the dual velocity and rotation columns,
    the dual turn rate and the drift/input matrices of the dynamics.
    """

    __slots__ = ("state", "t", "parts", "v", "cols", "R_dual", "f", "G")

    def __init__(self, state: AircraftState, t: float, g: GravityParam):
        check_pitch(state.theta)
        check_speed(state.V_T)
        self.state = state
        self.t = t
        self.parts = dm.seed_state_time(state.as_array(), t)
        _, phi_d, theta_d, psi_d, V_T_d, _ = self.parts
        self.v = velocity_vec(theta_d, psi_d, V_T_d)
        self.cols = euler_cols(phi_d, theta_d, psi_d)
        self.R_dual = turn_rate_raw(phi_d, theta_d, V_T_d, g.g_d)
        self.f = f_vec(state, g)
        self.G = g_mat(state)


class VelocityCommand(Protocol):
    """Velocity command ``v_c(r, t)`` with its closed-loop rate ``a_c(x, t)``."""

    def command(self, state: AircraftState, t: float) -> tuple:
        """Return ``(v_c, a_c)`` as plain arrays."""
        ...

    def command_dual(self, ctx: TrackContext) -> tuple:
        """Return ``(v_c, a_c)`` as dual vectors over the 8 state/time seeds."""
        ...


def _lift_goal(goal: GoalTrajectory, t):
    r_g, v_g, a_g = goal.eval(float(dm.value(t)))
    zero = np.zeros(3)
    return (
        dm.lift_path(r_g, v_g, a_g, t),
        dm.lift_path(v_g, a_g, zero, t),
        dm.lift_path(a_g, zero, zero, t),
    )


@dataclass(frozen=True)
class GoalCommand:
    """Track a goal trajectory: ``v_c = v_g + K_r (r_g - r)``."""

    goal: GoalTrajectory
    params: TrackingParams

    def command(self, state: AircraftState, t: float):
        r_g, v_g, a_g = self.goal.eval(t)
        v_c = v_g + self.params.K_r @ (r_g - state.r)
        a_c = a_g + self.params.K_r @ (v_g - velocity(state))
        return v_c, a_c

    def command_dual(self, ctx: TrackContext):
        r, _, _, _, _, td = ctx.parts
        r_g, v_g, a_g = _lift_goal(self.goal, td)
        K_r = self.params.K_r
        v_c = v_g + dm.matvec(K_r, r_g - r)
        a_c = a_g + dm.matvec(K_r, v_g - ctx.v)
        return v_c, a_c


_POS_TIME_TO_STATE = np.zeros((4, 8))
_POS_TIME_TO_STATE[0, 0] = _POS_TIME_TO_STATE[1, 1] = _POS_TIME_TO_STATE[2, 2] = 1.0
_POS_TIME_TO_STATE[3, 7] = 1.0


@dataclass(frozen=True)
class SafeVelocityCommand:
    """Track the model-free safe velocity built on the goal command."""

    goal: GoalTrajectory
    params: TrackingParams
    cset: ConstraintSet
    mf: ModelFreeParams

    def _pieces(self, r, t: float):
        """Value, Jacobian and Hessian of the safe velocity over (r, t)."""
        r2, t2 = dm.seed2_pos_time(r, t)
        r_g, v_g, _ = _lift_goal(self.goal, t2)
        v_d = v_g + dm.matvec(self.params.K_r, r_g - r2)
        v_s, _, _, _, _ = safe_velocity_terms(r2, t2, v_d, self.cset, self.mf)
        return v_s.v, v_s.j, v_s.h

    def command(self, state: AircraftState, t: float):
        val, J, _ = self._pieces(state.r, t)
        w = np.append(velocity(state), 1.0)
        return val, J @ w

    def command_dual(self, ctx: TrackContext):
        r, _, _, _, _, td = ctx.parts
        val, J, H = self._pieces(r.v, float(td.v))
        v = ctx.v
        v_c = dm.Dual(val.copy(), J @ _POS_TIME_TO_STATE)
        w = np.append(v.v, 1.0)
        w_eps = np.zeros((4, 8))
        w_eps[:3] = v.e
        a_c_eps = np.einsum("inm,n,ms->is", H, w, _POS_TIME_TO_STATE) + J @ w_eps
        a_c = dm.Dual(J @ w, a_c_eps)
        return v_c, a_c


def desired_accel(state: AircraftState, t: float, cmd: VelocityCommand, params: TrackingParams) -> np.ndarray:
    """Command rate plus half the weighted velocity error."""
    v_c, a_c = cmd.command(state, t)
    return a_c + 0.5 * params.K_v @ (v_c - velocity(state))


def accel_to_inputs(state: AircraftState, a_d):
    """Closed-form ``(A_T, Q, R_d)`` realizing a desired acceleration."""
    check_pitch(state.theta)
    check_speed(state.V_T)
    A_T, Q, R_d = accel_to_rates_raw(
        state.phi, state.theta, state.psi, state.V_T, np.asarray(a_d, dtype=float)
    )
    return float(A_T), float(Q), float(R_d)


def clf_V(state: AircraftState, t: float, cmd: VelocityCommand, params: TrackingParams, g: GravityParam) -> float:
    """Certificate value: velocity error energy plus scaled turn-rate gap."""
    v_c, _ = cmd.command(state, t)
    a_d = desired_accel(state, t, cmd, params)
    _, _, R_d = accel_to_inputs(state, a_d)
    R = turn_rate_raw(state.phi, state.theta, state.V_T, g.g_d)
    e_v = v_c - velocity(state)
    return 0.5 * float(e_v @ e_v) + (R - R_d) ** 2 / (2.0 * params.mu)


@dataclass
class TrackResult:
    """Assembled input with the certificate diagnostics."""

    u: ControlInput
    V: float
    R_d: float
    residual: float
    v_c: np.ndarray
    a_c: np.ndarray
    a_P: float
    b_P: float


def _track_with(ctx: TrackContext, cmd: VelocityCommand, params: TrackingParams) -> TrackResult:
    state = ctx.state
    c0, c1, c2 = ctx.cols
    V_T_d = ctx.parts[4]
    v_c_d, a_c_d = cmd.command_dual(ctx)
    e_v_d = v_c_d - ctx.v
    a_d_d = a_c_d + dm.matvec(0.5 * params.K_v, e_v_d)
    A_T_d = dm.dot(c0, a_d_d)
    Q_d = -dm.dot(c2, a_d_d) / V_T_d
    R_d_d = dm.dot(c1, a_d_d) / V_T_d
    R_dual = ctx.R_dual

    A_T = float(A_T_d.v)
    Q = float(Q_d.v)
    R_d = float(R_d_d.v)
    R = float(R_dual.v)
    e_v = np.asarray(e_v_d.v, dtype=float)
    gap = R_d - R

    # rate coefficients: total derivative along the loop with P = 0, and
    # the roll-row sensitivity as the P coefficient
    xdot0 = ctx.f + ctx.G @ np.array([A_T, 0.0, Q])
    f_R = float(R_dual.e[:7] @ xdot0) + float(R_dual.e[7])
    g_R = float(R_dual.e[3])
    f_Rd = float(R_d_d.e[:7] @ xdot0) + float(R_d_d.e[7])
    g_Rd = float(R_d_d.e[3])

    M_R = state.V_T * np.asarray(c1.v, dtype=float)
    K_v = params.K_v
    mu = params.mu
    lam = params.lam
    a_P = (
        -0.5 * float(e_v @ (K_v @ e_v))
        + float(e_v @ M_R) * gap
        + gap * (f_Rd - f_R) / mu
        + 0.5 * lam * (float(e_v @ e_v) + gap * gap / mu)
    )
    b_P = gap * (g_Rd - g_R) / mu
    P = solve_roll_qp(a_P, b_P)
    V = 0.5 * float(e_v @ e_v) + gap * gap / (2.0 * mu)
    return TrackResult(
        u=ControlInput(A_T, P, Q),
        V=V,
        R_d=R_d,
        residual=a_P + b_P * P,
        v_c=np.asarray(v_c_d.v, dtype=float),
        a_c=np.asarray(a_c_d.v, dtype=float),
        a_P=a_P,
        b_P=b_P,
    )


def roll_rate(state: AircraftState, t: float, cmd: VelocityCommand, params: TrackingParams, g: GravityParam) -> float:
    """Roll rate from the scalar closed-form decay program."""
    return track(state, t, cmd, params, g).u.P


def solve_roll_qp(a_P: float, b_P: float) -> float:
    """Minimum-magnitude roll rate with ``a_P + b_P P <= 0``."""
    if b_P == 0.0:
        return 0.0
    return min(0.0, -a_P) / b_P


def track(
    state: AircraftState,
    t: float,
    cmd: VelocityCommand,
    params: TrackingParams,
    g: GravityParam,
    ctx: TrackContext | None = None,
) -> TrackResult:
    """Full control input ``(A_T, P, Q)`` tracking the velocity command.

    Pass a prebuilt :class:`TrackContext` to share the state-side dual
    work when tracking several commands at the same ``(x, t)``.
    """
    if ctx is None:
        ctx = TrackContext(state, t, g)
    return _track_with(ctx, cmd, params)
