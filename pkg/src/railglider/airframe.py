"""Rigid-body dynamics of the glider.

State: inertial position (Z down), body-axis velocity, ZYX Euler attitude,
body rates.  The product of inertia I_zx couples the roll and yaw moment
balances, so the angular accelerations come from a 2x2 linear solve; pitch
is decoupled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .frames import Attitude, Vec3, body_to_inertial, euler_rates, inertial_to_body

GRAVITY = 9.81


class SingularInertiaError(ValueError):
    """Inertia matrix is not positive definite."""


@dataclass(frozen=True)
class Inertia:
    """Mass and the nonzero inertia tensor entries (body axes), kg, kg m²."""

    m: float = 1.2
    I_xx: float = 0.0576
    I_yy: float = 0.103
    I_zz: float = 0.1598
    I_zx: float = -0.00275

    def __post_init__(self) -> None:
        if self.m <= 0.0:
            raise SingularInertiaError("mass must be positive")
        if min(self.I_xx, self.I_yy, self.I_zz) <= 0.0:
            raise SingularInertiaError("principal inertias must be positive")
        if self.I_xx * self.I_zz - self.I_zx ** 2 <= 0.0:
            raise SingularInertiaError("inertia matrix not positive definite")

    @property
    def weight(self) -> float:
        return self.m * GRAVITY


@dataclass(frozen=True)
class AircraftState:
    p: np.ndarray        # inertial position, m
    v_b: np.ndarray      # velocity in body axes, m/s
    att: Attitude
    omega_b: np.ndarray  # body rates, rad/s

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.p, self.v_b, self.att.as_array(), self.omega_b])

    @classmethod
    def from_array(cls, x: np.ndarray) -> "AircraftState":
        x = np.asarray(x, dtype=float)
        return cls(p=x[0:3].copy(), v_b=x[3:6].copy(),
                   att=Attitude(x[6], x[7], x[8]), omega_b=x[9:12].copy())

    def v_inertial(self) -> np.ndarray:
        return body_to_inertial(self.att, self.v_b)


@dataclass(frozen=True)
class InputLimits:
    surface: float = math.radians(20.0)  # aileron/elevator/rudder/flap, rad
    thrust_max: float = 9.0              # N


@dataclass(frozen=True)
class GliderInputs:
    """Surface deflections (rad) and thrust (N), clamped on construction."""

    u_a: float = 0.0
    u_e: float = 0.0
    u_r: float = 0.0
    u_f: float = 0.0
    u_m: float = 0.0

    @classmethod
    def clamped(cls, u_a: float, u_e: float, u_r: float, u_f: float,
                u_m: float, limits: InputLimits = InputLimits()) -> "GliderInputs":
        s = limits.surface
        return cls(u_a=min(max(u_a, -s), s),
                   u_e=min(max(u_e, -s), s),
                   u_r=min(max(u_r, -s), s),
                   u_f=min(max(u_f, -s), s),
                   u_m=min(max(u_m, 0.0), limits.thrust_max))

    def surfaces(self) -> tuple[float, float, float, float]:
        return (self.u_a, self.u_e, self.u_r, self.u_f)

    def as_array(self) -> np.ndarray:
        return np.array([self.u_a, self.u_e, self.u_r, self.u_f, self.u_m])


def total_wrench(att: Attitude, inertia: Inertia, u: GliderInputs,
                 aero_force: Vec3, aero_moment: Vec3,
                 tether_force_body: Vec3, tether_moment_body: Vec3
                 ) -> tuple[np.ndarray, np.ndarray]:
    """Sum of aero, weight, tether and thrust contributions, body axes."""
    weight_body = inertial_to_body(att, np.array([0.0, 0.0, inertia.weight]))
    thrust = np.array([u.u_m, 0.0, 0.0])
    force = np.asarray(aero_force, float) + weight_body + np.asarray(tether_force_body, float) + thrust
    moment = np.asarray(aero_moment, float) + np.asarray(tether_moment_body, float)
    return force, moment


@dataclass(frozen=True)
class StateDerivative:
    p_dot: np.ndarray
    v_b_dot: np.ndarray
    att_dot: np.ndarray      # (phi_dot, theta_dot, psi_dot)
    omega_b_dot: np.ndarray

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.p_dot, self.v_b_dot, self.att_dot, self.omega_b_dot])


def angular_accelerations(omega_b: Vec3, moment_b: Vec3, inertia: Inertia) -> np.ndarray:
    """Solve the moment balance for body angular accelerations.

    The roll and yaw rows share the I_zx product term, giving the 2x2 system
      [[I_xx, -I_zx], [-I_zx, I_zz]] [wx_dot, wz_dot]^T = [b_x, b_z]^T
    while the pitch row is decoupled.
    """
    wx, wy, wz = (float(w) for w in omega_b)
    mx, my, mz = (float(m) for m in moment_b)
    det = inertia.I_xx * inertia.I_zz - inertia.I_zx ** 2
    if det <= 0.0:
        raise SingularInertiaError("inertia matrix not positive definite")
    b_x = mx - inertia.I_zx * wx * wy + (inertia.I_yy - inertia.I_zz) * wy * wz
    b_z = mz - inertia.I_zx * wy * wz + (inertia.I_xx - inertia.I_yy) * wx * wy
    wx_dot = (inertia.I_zz * b_x + inertia.I_zx * b_z) / det
    wz_dot = (inertia.I_zx * b_x + inertia.I_xx * b_z) / det
    wy_dot = (my + inertia.I_zx * (wz ** 2 - wx ** 2)
              + (inertia.I_zz - inertia.I_xx) * wz * wx) / inertia.I_yy
    return np.array([wx_dot, wy_dot, wz_dot])


def rigid_body_derivatives(xs: AircraftState, force_b: Vec3, moment_b: Vec3,
                           inertia: Inertia) -> StateDerivative:
    """Time derivative of the full aircraft state for a given body wrench."""
    force_b = np.asarray(force_b, dtype=float)
    v_b_dot = force_b / inertia.m - np.cross(xs.omega_b, xs.v_b)
    omega_dot = angular_accelerations(xs.omega_b, moment_b, inertia)
    return StateDerivative(
        p_dot=body_to_inertial(xs.att, xs.v_b),
        v_b_dot=v_b_dot,
        att_dot=euler_rates(xs.att, xs.omega_b),
        omega_b_dot=omega_dot,
    )


def moment_residual(omega_b: Vec3, omega_dot: Vec3, moment_b: Vec3,
                    inertia: Inertia) -> np.ndarray:
    """Moment-equation residual for a candidate angular acceleration.

    Substitutes omega_dot back into the three moment balances; the result is
    zero (to rounding) when omega_dot solves them.  Kept as an independent
    check of angular_accelerations.
    """
    wx, wy, wz = (float(w) for w in omega_b)
    dwx, dwy, dwz = (float(w) for w in omega_dot)
    mx = (inertia.I_xx * dwx - inertia.I_zx * (dwz - wx * wy)
          - (inertia.I_yy - inertia.I_zz) * wy * wz)
    my = (inertia.I_yy * dwy - inertia.I_zx * (wz ** 2 - wx ** 2)
          - (inertia.I_zz - inertia.I_xx) * wz * wx)
    mz = (inertia.I_zz * dwz - inertia.I_zx * (dwx - wy * wz)
          - (inertia.I_xx - inertia.I_yy) * wx * wy)
    return np.array([mx, my, mz]) - np.asarray(moment_b, dtype=float)
