"""Rigid-body attitude kinematics.

Frames follow the usual flight-mechanics convention: the inertial frame has
X along the rails, Z pointing down, Y completing the right-handed triad.
The body frame is attached to the aircraft (X out the nose, Z through the
belly).  Attitude is parameterised by Z-Y-X (yaw-pitch-roll) Euler angles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

Vec3 = np.ndarray

#: cos(theta) guard below which the Euler-rate map is treated as singular
GIMBAL_EPS = 1e-6


class GimbalSingularError(ValueError):
    """Pitch too close to +-90 deg for the Euler-rate kinematics."""


@dataclass(frozen=True)
class Attitude:
    """Z-Y-X Euler angles, radians."""

    phi: float    # roll
    theta: float  # pitch
    psi: float    # yaw

    def as_array(self) -> np.ndarray:
        return np.array([self.phi, self.theta, self.psi])


def rotation_body_to_inertial(att: Attitude) -> np.ndarray:
    """Direction cosine matrix mapping body components to inertial ones.

    Composition is Rz(psi) @ Ry(theta) @ Rx(phi); the returned matrix is
    orthonormal with determinant +1.
    """
    cphi, sphi = math.cos(att.phi), math.sin(att.phi)
    cth, sth = math.cos(att.theta), math.sin(att.theta)
    cpsi, spsi = math.cos(att.psi), math.sin(att.psi)
    return np.array([
        [cth * cpsi, sphi * sth * cpsi - cphi * spsi, cphi * sth * cpsi + sphi * spsi],
        [cth * spsi, sphi * sth * spsi + cphi * cpsi, cphi * sth * spsi - sphi * cpsi],
        [-sth,       sphi * cth,                      cphi * cth],
    ])


def body_to_inertial(att: Attitude, v_body: Vec3) -> Vec3:
    return rotation_body_to_inertial(att) @ np.asarray(v_body, dtype=float)


def inertial_to_body(att: Attitude, v_inertial: Vec3) -> Vec3:
    return rotation_body_to_inertial(att).T @ np.asarray(v_inertial, dtype=float)


def euler_rates(att: Attitude, omega_body: Vec3) -> np.ndarray:
    """Euler-angle rates produced by a body angular velocity.

    Returns (phi_dot, theta_dot, psi_dot).  The roll-rate line carries the
    cos(phi) factor required for consistency with direction-cosine
    propagation of the same angular velocity.

    Raises GimbalSingularError when |cos(theta)| <= 1e-6.
    """
    wx, wy, wz = (float(c) for c in omega_body)
    cth = math.cos(att.theta)
    if abs(cth) <= GIMBAL_EPS:
        raise GimbalSingularError(
            f"euler rates undefined near theta = +-pi/2 (cos theta = {cth:.2e})")
    sphi, cphi = math.sin(att.phi), math.cos(att.phi)
    tth = math.tan(att.theta)
    phi_dot = wx + (wy * sphi + wz * cphi) * tth
    theta_dot = wy * cphi - wz * sphi
    psi_dot = (wy * sphi + wz * cphi) / cth
    return np.array([phi_dot, theta_dot, psi_dot])


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    w = math.fmod(a + math.pi, 2.0 * math.pi)
    if w <= 0.0:
        w += 2.0 * math.pi
    return w - math.pi
