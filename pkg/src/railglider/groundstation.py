"""Winch and slide dynamics, and the takeoff mode switch.

Two motors: M1 drives the winch drum, M2 drives the slide along the rails
through a belt, so slide position is r_M2 * theta_M2.  Before takeoff the
glider rides the slide and its mass loads the belt; at takeoff it leaves
and the slide equation drops the aircraft mass and picks up the projected
line force instead.

The two modes use the slide-friction term exactly as modeled for each
phase, with a single power of r_M2 in the carried phase and r_M2 squared
afterwards.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .airframe import GRAVITY


class OperatingMode(enum.Enum):
    SLIDE_CARRIED = 1
    FREE_FLIGHT = 2


@dataclass(frozen=True)
class GroundStationParams:
    r_M1: float = 0.1       # winch drum radius, m
    r_M2: float = 0.1       # belt pulley radius, m
    J_M1: float = 0.08      # winch inertia, kg m²
    J_M2: float = 0.01      # belt drive inertia, kg m²
    beta_M1: float = 0.04   # winch viscous friction, kg m²/s
    beta_M2: float = 0.01   # belt viscous friction, kg m²/s
    m_slide: float = 9.0    # slide mass, kg
    beta_slide: float = 0.6 # slide rail friction, kg/s
    m_aircraft: float = 1.2
    rail_length: float = 5.0
    rail_width: float = 0.4

    def __post_init__(self) -> None:
        for name in ("r_M1", "r_M2", "J_M1", "J_M2", "beta_M1", "beta_M2",
                     "m_slide", "beta_slide", "m_aircraft", "rail_length",
                     "rail_width"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")

    @property
    def slide_inertia_carried(self) -> float:
        """Belt-side inertia with the glider aboard, J_M2 + (m_s + m) r_M2²."""
        return self.J_M2 + (self.m_slide + self.m_aircraft) * self.r_M2 ** 2

    @property
    def slide_inertia_free(self) -> float:
        """Belt-side inertia after takeoff, J_M2 + m_s r_M2²."""
        return self.J_M2 + self.m_slide * self.r_M2 ** 2


@dataclass(frozen=True)
class GroundStationState:
    theta_M1: float = 0.0
    theta_M1_dot: float = 0.0
    theta_M2: float = 0.0
    theta_M2_dot: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.theta_M1, self.theta_M1_dot,
                         self.theta_M2, self.theta_M2_dot])

    @classmethod
    def from_array(cls, x: np.ndarray) -> "GroundStationState":
        return cls(theta_M1=float(x[0]), theta_M1_dot=float(x[1]),
                   theta_M2=float(x[2]), theta_M2_dot=float(x[3]))


def winch_acceleration(theta_M1_dot: float, u_M1: float, tension: float,
                       gp: GroundStationParams) -> float:
    """Winch drum: theta_M1_ddot = (r_M1 ||F_t|| - beta_M1 theta_M1_dot + u_M1)/J_M1.

    Line tension always applies a paying-out torque.  Same in both modes.
    """
    return (gp.r_M1 * tension - gp.beta_M1 * theta_M1_dot + u_M1) / gp.J_M1


def slide_acceleration_carried(theta_M2_dot: float, u_M2: float, tension: float,
                               f_aero_x: float, gp: GroundStationParams) -> float:
    """Slide with the glider aboard.

    Tension brakes the slide, the glider's aero X force (rail direction)
    pushes it, and rail friction enters with a single r_M2 factor.
    """
    torque = (-gp.r_M2 * tension + gp.r_M2 * f_aero_x
              - gp.r_M2 * gp.beta_slide * theta_M2_dot
              - gp.beta_M2 * theta_M2_dot + u_M2)
    return torque / gp.slide_inertia_carried


def slide_acceleration_free(theta_M2_dot: float, u_M2: float, f_tether_x: float,
                            gp: GroundStationParams) -> float:
    """Slide after takeoff; the line force projected on the rails drives it."""
    torque = ((-gp.beta_slide * gp.r_M2 ** 2 - gp.beta_M2) * theta_M2_dot
              + gp.r_M2 * f_tether_x + u_M2)
    return torque / gp.slide_inertia_free


def gs_derivatives(mode: OperatingMode, xs: GroundStationState,
                   u_gs: tuple[float, float], tension: float,
                   f_tether_x: float, f_aero_x: float,
                   gp: GroundStationParams) -> np.ndarray:
    """d/dt (theta_M1, theta_M1_dot, theta_M2, theta_M2_dot).

    tension is the line tension magnitude; f_tether_x the inertial X
    component of the line force at the ground (free flight only); f_aero_x
    the inertial X component of the glider's aero force (carried only).
    """
    u_M1, u_M2 = u_gs
    acc_M1 = winch_acceleration(xs.theta_M1_dot, u_M1, tension, gp)
    if mode is OperatingMode.SLIDE_CARRIED:
        acc_M2 = slide_acceleration_carried(xs.theta_M2_dot, u_M2, tension,
                                            f_aero_x, gp)
    else:
        acc_M2 = slide_acceleration_free(xs.theta_M2_dot, u_M2, f_tether_x, gp)
    return np.array([xs.theta_M1_dot, acc_M1, xs.theta_M2_dot, acc_M2])


def takeoff_predicate(f_aero_z: float, m: float, g: float = GRAVITY) -> bool:
    """True once the vertical aero force exceeds the weight: -F_aZ > m g.

    f_aero_z is the inertial Z (down positive) component, so lift makes it
    negative.  The inequality is strict.
    """
    return -f_aero_z > m * g
