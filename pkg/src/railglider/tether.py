"""Tether forces on the glider and their moment about the CG.

The line is modeled as a straight elastic element from the origin to the
aircraft.  Stiffness is inversely proportional to the deployed length, so a
longer line is softer; a slack line transmits nothing.  On top of the
tension the glider carries an aggregate line drag, proportional to deployed
length and apparent wind, and a constant share of the line weight.

The deployed length is initial_length + r_M1 * theta_M1: the winch angle
counts line paid out since the episode start, with the initial run of line
(origin to the launch position) already off the drum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .frames import Attitude, Vec3, body_to_inertial, inertial_to_body

#: deployed lengths below this are treated as a rigging error
L_MIN = 0.05


class ZeroLengthError(ValueError):
    """Deployed tether length below L_MIN; stiffness would blow up."""


@dataclass(frozen=True)
class TetherParams:
    youngs_modulus: float = 5.3e9    # E, Pa
    eps_break: float = 0.02         # breaking elongation
    drag_coeff: float = 1.0         # C_t
    diameter: float = 0.002         # d_t, m
    r_winch: float = 0.1            # r_M1, m
    initial_length: float = 2.5     # line off the drum at episode start, m
    attach_body: tuple[float, float, float] = (0.0, 0.0, 0.0)  # CG -> attach, m
    weight_half: float = 1.2 * 9.81 / 2.0  # vertical line load on glider, N

    def __post_init__(self) -> None:
        if self.youngs_modulus <= 0 or self.diameter <= 0 or self.r_winch <= 0:
            raise ValueError("E, d_t, r_M1 must be positive")
        if not 0.0 < self.eps_break < 1.0:
            raise ValueError("breaking elongation must lie in (0, 1)")
        if self.drag_coeff <= 0:
            raise ValueError("drag coefficient must be positive")
        if self.initial_length < 0:
            raise ValueError("initial length must be nonnegative")

    def deployed_length(self, theta_M1: float) -> float:
        return self.initial_length + self.r_winch * theta_M1

    def stiffness(self, length: float) -> float:
        """Axial stiffness E pi d_t² / (4 eps length), N/m."""
        return (self.youngs_modulus * math.pi * self.diameter ** 2
                / (4.0 * self.eps_break * length))


def tension_force(p: Vec3, theta_M1: float, tp: TetherParams) -> np.ndarray:
    """Elastic tension on the aircraft, inertial axes.

    Magnitude max(0, k(length) * (||p|| - length)) directed along -p.
    """
    p = np.asarray(p, dtype=float)
    length = tp.deployed_length(theta_M1)
    if length < L_MIN:
        raise ZeroLengthError(f"deployed length {length:.4f} m below {L_MIN}")
    dist = float(np.linalg.norm(p))
    if dist <= 0.0:
        return np.zeros(3)
    magnitude = max(0.0, tp.stiffness(length) * (dist - length))
    return -magnitude * p / dist


@dataclass(frozen=True)
class TetherWrench:
    force_body: np.ndarray    # total line force on the glider, body axes, N
    moment_body: np.ndarray   # moment about the CG, body axes, N m
    force_inertial: np.ndarray
    tension: float            # ||tension part||, the load-cell measurand, N


def tether_wrench(p: Vec3, theta_M1: float, w_a_body: Vec3, att: Attitude,
                  tp: TetherParams, rho: float = 1.225) -> TetherWrench:
    """Tension + drag + weight of the line, and the moment about the CG.

    w_a_body is the aircraft's apparent wind in body axes; the aggregate
    line drag (1/8) rho C_t d_t length ||W_a|| W_a is applied along it.
    The attitude converts the inertial tension/weight parts into body axes
    for the attachment-point moment.
    """
    p = np.asarray(p, dtype=float)
    w_a_body = np.asarray(w_a_body, dtype=float)
    f_tension = tension_force(p, theta_M1, tp)
    length = tp.deployed_length(theta_M1)
    w_norm = float(np.linalg.norm(w_a_body))
    f_drag_body = 0.125 * rho * tp.drag_coeff * tp.diameter * length * w_norm * w_a_body
    f_weight = np.array([0.0, 0.0, tp.weight_half])

    force_body = inertial_to_body(att, f_tension + f_weight) + f_drag_body
    moment_body = np.cross(np.asarray(tp.attach_body, dtype=float), force_body)
    force_inertial = f_tension + f_weight + body_to_inertial(att, f_drag_body)
    return TetherWrench(force_body=force_body, moment_body=moment_body,
                        force_inertial=force_inertial,
                        tension=float(np.linalg.norm(f_tension)))


def ground_axial_force(p: Vec3, tension: float) -> np.ndarray:
    """Line force at the ground station, inertial axes.

    Equal and opposite to the tension on the aircraft: a taut line pulls the
    ground hardware toward the aircraft.  Zero when slack.
    """
    p = np.asarray(p, dtype=float)
    dist = float(np.linalg.norm(p))
    if dist <= 0.0 or tension <= 0.0:
        return np.zeros(3)
    return tension * p / dist
