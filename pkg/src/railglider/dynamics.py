"""Tether-free glider dynamics as one callable, for trim, linearization
and cross-checks against the episode engine.

State vector (12): p (inertial), v_b (body), (phi, theta, psi), omega_b.
Input vector (5): u_a, u_e, u_r, u_f, u_m.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import aero
from .airframe import AircraftState, GliderInputs, Inertia, rigid_body_derivatives, total_wrench
from .frames import Attitude


@dataclass(frozen=True)
class GliderModel:
    geometry: aero.AeroGeometry
    coefficients: aero.CoefficientSet
    inertia: Inertia
    rho: float = 1.225

    @classmethod
    def default(cls) -> "GliderModel":
        geom = aero.AeroGeometry()
        return cls(geometry=geom,
                   coefficients=aero.derive_coefficients(geom, aero.BaseDerivatives()),
                   inertia=Inertia())


def glider_derivatives(x: np.ndarray, u: np.ndarray, model: GliderModel,
                       wind: np.ndarray | None = None, alpha_dot: float = 0.0,
                       brakes: bool = False) -> np.ndarray:
    """Full 12-state derivative with no tether attached.

    alpha_dot is the externally estimated rate used by the unsteady aero
    terms; design-time callers leave it at zero.
    """
    xs = AircraftState.from_array(x)
    if wind is None:
        wind = np.zeros(3)
    ad = aero.airdata(xs.v_b, xs.att, wind)
    ad = aero.AirData(w_a=ad.w_a, v_a=ad.v_a, alpha=ad.alpha, beta=ad.beta,
                      alpha_dot=alpha_dot)
    f_aero, m_aero = aero.aero_wrench(model.coefficients, model.geometry, ad,
                                      xs.omega_b, (u[0], u[1], u[2], u[3]),
                                      rho=model.rho, brakes=brakes)
    gi = GliderInputs(u_a=u[0], u_e=u[1], u_r=u[2], u_f=u[3], u_m=u[4])
    force, moment = total_wrench(xs.att, model.inertia, gi, f_aero, m_aero,
                                 np.zeros(3), np.zeros(3))
    return rigid_body_derivatives(xs, force, moment, model.inertia).as_array()


def level_state(airspeed: float, alpha: float) -> np.ndarray:
    """Wings-level state at the given airspeed and angle of attack.

    Pitch equals alpha, so the flight path is horizontal (gamma = 0); the
    body velocity components follow from rotating the inertial velocity.
    """
    att = Attitude(0.0, alpha, 0.0)
    x = np.zeros(12)
    x[2] = -50.0  # altitude only matters for logging; dynamics ignore position
    x[3] = airspeed * np.cos(alpha)
    x[5] = airspeed * np.sin(alpha)
    x[6:9] = att.as_array()
    return x
