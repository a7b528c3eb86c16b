"""Glider aerodynamic model.

Three layers:

* geometry and raw lift-curve / input derivatives (panel-code outputs,
  tabulated per degree for the control surfaces),
* the derived-coefficient build-up that turns geometry plus raw slopes
  into the full set of stability derivatives,
* air data and the dimensional force/moment evaluation.

Sign conventions: the coefficient expansions give drag and lift as positive
magnitudes; the X_b force applies drag backwards and the Z_b force applies
lift upwards (negative Z_b), so that straight flight with positive C_L
produces F_Zb < 0.  Lateral force and all moments are used as written.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .frames import Attitude, Vec3, inertial_to_body

RAD_PER_DEG = math.pi / 180.0
DEG_PER_RAD = 180.0 / math.pi

#: airspeed below which the coefficient model is meaningless
V_MIN = 0.5


class InvalidGeometryError(ValueError):
    pass


class DegenerateAirspeedError(ValueError):
    """Airspeed below V_MIN: angles of attack/sideslip are undefined."""


@dataclass(frozen=True)
class AeroGeometry:
    """Planform geometry. Lengths m, areas m², angles dimensionless.

    v_tail and v_fin default to the values implied by the areas and arms;
    explicitly supplied values are checked against those to 1e-3 relative.
    """

    span: float = 1.68          # b, wingspan
    area_wing: float = 0.317    # S_w
    area_tail: float = 0.059    # S_t
    area_fin: float = 0.024     # S_f
    chord: float = 0.194        # c, wing mean chord
    chord_tail: float = 0.115   # c_t
    arm_tail: float = 0.658     # l_t, CG to tail aero center
    z_tail: float = 0.0         # z_t
    arm_fin: float = 0.657      # l_f
    z_fin: float = 0.1          # z_f, fin center above roll axis
    aspect_wing: float = 8.89   # AR
    aspect_tail: float = 4.94   # AR_t (kept for sensitivity studies)
    oswald: float = 0.8         # e
    taper: float = 2.35         # lambda
    x_ac: float = 0.25          # aero center, fraction of chord
    x_cg: float = 0.23          # CG, fraction of chord
    eta_tail: float = 0.9       # wing-tail velocity ratio
    eps_downwash: float = 0.203 # downwash derivative at the tail
    v_tail: float | None = None # horizontal tail volume S_t l_t / (S_w c)
    v_fin: float | None = None  # fin volume S_f l_f / (S_w b)

    def __post_init__(self) -> None:
        for name in ("span", "area_wing", "area_tail", "area_fin", "chord",
                     "chord_tail", "arm_tail", "arm_fin", "aspect_wing",
                     "aspect_tail", "taper"):
            if getattr(self, name) <= 0.0:
                raise InvalidGeometryError(f"{name} must be positive")
        if not 0.0 < self.oswald <= 1.0:
            raise InvalidGeometryError("oswald factor must lie in (0, 1]")
        if self.z_fin < 0.0 or self.z_tail < 0.0:
            raise InvalidGeometryError("z arms must be nonnegative")
        v_h = self.area_tail * self.arm_tail / (self.area_wing * self.chord)
        v_f = self.area_fin * self.arm_fin / (self.area_wing * self.span)
        if self.v_tail is None:
            object.__setattr__(self, "v_tail", v_h)
        elif abs(self.v_tail - v_h) > 1e-3 * abs(v_h):
            raise InvalidGeometryError(
                f"v_tail {self.v_tail} inconsistent with S_t l_t/(S_w c) = {v_h:.6f}")
        if self.v_fin is None:
            object.__setattr__(self, "v_fin", v_f)
        elif abs(self.v_fin - v_f) > 1e-3 * abs(v_f):
            raise InvalidGeometryError(
                f"v_fin {self.v_fin} inconsistent with S_f l_f/(S_w b) = {v_f:.6f}")


@dataclass(frozen=True)
class BaseDerivatives:
    """Raw aerodynamic derivatives as tabulated.

    Lift-curve slopes and the sideslip derivatives are per radian; the
    control-surface derivatives are per degree of deflection and are
    converted once inside derive_coefficients.
    """

    slope_wing: float = 4.81    # a_w, 1/rad
    slope_tail: float = 4.07    # a_t, 1/rad
    slope_fin: float = 3.29     # a_f, 1/rad
    c_Y_beta: float = -0.17     # side force per sideslip, 1/rad
    c_l_wing: float = -0.0055   # wing contribution to roll per sideslip, 1/rad
    c_n_beta: float = 0.0745    # weathervane stiffness, 1/rad
    c_L0_wing: float = 0.139    # wing lift at zero alpha
    c_L0_tail: float = 0.0
    c_d0_wing: float = 0.0115
    c_d0_tail: float = 0.0145
    # control-surface derivatives, per degree of deflection
    d_l_aileron: float = 0.0061
    d_n_aileron: float = -0.00068
    d_L_elevator: float = 0.048
    d_Y_rudder: float = 0.048
    d_L_flap: float = 0.015
    d_d_flap: float = 0.00066
    d_m_flap: float = -0.003
    d_L_brake: float = -0.015
    d_d_brake: float = 0.008
    d_m_brake: float = -0.001
    # constants absent from the derivative tables, kept configurable
    c_m0_extra: float = 0.0     # additional constant pitching moment
    c_m_fuselage: float = 0.0   # fuselage pitching-moment term

    def __post_init__(self) -> None:
        if min(self.slope_wing, self.slope_tail, self.slope_fin) <= 0.0:
            raise InvalidGeometryError("lift-curve slopes must be positive")
        if self.c_d0_wing <= 0.0 or self.c_d0_tail <= 0.0:
            raise InvalidGeometryError("parasite drag must be positive")


@dataclass(frozen=True)
class CoefficientSet:
    """Full stability-derivative set, everything per radian.

    alpha-dependent lift, drag and pitch coefficients are evaluated by the
    c_lift/c_drag/c_pitch methods; the remaining fields are the linear
    derivatives of the force/moment expansions.
    """

    # pieces of the alpha-dependent build-up
    c_L0_wing: float
    slope_wing: float
    slope_tail: float
    tail_eff: float        # a_t (1 - eps) S_t / S_w, tail lift per alpha
    eps_downwash: float
    area_ratio_tail: float
    induced_factor: float  # 1 / (pi e AR)
    c_d0_wing: float
    c_d0_tail: float
    arm_cg_ac: float       # x_cg - x_ac, fraction of chord
    arm_tail_c: float      # l_t / c
    c_m_const: float       # constant part of the pitch coefficient

    # rate and sideslip derivatives
    c_Y_beta: float
    c_Y_p: float
    c_Y_r: float
    c_L_q: float
    c_L_alphadot: float
    c_l_beta: float        # fin contribution only, proportional to z_fin
    c_l_p: float
    c_l_r: float
    c_m_alpha: float
    c_m_q: float
    c_m_alphadot: float
    c_n_beta: float
    c_n_p: float
    c_n_r: float

    # input derivatives (per radian)
    c_l_ua: float
    c_n_ua: float
    c_L_ue: float
    c_m_ue: float
    c_Y_ur: float
    c_n_ur: float
    c_l_ur: float
    c_L_uf: float
    c_d_uf: float
    c_m_uf: float
    c_L_ub: float
    c_d_ub: float
    c_m_ub: float

    def __post_init__(self) -> None:
        vals = [getattr(self, f.name) for f in self.__dataclass_fields__.values()]  # type: ignore[attr-defined]
        if not all(math.isfinite(v) for v in vals):
            raise InvalidGeometryError("non-finite derived coefficient")
        if self.c_l_p >= 0.0:
            raise InvalidGeometryError("roll damping c_l_p must be negative")
        if self.c_m_q >= 0.0:
            raise InvalidGeometryError("pitch damping c_m_q must be negative")
        if self.c_n_r >= 0.0:
            raise InvalidGeometryError("yaw damping c_n_r must be negative")

    # -- alpha-dependent coefficients -------------------------------------

    def c_lift_wing(self, alpha: float) -> float:
        return self.c_L0_wing + self.slope_wing * alpha

    def c_lift_tail(self, alpha: float) -> float:
        """Tail lift referred to wing area (downwash-reduced alpha)."""
        return self.tail_eff * alpha

    def c_lift(self, alpha: float) -> float:
        return self.c_lift_wing(alpha) + self.c_lift_tail(alpha)

    def c_drag(self, alpha: float) -> float:
        """Parasite plus induced drag of wing and tail."""
        cd_wing = self.c_d0_wing + self.c_lift_wing(alpha) ** 2 * self.induced_factor
        c_lt_own = self.slope_tail * alpha * (1.0 - self.eps_downwash)
        cd_tail = self.c_d0_tail + c_lt_own ** 2 * self.induced_factor
        return cd_wing + self.area_ratio_tail * cd_tail

    def c_pitch(self, alpha: float) -> float:
        return self.c_m_const + self.c_m_alpha * alpha


def derive_coefficients(geom: AeroGeometry, base: BaseDerivatives) -> CoefficientSet:
    """Build the full derivative set from geometry and raw slopes."""
    s_ratio_t = geom.area_tail / geom.area_wing
    s_ratio_f = geom.area_fin / geom.area_wing
    arm_fin_b = geom.arm_fin / geom.span
    arm_tail_c = geom.arm_tail / geom.chord
    arm_cg_ac = geom.x_cg - geom.x_ac
    eps = geom.eps_downwash
    v_h = float(geom.v_tail)  # type: ignore[arg-type]
    v_f = float(geom.v_fin)   # type: ignore[arg-type]

    tail_eff = base.slope_tail * (1.0 - eps) * s_ratio_t
    c_L_alpha = base.slope_wing + tail_eff

    c_Y_p = -2.0 * base.slope_fin * geom.area_fin * geom.z_fin / (geom.area_wing * geom.span)
    c_Y_r = 2.0 * base.slope_fin * geom.area_fin * geom.arm_fin / (geom.area_wing * geom.span)

    c_L_q = (base.slope_wing * (0.5 + 2.0 * abs(arm_cg_ac))
             - 2.0 * base.slope_tail * geom.eta_tail * s_ratio_t * (arm_tail_c - geom.x_cg))
    c_L_alphadot = 2.0 * base.slope_tail * v_h * eps

    # sideslip roll moment comes from the fin side force above the roll axis;
    # the tabulated wing term is an XFLR5 output the expansion does not use
    c_l_beta = -2.0 * base.slope_fin * geom.area_fin * geom.z_fin / (geom.area_wing * geom.span)
    c_l_p = -0.5 * c_L_alpha * (1.0 + 3.0 * geom.taper) / (12.0 * (1.0 + geom.taper))
    c_l_r = c_Y_r * geom.eta_tail

    # pitch: wing slope times (x_cg - x_ac) plus tail slope times its arm
    c_m_alpha = (base.slope_wing * arm_cg_ac
                 - tail_eff * (arm_tail_c - arm_cg_ac))
    c_m_const = base.c_L0_wing * arm_cg_ac + base.c_m_fuselage + base.c_m0_extra
    c_m_q = (-2.0 * base.slope_tail * v_h * arm_tail_c
             - 2.0 * c_L_alpha * (geom.x_cg - 0.5) ** 2)
    c_m_alphadot = -2.0 * base.slope_tail * eps * v_h * arm_tail_c

    c_n_p = 2.0 * c_Y_p * arm_fin_b
    c_n_r = -2.0 * base.slope_fin * v_f * geom.eta_tail * arm_fin_b

    # control surfaces: convert per-degree table entries to per-radian
    c_L_ue = base.d_L_elevator * DEG_PER_RAD
    c_m_ue = -c_L_ue * (arm_tail_c - arm_cg_ac * s_ratio_t)
    c_Y_ur = base.d_Y_rudder * DEG_PER_RAD
    c_n_ur = c_Y_ur * (1.0 / s_ratio_f) * v_f

    return CoefficientSet(
        c_L0_wing=base.c_L0_wing,
        slope_wing=base.slope_wing,
        slope_tail=base.slope_tail,
        tail_eff=tail_eff,
        eps_downwash=eps,
        area_ratio_tail=s_ratio_t,
        induced_factor=1.0 / (math.pi * geom.oswald * geom.aspect_wing),
        c_d0_wing=base.c_d0_wing,
        c_d0_tail=base.c_d0_tail,
        arm_cg_ac=arm_cg_ac,
        arm_tail_c=arm_tail_c,
        c_m_const=c_m_const,
        c_Y_beta=base.c_Y_beta,
        c_Y_p=c_Y_p,
        c_Y_r=c_Y_r,
        c_L_q=c_L_q,
        c_L_alphadot=c_L_alphadot,
        c_l_beta=c_l_beta,
        c_l_p=c_l_p,
        c_l_r=c_l_r,
        c_m_alpha=c_m_alpha,
        c_m_q=c_m_q,
        c_m_alphadot=c_m_alphadot,
        c_n_beta=base.c_n_beta,
        c_n_p=c_n_p,
        c_n_r=c_n_r,
        c_l_ua=base.d_l_aileron * DEG_PER_RAD,
        c_n_ua=base.d_n_aileron * DEG_PER_RAD,
        c_L_ue=c_L_ue,
        c_m_ue=c_m_ue,
        c_Y_ur=c_Y_ur,
        c_n_ur=c_n_ur,
        c_l_ur=0.0,  # no roll-from-rudder data available
        c_L_uf=base.d_L_flap * DEG_PER_RAD,
        c_d_uf=base.d_d_flap * DEG_PER_RAD,
        c_m_uf=base.d_m_flap * DEG_PER_RAD,
        c_L_ub=base.d_L_brake * DEG_PER_RAD,
        c_d_ub=base.d_d_brake * DEG_PER_RAD,
        c_m_ub=base.d_m_brake * DEG_PER_RAD,
    )


@dataclass(frozen=True)
class AirData:
    """Apparent wind in body axes and the derived flow angles."""

    w_a: np.ndarray          # apparent wind, body axes, m/s
    v_a: float               # airspeed, m/s
    alpha: float             # angle of attack, rad
    beta: float              # sideslip, rad
    alpha_dot: float = 0.0   # finite-difference estimate, rad/s


def airdata(v_body: Vec3, att: Attitude, wind_inertial: Vec3,
            prev_alpha: float = 0.0, dt: float = 1.0,
            v_min: float = V_MIN) -> AirData:
    """Apparent wind W_a = R(att)^T W - v_body and the flow angles.

    alpha = arctan(W_a,Zb / W_a,Xb), beta = arcsin(W_a,Yb / ||W_a||);
    alpha_dot is the backward difference against prev_alpha over dt.

    Raises DegenerateAirspeedError when ||W_a|| < v_min.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    w_a = inertial_to_body(att, np.asarray(wind_inertial, dtype=float)) - np.asarray(v_body, dtype=float)
    v_a = float(np.linalg.norm(w_a))
    if v_a < v_min:
        raise DegenerateAirspeedError(f"airspeed {v_a:.3f} m/s below {v_min}")
    alpha = math.atan(w_a[2] / w_a[0]) if w_a[0] != 0.0 else math.copysign(math.pi / 2, w_a[2])
    beta = math.asin(max(-1.0, min(1.0, w_a[1] / v_a)))
    return AirData(w_a=w_a, v_a=v_a, alpha=alpha, beta=beta,
                   alpha_dot=(alpha - prev_alpha) / dt)


def aero_wrench(cs: CoefficientSet, geom: AeroGeometry, ad: AirData,
                omega_body: Vec3, surfaces: tuple[float, float, float, float],
                rho: float = 1.225, brakes: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Aerodynamic force and moment in body axes.

    surfaces = (u_a, u_e, u_r, u_f) in radians.  With brakes=True the flap
    channel derivatives are replaced by the aero-brake ones, so u_f then
    commands the brakes.
    """
    if ad.v_a < V_MIN:
        raise DegenerateAirspeedError(f"airspeed {ad.v_a:.3f} m/s below {V_MIN}")
    u_a, u_e, u_r, u_f = surfaces
    q_dyn = 0.5 * rho * ad.v_a ** 2
    wx, wy, wz = (float(w) for w in omega_body)
    p_hat = wx * geom.span / (2.0 * ad.v_a)
    q_hat = wy * geom.chord / (2.0 * ad.v_a)
    r_hat = wz * geom.span / (2.0 * ad.v_a)
    ad_hat = ad.alpha_dot * geom.chord / (2.0 * ad.v_a)

    c_L_uf, c_d_uf, c_m_uf = ((cs.c_L_ub, cs.c_d_ub, cs.c_m_ub) if brakes
                              else (cs.c_L_uf, cs.c_d_uf, cs.c_m_uf))

    c_drag = cs.c_drag(ad.alpha) + c_d_uf * u_f
    c_lift = (cs.c_lift(ad.alpha) + cs.c_L_q * q_hat + cs.c_L_alphadot * ad_hat
              + cs.c_L_ue * u_e + c_L_uf * u_f)
    c_side = (cs.c_Y_beta * ad.beta + cs.c_Y_p * p_hat + cs.c_Y_r * r_hat
              + cs.c_Y_ur * u_r)
    c_roll = (cs.c_l_beta * ad.beta + cs.c_l_p * p_hat + cs.c_l_r * r_hat
              + cs.c_l_ua * u_a + cs.c_l_ur * u_r)
    c_pitch = (cs.c_pitch(ad.alpha) + cs.c_m_q * q_hat + cs.c_m_alphadot * ad_hat
               + cs.c_m_ue * u_e + c_m_uf * u_f)
    c_yaw = (cs.c_n_beta * ad.beta + cs.c_n_p * p_hat + cs.c_n_r * r_hat
             + cs.c_n_ua * u_a + cs.c_n_ur * u_r)

    qs = q_dyn * geom.area_wing
    force = np.array([-qs * c_drag, qs * c_side, -qs * c_lift])
    moment = np.array([qs * geom.span * c_roll,
                       qs * geom.chord * c_pitch,
                       qs * geom.span * c_yaw])
    return force, moment
