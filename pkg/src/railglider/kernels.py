"""Compiled episode engine.

One numba kernel advances a whole episode: gust filtering, both ground
motor servos, the flight regulator with its guidance loops, RK4 at the
plant step, the take-off handoff and touchdown interpolation.  The Python
modules stay the readable reference; this file mirrors their arithmetic
expression by expression so the two paths can be cross-checked, and exists
purely because a batch of 150 closed-loop episodes has to finish in tens
of seconds on one core.

Parameters arrive as flat namedtuples of floats built by pack_params from
the dataclass configuration, so the kernel never touches Python objects.
"""

from __future__ import annotations

import math
from collections import namedtuple

import numpy as np
from numba import njit

from .airframe import GRAVITY
from .config import EpisodeConfig
from .dynamics import GliderModel
from .flightcontrol import TrimPoint

# trajectory row layout (kept in sync with harness.CSV_COLUMNS)
LOG_WIDTH = 34

# A flight that never climbed past the arming altitude is still declared
# down once it sinks this far below the rail plane (m, Z down positive).
GROUND_GRACE = 0.6

# Consecutive control samples in firm line contact after which the payout
# ramp retires (mirrors the gscontrol module constants).  Contact is judged
# against a fraction of the hold target: the taut-tracking equilibrium sits
# essentially at the hold value itself, so sampling against the full value
# would straddle it and keep resetting the count.
RAMP_RETIRE_SAMPLES = 25
RAMP_RETIRE_FRACTION = 0.6

# How far (rad) the ramp's integrated position may trail the physical
# drum; keeps a momentary tension dip from commanding a violent brake
# back to a stale position (mirrors gscontrol.RAMP_BACKLASH).
RAMP_BACKLASH = 1.0

# episode status codes
ST_TIMEOUT = 0
ST_LANDED = 1
ST_DIVERGED = 2
ST_STALL = 3
ST_GIMBAL = 4
ST_LINE_OUT = 5

AeroPar = namedtuple("AeroPar", [
    "span", "chord", "area_wing", "v_min", "rho",
    "c_L0_wing", "slope_wing", "slope_tail", "tail_eff", "eps_downwash",
    "area_ratio_tail", "induced_factor", "c_d0_wing", "c_d0_tail",
    "c_m_const", "c_m_alpha",
    "c_Y_beta", "c_Y_p", "c_Y_r", "c_L_q", "c_L_alphadot",
    "c_l_beta", "c_l_p", "c_l_r", "c_m_q", "c_m_alphadot",
    "c_n_beta", "c_n_p", "c_n_r",
    "c_l_ua", "c_n_ua", "c_L_ue", "c_m_ue", "c_Y_ur", "c_n_ur", "c_l_ur",
    "c_L_uf", "c_d_uf", "c_m_uf", "c_L_ub", "c_d_ub", "c_m_ub",
])

BodyPar = namedtuple("BodyPar", [
    "m", "weight", "ixx", "iyy", "izz", "izx", "det",
])

TetherKPar = namedtuple("TetherKPar", [
    "k0", "drag_fac", "length0", "weight_half",
    "attach_x", "attach_y", "attach_z", "l_min",
])

GsKPar = namedtuple("GsKPar", [
    "r1", "r2", "j1", "b1", "b2", "b_slide",
    "inertia_carried", "inertia_free", "rail_angle", "half_rail",
])

CtlPar = namedtuple("CtlPar", [
    "slide_ref", "dth_launch", "dth_flight", "k_hat", "torque_lim",
    "kp_w", "kd_w", "ff_w", "kp_s", "kd_s",
    "payout_decay", "payout_learn", "tension_hold", "payout_cap",
    "reel_in_max", "detune_length", "detune_floor", "min_winch_ref",
    "k_gamma", "k_beta", "gamma_sat", "psi_blend", "wp_radius",
    "launch_flap", "landing_brake", "aim_ahead", "rate_ref_max",
    "surface_lim", "thrust_max", "u_e_launch", "alpha_trim",
    "climb_lo", "climb_hi",
])

SimPar = namedtuple("SimPar", [
    "dt", "ctrl_dt", "incidence", "stall_speed", "arm_alt",
    "amp", "nominal", "filt_a", "sigma_t", "mg",
])


def pack_params(cfg: EpisodeConfig, model: GliderModel, trim: TrimPoint,
                ) -> tuple[AeroPar, BodyPar, TetherKPar, GsKPar, CtlPar, SimPar]:
    cs = model.coefficients
    geom = model.geometry
    inr = model.inertia
    tp = cfg.tether
    gp = cfg.gs
    cc = cfg.gs_control
    gd = cfg.guidance

    ap = AeroPar(
        span=geom.span, chord=geom.chord, area_wing=geom.area_wing,
        v_min=0.5, rho=cfg.rho,
        c_L0_wing=cs.c_L0_wing, slope_wing=cs.slope_wing,
        slope_tail=cs.slope_tail, tail_eff=cs.tail_eff,
        eps_downwash=cs.eps_downwash, area_ratio_tail=cs.area_ratio_tail,
        induced_factor=cs.induced_factor, c_d0_wing=cs.c_d0_wing,
        c_d0_tail=cs.c_d0_tail, c_m_const=cs.c_m_const,
        c_m_alpha=cs.c_m_alpha,
        c_Y_beta=cs.c_Y_beta, c_Y_p=cs.c_Y_p, c_Y_r=cs.c_Y_r,
        c_L_q=cs.c_L_q, c_L_alphadot=cs.c_L_alphadot,
        c_l_beta=cs.c_l_beta, c_l_p=cs.c_l_p, c_l_r=cs.c_l_r,
        c_m_q=cs.c_m_q, c_m_alphadot=cs.c_m_alphadot,
        c_n_beta=cs.c_n_beta, c_n_p=cs.c_n_p, c_n_r=cs.c_n_r,
        c_l_ua=cs.c_l_ua, c_n_ua=cs.c_n_ua, c_L_ue=cs.c_L_ue,
        c_m_ue=cs.c_m_ue, c_Y_ur=cs.c_Y_ur, c_n_ur=cs.c_n_ur,
        c_l_ur=cs.c_l_ur, c_L_uf=cs.c_L_uf, c_d_uf=cs.c_d_uf,
        c_m_uf=cs.c_m_uf, c_L_ub=cs.c_L_ub, c_d_ub=cs.c_d_ub,
        c_m_ub=cs.c_m_ub,
    )
    bp = BodyPar(
        m=inr.m, weight=inr.weight, ixx=inr.I_xx, iyy=inr.I_yy,
        izz=inr.I_zz, izx=inr.I_zx, det=inr.I_xx * inr.I_zz - inr.I_zx ** 2,
    )
    tk = TetherKPar(
        k0=tp.youngs_modulus * math.pi * tp.diameter ** 2 / (4.0 * tp.eps_break),
        drag_fac=0.125 * cfg.rho * tp.drag_coeff * tp.diameter,
        length0=tp.initial_length, weight_half=tp.weight_half,
        attach_x=tp.attach_body[0], attach_y=tp.attach_body[1],
        attach_z=tp.attach_body[2], l_min=0.05,
    )
    gk = GsKPar(
        r1=gp.r_M1, r2=gp.r_M2, j1=gp.J_M1, b1=gp.beta_M1, b2=gp.beta_M2,
        b_slide=gp.beta_slide, inertia_carried=gp.slide_inertia_carried,
        inertia_free=gp.slide_inertia_free,
        rail_angle=gp.rail_length / gp.r_M2, half_rail=gp.rail_length / 2.0,
    )
    ct = CtlPar(
        slide_ref=cc.travel / cc.r_M2, dth_launch=cc.delta_theta_launch,
        dth_flight=cc.delta_theta_flight, k_hat=cc.k_hat,
        torque_lim=cc.torque_limit,
        kp_w=cc.winch_gains.k_p, kd_w=cc.winch_gains.k_d,
        ff_w=cc.winch_gains.friction_ff,
        kp_s=cc.slide_gains.k_p, kd_s=cc.slide_gains.k_d,
        payout_decay=cc.payout_decay, payout_learn=cc.payout_learn,
        tension_hold=cc.k_hat * cc.r_M1 * cc.delta_theta_flight,
        payout_cap=cc.payout_rate_max, reel_in_max=cc.reel_in_max,
        detune_length=cc.detune_length, detune_floor=cc.detune_floor,
        min_winch_ref=cc.min_winch_ref,
        k_gamma=gd.k_gamma, k_beta=gd.k_beta, gamma_sat=gd.gamma_sat,
        psi_blend=1.0 - math.exp(-cfg.control_dt / gd.psi_filter_tau),
        wp_radius=gd.waypoint_radius, launch_flap=gd.launch_flap,
        landing_brake=gd.landing_brake, aim_ahead=gd.landing_aim_ahead,
        rate_ref_max=gd.rate_ref_max,
        surface_lim=cfg.limits.surface, thrust_max=cfg.limits.thrust_max,
        u_e_launch=trim.u_e, alpha_trim=trim.alpha,
        climb_lo=gd.climb_speed_min, climb_hi=gd.climb_speed_full,
    )
    sp = SimPar(
        dt=cfg.dt, ctrl_dt=cfg.control_dt, incidence=cfg.slide_incidence,
        stall_speed=cfg.stall_speed, arm_alt=cfg.arm_altitude,
        amp=cfg.wind.gust_amplitude, nominal=cfg.wind.nominal_speed,
        filt_a=1.0 - math.exp(-2.0 * math.pi * cfg.wind.filter_cutoff
                              * cfg.control_dt),
        sigma_t=cfg.gs_control.sigma_tension, mg=inr.m * GRAVITY,
    )
    return ap, bp, tk, gk, ct, sp


@njit(cache=True)
def _rot_b2i(phi: float, theta: float, psi: float, r: np.ndarray) -> None:
    cphi, sphi = math.cos(phi), math.sin(phi)
    cth, sth = math.cos(theta), math.sin(theta)
    cpsi, spsi = math.cos(psi), math.sin(psi)
    r[0, 0] = cth * cpsi
    r[0, 1] = sphi * sth * cpsi - cphi * spsi
    r[0, 2] = cphi * sth * cpsi + sphi * spsi
    r[1, 0] = cth * spsi
    r[1, 1] = sphi * sth * spsi + cphi * cpsi
    r[1, 2] = cphi * sth * spsi - sphi * cpsi
    r[2, 0] = -sth
    r[2, 1] = sphi * cth
    r[2, 2] = cphi * cth


@njit(cache=True)
def _wrap(a: float) -> float:
    # float % is fmod plus the sign fix, so this matches frames.wrap_angle
    w = (a + math.pi) % (2.0 * math.pi)
    if w <= 0.0:
        w += 2.0 * math.pi
    return w - math.pi


@njit(cache=True)
def _aero_fm(va: float, alpha: float, beta: float, alpha_dot: float,
             wx: float, wy: float, wz: float,
             u_a: float, u_e: float, u_r: float, u_f: float,
             brakes: bool, ap: AeroPar, out: np.ndarray) -> None:
    """Body-axis force (out[0:3]) and moment (out[3:6]); zero below v_min."""
    if va < ap.v_min:
        for i in range(6):
            out[i] = 0.0
        return
    q_dyn = 0.5 * ap.rho * va * va
    p_hat = wx * ap.span / (2.0 * va)
    q_hat = wy * ap.chord / (2.0 * va)
    r_hat = wz * ap.span / (2.0 * va)
    ad_hat = alpha_dot * ap.chord / (2.0 * va)

    if brakes:
        c_L_uf, c_d_uf, c_m_uf = ap.c_L_ub, ap.c_d_ub, ap.c_m_ub
    else:
        c_L_uf, c_d_uf, c_m_uf = ap.c_L_uf, ap.c_d_uf, ap.c_m_uf

    cl_wing = ap.c_L0_wing + ap.slope_wing * alpha
    cd_wing = ap.c_d0_wing + cl_wing * cl_wing * ap.induced_factor
    c_lt_own = ap.slope_tail * alpha * (1.0 - ap.eps_downwash)
    cd_tail = ap.c_d0_tail + c_lt_own * c_lt_own * ap.induced_factor
    c_drag = cd_wing + ap.area_ratio_tail * cd_tail + c_d_uf * u_f
    c_lift = (cl_wing + ap.tail_eff * alpha + ap.c_L_q * q_hat
              + ap.c_L_alphadot * ad_hat + ap.c_L_ue * u_e + c_L_uf * u_f)
    c_side = (ap.c_Y_beta * beta + ap.c_Y_p * p_hat + ap.c_Y_r * r_hat
              + ap.c_Y_ur * u_r)
    c_roll = (ap.c_l_beta * beta + ap.c_l_p * p_hat + ap.c_l_r * r_hat
              + ap.c_l_ua * u_a + ap.c_l_ur * u_r)
    c_pitch = (ap.c_m_const + ap.c_m_alpha * alpha + ap.c_m_q * q_hat
               + ap.c_m_alphadot * ad_hat + ap.c_m_ue * u_e + c_m_uf * u_f)
    c_yaw = (ap.c_n_beta * beta + ap.c_n_p * p_hat + ap.c_n_r * r_hat
             + ap.c_n_ua * u_a + ap.c_n_ur * u_r)

    qs = q_dyn * ap.area_wing
    out[0] = -qs * c_drag
    out[1] = qs * c_side
    out[2] = -qs * c_lift
    out[3] = qs * ap.span * c_roll
    out[4] = qs * ap.chord * c_pitch
    out[5] = qs * ap.span * c_yaw


@njit(cache=True)
def _carried_aero(y: np.ndarray, windx: float, windy: float, windz: float,
                  u_a: float, u_e: float, u_r: float, u_f: float,
                  sp: SimPar, ap: AeroPar, gk: GsKPar,
                  rwork: np.ndarray, fm: np.ndarray) -> tuple[float, float]:
    """Aero wrench of the carried glider; returns (f_aero_X, f_aero_Z) inertial."""
    _rot_b2i(0.0, sp.incidence, 0.0, rwork)
    vx_in = gk.r2 * y[3]
    # apparent wind in body axes: R^T wind - R^T v_inertial
    wax = rwork[0, 0] * (windx - vx_in) + rwork[1, 0] * windy + rwork[2, 0] * windz
    way = rwork[0, 1] * (windx - vx_in) + rwork[1, 1] * windy + rwork[2, 1] * windz
    waz = rwork[0, 2] * (windx - vx_in) + rwork[1, 2] * windy + rwork[2, 2] * windz
    va = math.sqrt(wax * wax + way * way + waz * waz)
    if va < ap.v_min:
        return 0.0, 0.0
    if wax != 0.0:
        alpha = math.atan(waz / wax)
    else:
        alpha = math.copysign(math.pi / 2.0, waz)
    sinb = way / va
    if sinb > 1.0:
        sinb = 1.0
    elif sinb < -1.0:
        sinb = -1.0
    beta = math.asin(sinb)
    _aero_fm(va, alpha, beta, 0.0, 0.0, 0.0, 0.0, u_a, u_e, u_r, u_f,
             False, ap, fm)
    f_x = rwork[0, 0] * fm[0] + rwork[0, 1] * fm[1] + rwork[0, 2] * fm[2]
    f_z = rwork[2, 0] * fm[0] + rwork[2, 1] * fm[1] + rwork[2, 2] * fm[2]
    return f_x, f_z


@njit(cache=True)
def _carried_tension(y: np.ndarray, tk: TetherKPar, gk: GsKPar) -> float:
    px = gk.r2 * y[2] - gk.half_rail
    dist = abs(px)
    length = tk.length0 + gk.r1 * y[0]
    if length < tk.l_min or dist <= 0.0:
        return 0.0
    return max(0.0, tk.k0 / length * (dist - length))


@njit(cache=True)
def _deriv_carried(y: np.ndarray, u_m1: float, u_m2: float,
                   windx: float, windy: float, windz: float,
                   u_a: float, u_e: float, u_r: float, u_f: float,
                   sp: SimPar, ap: AeroPar, bp: BodyPar, tk: TetherKPar,
                   gk: GsKPar, rwork: np.ndarray, fm: np.ndarray,
                   dy: np.ndarray) -> None:
    """Mode-1 derivative: only the four ground-station entries move."""
    f_ax, _ = _carried_aero(y, windx, windy, windz, u_a, u_e, u_r, u_f,
                            sp, ap, gk, rwork, fm)
    tension = _carried_tension(y, tk, gk)
    dy[0] = y[1]
    dy[1] = (gk.r1 * tension - gk.b1 * y[1] + u_m1) / gk.j1
    dy[2] = y[3]
    dy[3] = (-gk.r2 * tension + gk.r2 * f_ax - gk.r2 * gk.b_slide * y[3]
             - gk.b2 * y[3] + u_m2) / gk.inertia_carried
    for i in range(4, 16):
        dy[i] = 0.0


@njit(cache=True)
def _deriv_free(y: np.ndarray, u_m1: float, u_m2: float,
                u_a: float, u_e: float, u_r: float, u_f: float, u_m: float,
                windx: float, windy: float, windz: float, alpha_dot: float,
                brakes: bool, ap: AeroPar, bp: BodyPar, tk: TetherKPar,
                gk: GsKPar, rwork: np.ndarray, fm: np.ndarray,
                dy: np.ndarray) -> int:
    """Mode-2 derivative of the full 16-state vector.

    Returns 0 on success, 1 on gimbal-lock proximity, 2 when the line runs
    off the drum (deployed length under the floor).
    """
    px, py, pz = y[4], y[5], y[6]
    vbx, vby, vbz = y[7], y[8], y[9]
    phi, theta, psi = y[10], y[11], y[12]
    wx, wy, wz = y[13], y[14], y[15]

    cth = math.cos(theta)
    if abs(cth) <= 1e-6:
        return 1
    _rot_b2i(phi, theta, psi, rwork)

    # apparent wind, body axes
    wax = rwork[0, 0] * windx + rwork[1, 0] * windy + rwork[2, 0] * windz - vbx
    way = rwork[0, 1] * windx + rwork[1, 1] * windy + rwork[2, 1] * windz - vby
    waz = rwork[0, 2] * windx + rwork[1, 2] * windy + rwork[2, 2] * windz - vbz
    va = math.sqrt(wax * wax + way * way + waz * waz)
    if va >= ap.v_min:
        if wax != 0.0:
            alpha = math.atan(waz / wax)
        else:
            alpha = math.copysign(math.pi / 2.0, waz)
        sinb = way / va
        if sinb > 1.0:
            sinb = 1.0
        elif sinb < -1.0:
            sinb = -1.0
        beta = math.asin(sinb)
        _aero_fm(va, alpha, beta, alpha_dot, wx, wy, wz,
                 u_a, u_e, u_r, u_f, brakes, ap, fm)
    else:
        for i in range(6):
            fm[i] = 0.0

    # tether: elastic tension, line drag, line weight
    length = tk.length0 + gk.r1 * y[0]
    if length < tk.l_min:
        return 2
    dist = math.sqrt(px * px + py * py + pz * pz)
    tension = 0.0
    ftx = 0.0
    fty = 0.0
    ftz = 0.0
    if dist > 0.0:
        tension = max(0.0, tk.k0 / length * (dist - length))
        ftx = -tension * px / dist
        fty = -tension * py / dist
        ftz = -tension * pz / dist
    wa_norm = va
    drag = tk.drag_fac * length * wa_norm
    # inertial (tension + line weight) rotated to body, plus body-axis drag
    tin_x, tin_y, tin_z = ftx, fty, ftz + tk.weight_half
    tb_x = rwork[0, 0] * tin_x + rwork[1, 0] * tin_y + rwork[2, 0] * tin_z + drag * wax
    tb_y = rwork[0, 1] * tin_x + rwork[1, 1] * tin_y + rwork[2, 1] * tin_z + drag * way
    tb_z = rwork[0, 2] * tin_x + rwork[1, 2] * tin_y + rwork[2, 2] * tin_z + drag * waz
    tm_x = tk.attach_y * tb_z - tk.attach_z * tb_y
    tm_y = tk.attach_z * tb_x - tk.attach_x * tb_z
    tm_z = tk.attach_x * tb_y - tk.attach_y * tb_x

    # total body wrench: aero + weight + tether + thrust
    f_x = fm[0] + rwork[2, 0] * bp.weight + tb_x + u_m
    f_y = fm[1] + rwork[2, 1] * bp.weight + tb_y
    f_z = fm[2] + rwork[2, 2] * bp.weight + tb_z
    m_x = fm[3] + tm_x
    m_y = fm[4] + tm_y
    m_z = fm[5] + tm_z

    # translational and rotational dynamics
    dy[4] = rwork[0, 0] * vbx + rwork[0, 1] * vby + rwork[0, 2] * vbz
    dy[5] = rwork[1, 0] * vbx + rwork[1, 1] * vby + rwork[1, 2] * vbz
    dy[6] = rwork[2, 0] * vbx + rwork[2, 1] * vby + rwork[2, 2] * vbz
    dy[7] = f_x / bp.m - (wy * vbz - wz * vby)
    dy[8] = f_y / bp.m - (wz * vbx - wx * vbz)
    dy[9] = f_z / bp.m - (wx * vby - wy * vbx)

    sphi, cphi = math.sin(phi), math.cos(phi)
    tth = math.tan(theta)
    dy[10] = wx + (wy * sphi + wz * cphi) * tth
    dy[11] = wy * cphi - wz * sphi
    dy[12] = (wy * sphi + wz * cphi) / cth

    b_x = m_x - bp.izx * wx * wy + (bp.iyy - bp.izz) * wy * wz
    b_z = m_z - bp.izx * wy * wz + (bp.ixx - bp.iyy) * wx * wy
    dy[13] = (bp.izz * b_x + bp.izx * b_z) / bp.det
    dy[15] = (bp.izx * b_x + bp.ixx * b_z) / bp.det
    dy[14] = (m_y + bp.izx * (wz * wz - wx * wx)
              + (bp.izz - bp.ixx) * wz * wx) / bp.iyy

    # ground station: winch follows tension, slide feels the line X pull
    dy[0] = y[1]
    dy[1] = (gk.r1 * tension - gk.b1 * y[1] + u_m1) / gk.j1
    f_line_x = 0.0
    if dist > 0.0 and tension > 0.0:
        f_line_x = tension * px / dist
    dy[2] = y[3]
    dy[3] = ((-gk.b_slide * gk.r2 * gk.r2 - gk.b2) * y[3]
             + gk.r2 * f_line_x + u_m2) / gk.inertia_free
    return 0


@njit(cache=True)
def _free_tension(y: np.ndarray, tk: TetherKPar, gk: GsKPar) -> float:
    px, py, pz = y[4], y[5], y[6]
    dist = math.sqrt(px * px + py * py + pz * pz)
    length = tk.length0 + gk.r1 * y[0]
    if length < tk.l_min or dist <= 0.0:
        return 0.0
    return max(0.0, tk.k0 / length * (dist - length))


@njit(cache=True)
def _rk4_carried(y: np.ndarray, dt: float, u_m1: float, u_m2: float,
                 windx: float, windy: float, windz: float,
                 u_a: float, u_e: float, u_r: float, u_f: float,
                 sp: SimPar, ap: AeroPar, bp: BodyPar, tk: TetherKPar,
                 gk: GsKPar, rwork: np.ndarray, fm: np.ndarray,
                 k1: np.ndarray, k2: np.ndarray, k3: np.ndarray,
                 k4: np.ndarray, yt: np.ndarray) -> None:
    _deriv_carried(y, u_m1, u_m2, windx, windy, windz, u_a, u_e, u_r, u_f,
                   sp, ap, bp, tk, gk, rwork, fm, k1)
    for i in range(4):
        yt[i] = y[i] + 0.5 * dt * k1[i]
    _deriv_carried(yt, u_m1, u_m2, windx, windy, windz, u_a, u_e, u_r, u_f,
                   sp, ap, bp, tk, gk, rwork, fm, k2)
    for i in range(4):
        yt[i] = y[i] + 0.5 * dt * k2[i]
    _deriv_carried(yt, u_m1, u_m2, windx, windy, windz, u_a, u_e, u_r, u_f,
                   sp, ap, bp, tk, gk, rwork, fm, k3)
    for i in range(4):
        yt[i] = y[i] + dt * k3[i]
    _deriv_carried(yt, u_m1, u_m2, windx, windy, windz, u_a, u_e, u_r, u_f,
                   sp, ap, bp, tk, gk, rwork, fm, k4)
    for i in range(4):
        y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])


@njit(cache=True)
def _rk4_free(y: np.ndarray, dt: float, u7: np.ndarray,
              windx: float, windy: float, windz: float, alpha_dot: float,
              brakes: bool, ap: AeroPar, bp: BodyPar, tk: TetherKPar,
              gk: GsKPar, rwork: np.ndarray, fm: np.ndarray,
              k1: np.ndarray, k2: np.ndarray, k3: np.ndarray,
              k4: np.ndarray, yt: np.ndarray) -> int:
    flag = _deriv_free(y, u7[0], u7[1], u7[2], u7[3], u7[4], u7[5], u7[6],
                       windx, windy, windz, alpha_dot, brakes,
                       ap, bp, tk, gk, rwork, fm, k1)
    if flag != 0:
        return flag
    for i in range(16):
        yt[i] = y[i] + 0.5 * dt * k1[i]
    flag = _deriv_free(yt, u7[0], u7[1], u7[2], u7[3], u7[4], u7[5], u7[6],
                       windx, windy, windz, alpha_dot, brakes,
                       ap, bp, tk, gk, rwork, fm, k2)
    if flag != 0:
        return flag
    for i in range(16):
        yt[i] = y[i] + 0.5 * dt * k2[i]
    flag = _deriv_free(yt, u7[0], u7[1], u7[2], u7[3], u7[4], u7[5], u7[6],
                       windx, windy, windz, alpha_dot, brakes,
                       ap, bp, tk, gk, rwork, fm, k3)
    if flag != 0:
        return flag
    for i in range(16):
        yt[i] = y[i] + dt * k3[i]
    flag = _deriv_free(yt, u7[0], u7[1], u7[2], u7[3], u7[4], u7[5], u7[6],
                       windx, windy, windz, alpha_dot, brakes,
                       ap, bp, tk, gk, rwork, fm, k4)
    if flag != 0:
        return flag
    for i in range(16):
        y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    return 0


@njit(cache=True)
def run_episode_kernel(y: np.ndarray, n_ctrl: int, n_sub: int,
                       ap: AeroPar, bp: BodyPar, tk: TetherKPar, gk: GsKPar,
                       ct: CtlPar, sp: SimPar,
                       k_gain: np.ndarray, trim_red: np.ndarray,
                       trim_u: np.ndarray, waypoints: np.ndarray,
                       innovations: np.ndarray, t_noise: np.ndarray,
                       log: np.ndarray) -> tuple:
    """Advance one full episode in place.

    y is the 16-state vector [winch angle/rate, slide angle/rate, p, v_b,
    euler, omega]; log must have shape (n_ctrl + 1, LOG_WIDTH).  Returns
    (status, rows, t_takeoff, travel_takeoff, max_tension_carried,
    t_touchdown, td_x, td_y, td_speed).
    """
    rwork = np.empty((3, 3))
    fm = np.empty(6)
    k1 = np.empty(16)
    k2 = np.empty(16)
    k3 = np.empty(16)
    k4 = np.empty(16)
    yt = np.empty(16)
    u7 = np.zeros(7)
    filt = np.zeros(3)
    x_ref = np.empty(9)

    mode = 1
    status = ST_TIMEOUT
    t = 0.0
    t_takeoff = -1.0
    travel_takeoff = -1.0
    max_t_carried = 0.0
    t_touchdown = -1.0
    td_x = 0.0
    td_y = 0.0
    td_speed = 0.0
    rows = 0

    # controller state
    ref_winch = 0.0
    ref_winch_rate = 0.0
    prev_err_winch = 0.0
    taut_count = 0
    taut_ever = False
    ramp_alive = True
    ramp_pos = 0.0
    wp_index = 0
    n_wp = waypoints.shape[0]
    psi_filter = 0.0
    psi_filter_init = False
    alpha_prev = 0.0
    alpha_valid = False
    alpha_dot_hold = 0.0
    armed = False
    brakes = False

    for i in range(n_ctrl):
        # gust filter at the control rate, bounded to the gust amplitude
        if sp.amp > 0.0:
            for j in range(3):
                filt[j] += sp.filt_a * (innovations[i, j] - filt[j])
                if filt[j] > sp.amp:
                    filt[j] = sp.amp
                elif filt[j] < -sp.amp:
                    filt[j] = -sp.amp
        windx = -sp.nominal + filt[0]
        windy = filt[1]
        windz = filt[2]

        # measured tension
        if mode == 1:
            t_true = _carried_tension(y, tk, gk)
        else:
            t_true = _free_tension(y, tk, gk)
        if sp.sigma_t > 0.0:
            t_meas = max(0.0, t_true + sp.sigma_t * t_noise[i])
        else:
            t_meas = max(0.0, t_true)

        # ground-station servos
        ref_slide = ct.slide_ref
        if mode == 1:
            ref_winch = y[2] + ct.dth_launch
            err_w = ref_winch - y[0]
            derr = (err_w - prev_err_winch) / sp.ctrl_dt
            prev_err_winch = err_w
            u_m1 = ct.kp_w * err_w + ct.kd_w * derr + ct.ff_w * y[1]
        else:
            if t_meas > RAMP_RETIRE_FRACTION * ct.tension_hold:
                taut_count += 1
                taut_ever = True
            else:
                taut_count = 0
            if taut_count >= RAMP_RETIRE_SAMPLES:
                # taut and tracking: tension law owns the reference now
                ramp_alive = False
            ref_raw = (t_meas / ct.k_hat + y[0] * gk.r1) / gk.r1 - ct.dth_flight
            if ramp_alive:
                if taut_ever:
                    ref_winch_rate -= ct.payout_decay * sp.ctrl_dt
                excess = t_meas - ct.tension_hold
                if excess > 0.0:
                    ref_winch_rate += ct.payout_learn * excess * sp.ctrl_dt
                if ref_winch_rate > ct.payout_cap:
                    ref_winch_rate = ct.payout_cap
                elif ref_winch_rate < -ct.reel_in_max:
                    ref_winch_rate = -ct.reel_in_max
                # the ramp continues from its own integrated position so a
                # tension-law spike cannot displace it (see gscontrol)
                ramp_pos += ref_winch_rate * sp.ctrl_dt
                if ramp_pos < y[0] - RAMP_BACKLASH:
                    ramp_pos = y[0] - RAMP_BACKLASH
                ref_w = max(ramp_pos, ref_raw)
            else:
                ref_w = ref_raw
            ref_w = max(ref_w, ref_winch - ct.reel_in_max * sp.ctrl_dt)
            if ref_w < ct.min_winch_ref:
                ref_w = ct.min_winch_ref
            ref_winch = ref_w
            err_w = ref_winch - y[0]
            derr = (err_w - prev_err_winch) / sp.ctrl_dt
            prev_err_winch = err_w
            length_now = tk.length0 + gk.r1 * y[0]
            scale = length_now / ct.detune_length
            if scale > 1.0:
                scale = 1.0
            elif scale < ct.detune_floor:
                scale = ct.detune_floor
            u_m1 = scale * (ct.kp_w * err_w + ct.kd_w * derr) + ct.ff_w * y[1]
        if u_m1 > ct.torque_lim:
            u_m1 = ct.torque_lim
        elif u_m1 < -ct.torque_lim:
            u_m1 = -ct.torque_lim
        u_m2 = ct.kp_s * (ref_slide - y[2]) - ct.kd_s * y[3]
        if u_m2 > ct.torque_lim:
            u_m2 = ct.torque_lim
        elif u_m2 < -ct.torque_lim:
            u_m2 = -ct.torque_lim

        # flight controller
        ref_psi_log = 0.0
        ref_wy_log = 0.0
        ref_wz_log = 0.0
        if mode == 1:
            u7[0] = u_m1
            u7[1] = u_m2
            u7[2] = 0.0
            u7[3] = ct.u_e_launch
            u7[4] = 0.0
            u7[5] = ct.launch_flap
            u7[6] = 0.0
            brakes = False
        else:
            # flow angles at the boundary for guidance and the alpha-rate hold
            _rot_b2i(y[10], y[11], y[12], rwork)
            wax = (rwork[0, 0] * windx + rwork[1, 0] * windy
                   + rwork[2, 0] * windz - y[7])
            way = (rwork[0, 1] * windx + rwork[1, 1] * windy
                   + rwork[2, 1] * windz - y[8])
            waz = (rwork[0, 2] * windx + rwork[1, 2] * windy
                   + rwork[2, 2] * windz - y[9])
            va = math.sqrt(wax * wax + way * way + waz * waz)
            if va >= ap.v_min and wax != 0.0:
                alpha = math.atan(waz / wax)
            elif va >= ap.v_min:
                alpha = math.copysign(math.pi / 2.0, waz)
            else:
                alpha = 0.0
            if alpha_valid:
                alpha_dot_hold = (alpha - alpha_prev) / sp.ctrl_dt
            else:
                alpha_dot_hold = 0.0
                alpha_valid = True
            alpha_prev = alpha

            # waypoint sequencing (strict radius, horizontal distance)
            if wp_index < n_wp - 1:
                dxw = y[4] - waypoints[wp_index, 0]
                dyw = y[5] - waypoints[wp_index, 1]
                if math.sqrt(dxw * dxw + dyw * dyw) < ct.wp_radius:
                    wp_index += 1
            landing = wp_index >= n_wp - 1
            launch = wp_index == 0

            # references: path-angle loop on the pitch rate, with the pitch
            # angle target shifted to agree with the demanded path and the
            # climb side limited by the airspeed margin over stall
            for j in range(9):
                x_ref[j] = trim_red[j]
            gamma = alpha - y[11]
            if ct.climb_hi <= ct.climb_lo:
                floor = -ct.gamma_sat
            else:
                margin = (va - ct.climb_lo) / (ct.climb_hi - ct.climb_lo)
                if margin > 1.0:
                    margin = 1.0
                elif margin < -0.5:
                    margin = -0.5
                floor = -ct.gamma_sat * margin
            range_xy = math.hypot(waypoints[wp_index, 0] - y[4],
                                  waypoints[wp_index, 1] - y[5])
            raw = math.atan2(waypoints[wp_index, 2] - y[6], range_xy)
            if raw > ct.gamma_sat:
                raw = ct.gamma_sat
            elif raw < -ct.gamma_sat:
                raw = -ct.gamma_sat
            if raw < floor:
                raw = floor
            x_ref[4] = ct.alpha_trim - raw
            wy_ref = -ct.k_gamma * (raw - gamma)
            if wy_ref > ct.rate_ref_max:
                wy_ref = ct.rate_ref_max
            elif wy_ref < -ct.rate_ref_max:
                wy_ref = -ct.rate_ref_max
            x_ref[7] = wy_ref

            if landing:
                los = math.atan2(-y[5], ct.aim_ahead)
                beta_y = _wrap(y[12] - los)
                wz_ref = -ct.k_beta * beta_y
                if wz_ref > ct.rate_ref_max:
                    wz_ref = ct.rate_ref_max
                elif wz_ref < -ct.rate_ref_max:
                    wz_ref = -ct.rate_ref_max
                x_ref[8] = wz_ref
                x_ref[5] = y[12]
            else:
                raw_psi = math.atan2(waypoints[wp_index, 1] - y[5],
                                     waypoints[wp_index, 0] - y[4])
                if not psi_filter_init:
                    psi_filter = raw_psi
                    psi_filter_init = True
                else:
                    psi_filter = _wrap(psi_filter
                                       + ct.psi_blend * _wrap(raw_psi - psi_filter))
                x_ref[5] = psi_filter

            # regulator: u = clamp(u_trim - K (x - x_ref)); the velocity
            # entries are air-relative (what a pitot suite measures), which
            # keeps the aerodynamic operating point wind-invariant
            du0 = 0.0
            du1 = 0.0
            du2 = 0.0
            du3 = 0.0
            for j in range(9):
                if j == 0:
                    e = -wax - x_ref[0]
                elif j == 1:
                    e = -way - x_ref[1]
                elif j == 2:
                    e = -waz - x_ref[2]
                else:
                    e = y[7 + j] - x_ref[j]
                if j == 5:
                    e = _wrap(e)
                    if landing:
                        e = 0.0
                du0 += k_gain[0, j] * e
                du1 += k_gain[1, j] * e
                du2 += k_gain[2, j] * e
                du3 += k_gain[3, j] * e
            u_a = trim_u[0] - du0
            u_e = trim_u[1] - du1
            u_r = trim_u[2] - du2
            u_m = trim_u[4] - du3
            if landing:
                u_f = ct.landing_brake
                brakes = True
            elif launch:
                u_f = ct.launch_flap
                brakes = False
            else:
                u_f = 0.0
                brakes = False
            s = ct.surface_lim
            u7[0] = u_m1
            u7[1] = u_m2
            u7[2] = min(max(u_a, -s), s)
            u7[3] = min(max(u_e, -s), s)
            u7[4] = min(max(u_r, -s), s)
            u7[5] = min(max(u_f, -s), s)
            u7[6] = min(max(u_m, 0.0), ct.thrust_max)
            ref_psi_log = x_ref[5]
            ref_wy_log = x_ref[7]
            ref_wz_log = x_ref[8]

        # trajectory row: the state the controller saw and what it commanded
        if mode == 1:
            px_row = gk.r2 * y[2] - gk.half_rail
            v_slide = gk.r2 * y[3]
            log[rows, 6] = px_row
            log[rows, 7] = 0.0
            log[rows, 8] = 0.0
            log[rows, 9] = v_slide * math.cos(sp.incidence)
            log[rows, 10] = 0.0
            log[rows, 11] = v_slide * math.sin(sp.incidence)
            log[rows, 12] = 0.0
            log[rows, 13] = sp.incidence
            log[rows, 14] = 0.0
            log[rows, 15] = 0.0
            log[rows, 16] = 0.0
            log[rows, 17] = 0.0
        else:
            for j in range(12):
                log[rows, 6 + j] = y[4 + j]
        log[rows, 0] = t
        log[rows, 1] = float(mode)
        log[rows, 2] = y[0]
        log[rows, 3] = y[1]
        log[rows, 4] = y[2]
        log[rows, 5] = y[3]
        for j in range(7):
            log[rows, 18 + j] = u7[j]
        log[rows, 25] = windx
        log[rows, 26] = windy
        log[rows, 27] = windz
        log[rows, 28] = t_true
        log[rows, 29] = ref_winch
        log[rows, 30] = ref_slide
        log[rows, 31] = ref_psi_log
        log[rows, 32] = ref_wy_log
        log[rows, 33] = ref_wz_log
        rows += 1

        # plant substeps under zero-order hold
        done = False
        for kstep in range(n_sub):
            if mode == 1:
                _rk4_carried(y, sp.dt, u7[0], u7[1], windx, windy, windz,
                             u7[2], u7[3], u7[4], u7[5],
                             sp, ap, bp, tk, gk, rwork, fm, k1, k2, k3, k4, yt)
                # rail end stops
                if y[2] < 0.0:
                    y[2] = 0.0
                    if y[3] < 0.0:
                        y[3] = 0.0
                elif y[2] > gk.rail_angle:
                    y[2] = gk.rail_angle
                    if y[3] > 0.0:
                        y[3] = 0.0
                t += sp.dt
                tension_now = _carried_tension(y, tk, gk)
                if tension_now > max_t_carried:
                    max_t_carried = tension_now
                _, f_az = _carried_aero(y, windx, windy, windz,
                                        u7[2], u7[3], u7[4], u7[5],
                                        sp, ap, gk, rwork, fm)
                if -f_az > sp.mg:
                    # take-off: hand the kinematic state to the free glider
                    t_takeoff = t
                    travel_takeoff = gk.r2 * y[2]
                    v_rel = gk.r2 * y[3]
                    # stall guard on airspeed: into-wind launches hand off
                    # at a lower ground speed but the same aerodynamic state
                    ax = v_rel - windx
                    ay = -windy
                    az = -windz
                    if math.sqrt(ax * ax + ay * ay + az * az) < sp.stall_speed:
                        status = ST_STALL
                        done = True
                        break
                    y[4] = gk.r2 * y[2] - gk.half_rail
                    y[5] = 0.0
                    y[6] = 0.0
                    y[7] = v_rel
                    y[8] = 0.0
                    y[9] = 0.0
                    y[10] = 0.0
                    y[11] = sp.incidence
                    y[12] = 0.0
                    y[13] = 0.0
                    y[14] = 0.0
                    y[15] = 0.0
                    mode = 2
                    # seed the payout ramp from the winch speed at t*
                    ref_winch = y[0]
                    ref_winch_rate = max(0.0, y[1])
                    ramp_pos = y[0]
                    prev_err_winch = 0.0
                    taut_count = 0
                    taut_ever = False
                    ramp_alive = True
            else:
                pz_prev = y[6]
                px_prev = y[4]
                py_prev = y[5]
                _rot_b2i(y[10], y[11], y[12], rwork)
                vinx_p = rwork[0, 0] * y[7] + rwork[0, 1] * y[8] + rwork[0, 2] * y[9]
                viny_p = rwork[1, 0] * y[7] + rwork[1, 1] * y[8] + rwork[1, 2] * y[9]
                vinz_p = rwork[2, 0] * y[7] + rwork[2, 1] * y[8] + rwork[2, 2] * y[9]
                speed_prev = math.sqrt(vinx_p * vinx_p + viny_p * viny_p
                                       + vinz_p * vinz_p)
                flag = _rk4_free(y, sp.dt, u7, windx, windy, windz,
                                 alpha_dot_hold, brakes,
                                 ap, bp, tk, gk, rwork, fm, k1, k2, k3, k4, yt)
                if flag == 1:
                    status = ST_GIMBAL
                    done = True
                    break
                if flag == 2:
                    status = ST_LINE_OUT
                    done = True
                    break
                # empty slide end stops
                if y[2] < 0.0:
                    y[2] = 0.0
                    if y[3] < 0.0:
                        y[3] = 0.0
                elif y[2] > gk.rail_angle:
                    y[2] = gk.rail_angle
                    if y[3] > 0.0:
                        y[3] = 0.0
                t += sp.dt
                if not armed and y[6] < -sp.arm_alt:
                    armed = True
                # Touchdown: armed flights end on the Z = 0 crossing.  A
                # flight that never armed still ends once it sags clearly
                # below the rail plane, else it could "fly" underground.
                if y[6] >= 0.0 and (armed or y[6] > GROUND_GRACE):
                    if pz_prev < 0.0:
                        frac = pz_prev / (pz_prev - y[6])
                    else:
                        frac = 1.0
                    t_touchdown = t - sp.dt + frac * sp.dt
                    td_x = px_prev + frac * (y[4] - px_prev)
                    td_y = py_prev + frac * (y[5] - py_prev)
                    _rot_b2i(y[10], y[11], y[12], rwork)
                    vinx = rwork[0, 0] * y[7] + rwork[0, 1] * y[8] + rwork[0, 2] * y[9]
                    viny = rwork[1, 0] * y[7] + rwork[1, 1] * y[8] + rwork[1, 2] * y[9]
                    vinz = rwork[2, 0] * y[7] + rwork[2, 1] * y[8] + rwork[2, 2] * y[9]
                    speed_new = math.sqrt(vinx * vinx + viny * viny + vinz * vinz)
                    td_speed = speed_prev + frac * (speed_new - speed_prev)
                    status = ST_LANDED
                    done = True
                    break
                v2 = y[7] * y[7] + y[8] * y[8] + y[9] * y[9]
                w_max = max(abs(y[13]), max(abs(y[14]), abs(y[15])))
                if v2 > 100.0 * 100.0 or w_max > 100.0:
                    status = ST_DIVERGED
                    done = True
                    break
        if done:
            break
    return (status, rows, t_takeoff, travel_takeoff, max_t_carried,
            t_touchdown, td_x, td_y, td_speed)
