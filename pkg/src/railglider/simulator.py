"""Closed-loop episode simulation: launch, flight pattern, landing.

An episode starts with the glider parked on the slide at the -X end of the
rails and runs the full hybrid sequence: carried acceleration, the takeoff
switch, the waypoint pattern and the final approach back onto the rail
axis, ending at touchdown or a timeout.

Two interchangeable engines advance the plant.  The compiled kernel
(kernels.py) is the default and the only one fast enough for batches; the
pure-Python path assembled from the physics modules is the readable
reference the kernel is cross-checked against.  Both share the exact same
semantics: controllers sample at the control boundary and hold, events are
checked after every plant substep, touchdown interpolates the ground
crossing linearly, and at most one mode transition happens per episode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import aero, kernels, tether
from .airframe import GRAVITY, AircraftState, GliderInputs, rigid_body_derivatives, total_wrench
from .config import EpisodeConfig
from .dynamics import GliderModel
from .flightcontrol import (
    FlightController,
    FlightPhase,
    TrimPoint,
    care_residual,
    find_trim,
    linearize,
    lqr_gain,
)
from .frames import Attitude, GimbalSingularError, body_to_inertial, inertial_to_body
from .groundstation import (
    GroundStationState,
    OperatingMode,
    gs_derivatives,
    takeoff_predicate,
)
from .gscontrol import GroundStationController, measure_tension
from .tether import ZeroLengthError
from .wind import GustState, wind_sample

OUTCOME_ON_RAILS = "landed_on_rails"
OUTCOME_OFF_RAILS = "landed_off_rails"
OUTCOME_ABORTED = "aborted"

_ABORT_NOTES = {
    kernels.ST_TIMEOUT: "timeout",
    kernels.ST_DIVERGED: "numerical divergence",
    kernels.ST_STALL: "handoff below stall speed",
    kernels.ST_GIMBAL: "pitch reached the attitude singularity",
    kernels.ST_LINE_OUT: "line fully reeled in",
}

CSV_COLUMNS = (
    "t", "mode",
    "winch_angle", "winch_rate", "slide_angle", "slide_rate",
    "p_x", "p_y", "p_z", "v_bx", "v_by", "v_bz",
    "roll", "pitch", "yaw", "omega_x", "omega_y", "omega_z",
    "u_winch", "u_slide", "u_aileron", "u_elevator", "u_rudder",
    "u_flap", "u_thrust",
    "wind_x", "wind_y", "wind_z",
    "tension",
    "ref_winch_angle", "ref_slide_angle", "ref_heading",
    "ref_pitch_rate", "ref_yaw_rate",
)

assert len(CSV_COLUMNS) == kernels.LOG_WIDTH


def rk4_step(f: Callable[[np.ndarray], np.ndarray], y: np.ndarray,
             dt: float) -> np.ndarray:
    """One classical Runge-Kutta step of y' = f(y) (inputs held constant)."""
    k1 = f(y)
    k2 = f(y + 0.5 * dt * k1)
    k3 = f(y + 0.5 * dt * k2)
    k4 = f(y + dt * k3)
    return y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@dataclass(frozen=True)
class ControllerDesign:
    """Trim point, linear model and regulator gain for one configuration."""

    model: GliderModel
    trim: TrimPoint
    a: np.ndarray
    b: np.ndarray
    k_gain: np.ndarray
    riccati: np.ndarray
    care_residual: float
    spectral_abscissa: float


def design_controller(cfg: EpisodeConfig) -> ControllerDesign:
    """Trim the glider at the configured speed and synthesise the regulator."""
    model = GliderModel(
        geometry=cfg.geometry,
        coefficients=aero.derive_coefficients(cfg.geometry, cfg.base_coeffs),
        inertia=cfg.inertia,
        rho=cfg.rho,
    )
    trim = find_trim(cfg.trim_speed, model)
    a, b = linearize(trim, model)
    q = np.diag(cfg.lqr_q_diag)
    r = np.diag(cfg.lqr_r_diag)
    k, p = lqr_gain(a, b, q, r)
    res = care_residual(a, b, q, r, p)
    absc = float(np.max(np.real(np.linalg.eigvals(a - b @ k))))
    return ControllerDesign(model=model, trim=trim, a=a, b=b, k_gain=k,
                            riccati=p, care_residual=res,
                            spectral_abscissa=absc)


@dataclass
class EpisodeRecord:
    """Everything a batch or a plot needs to know about one episode."""

    seed: int
    outcome: str
    note: str
    t_takeoff: float
    travel_takeoff: float
    max_tension_carried: float
    t_touchdown: float
    touchdown_x: float
    touchdown_y: float
    touchdown_speed: float
    n_steps: int
    tension: np.ndarray
    rows: np.ndarray | None = None

    @property
    def landed(self) -> bool:
        return self.outcome in (OUTCOME_ON_RAILS, OUTCOME_OFF_RAILS)

    @property
    def touchdown_position(self) -> tuple[float, float]:
        return (self.touchdown_x, self.touchdown_y)


def _episode_streams(seed: int) -> tuple[np.random.SeedSequence, np.random.SeedSequence]:
    gust_seq, noise_seq = np.random.SeedSequence(seed).spawn(2)
    return gust_seq, noise_seq


class Simulator:
    """Episode runner bound to one configuration.

    Reuses the controller design and the trajectory buffer across episodes,
    which matters when a batch runs hundreds of them.
    """

    def __init__(self, cfg: EpisodeConfig,
                 design: ControllerDesign | None = None) -> None:
        self.cfg = cfg
        self.design = design if design is not None else design_controller(cfg)
        if self.design.trim.airspeed != cfg.trim_speed:
            raise ValueError("design was built for a different trim speed")
        self.n_ctrl = int(round(cfg.t_max / cfg.control_dt))
        self.packed = kernels.pack_params(cfg, self.design.model,
                                          self.design.trim)
        self._log = np.zeros((self.n_ctrl + 1, kernels.LOG_WIDTH))
        self._waypoints = np.asarray(cfg.waypoints, dtype=float)

    # -- compiled path ----------------------------------------------------

    def run_episode(self, seed: int, keep_rows: bool = True,
                    engine: str = "kernel") -> EpisodeRecord:
        if engine == "kernel":
            return self._run_kernel(seed, keep_rows)
        if engine == "python":
            return self._run_python(seed, keep_rows)
        raise ValueError(f"unknown engine {engine!r}")

    def warmup(self) -> None:
        """Trigger JIT compilation outside any timed section."""
        self._run_kernel(seed=0, keep_rows=False, n_ctrl=2)

    def _run_kernel(self, seed: int, keep_rows: bool,
                    n_ctrl: int | None = None) -> EpisodeRecord:
        cfg = self.cfg
        n = self.n_ctrl if n_ctrl is None else n_ctrl
        gust_seq, noise_seq = _episode_streams(seed)
        rng_gust = np.random.Generator(np.random.PCG64(gust_seq))
        innovations = cfg.wind.gust_amplitude * rng_gust.uniform(
            -1.0, 1.0, size=(n, 3))
        if cfg.gs_control.sigma_tension > 0.0:
            rng_noise = np.random.Generator(np.random.PCG64(noise_seq))
            t_noise = rng_noise.standard_normal(n)
        else:
            t_noise = np.zeros(n)

        ap, bp, tk, gk, ct, sp = self.packed
        y = np.zeros(16)
        log = self._log if n == self.n_ctrl else np.zeros(
            (n + 1, kernels.LOG_WIDTH))
        out = kernels.run_episode_kernel(
            y, n, cfg.substeps, ap, bp, tk, gk, ct, sp,
            self.design.k_gain, self.design.trim.reduced_state,
            self.design.trim.inputs, self._waypoints,
            innovations, t_noise, log)
        return self._record_from_kernel(seed, out, log, keep_rows)

    def _record_from_kernel(self, seed: int, out: tuple, log: np.ndarray,
                            keep_rows: bool) -> EpisodeRecord:
        (status, rows, t_takeoff, travel, max_t1,
         t_td, td_x, td_y, td_speed) = out
        if status == kernels.ST_LANDED:
            on_rails = (abs(td_x) <= self.cfg.gs.rail_length / 2.0
                        and abs(td_y) <= self.cfg.gs.rail_width / 2.0)
            outcome = OUTCOME_ON_RAILS if on_rails else OUTCOME_OFF_RAILS
            note = ""
        else:
            outcome = OUTCOME_ABORTED
            note = _ABORT_NOTES[status]
            t_td = math.nan
            td_x = math.nan
            td_y = math.nan
            td_speed = math.nan
        if t_takeoff < 0.0:
            t_takeoff = math.nan
            travel = math.nan
        return EpisodeRecord(
            seed=seed, outcome=outcome, note=note,
            t_takeoff=t_takeoff, travel_takeoff=travel,
            max_tension_carried=max_t1,
            t_touchdown=t_td, touchdown_x=td_x, touchdown_y=td_y,
            touchdown_speed=td_speed, n_steps=rows,
            tension=log[:rows, 28].copy(),
            rows=log[:rows].copy() if keep_rows else None,
        )

    # -- reference path ---------------------------------------------------

    def _run_python(self, seed: int, keep_rows: bool,
                    n_ctrl: int | None = None) -> EpisodeRecord:
        cfg = self.cfg
        design = self.design
        model = design.model
        tp = cfg.tether
        gp = cfg.gs
        n = self.n_ctrl if n_ctrl is None else n_ctrl
        half_rail = gp.rail_length / 2.0
        rail_angle = gp.rail_length / gp.r_M2
        mg = cfg.inertia.m * GRAVITY

        gust_seq, noise_seq = _episode_streams(seed)
        gust = GustState(rng=np.random.Generator(np.random.PCG64(gust_seq)))
        rng_noise = np.random.Generator(np.random.PCG64(noise_seq))

        gs_ctl = GroundStationController(cfg.gs_control, gp,
                                         dt=cfg.control_dt)
        flight = FlightController(design.trim, design.k_gain,
                                  self._waypoints, cfg.guidance,
                                  dt=cfg.control_dt, limits=cfg.limits)

        log = np.zeros((n + 1, kernels.LOG_WIDTH))
        y = np.zeros(16)
        mode = OperatingMode.SLIDE_CARRIED
        t = 0.0
        rows = 0
        status = kernels.ST_TIMEOUT
        t_takeoff = math.nan
        travel_takeoff = math.nan
        max_t1 = 0.0
        t_td = math.nan
        td_x = math.nan
        td_y = math.nan
        td_speed = math.nan
        alpha_prev = 0.0
        alpha_valid = False
        alpha_dot_hold = 0.0
        armed = False
        brakes = False
        launch_inputs = GliderInputs(u_a=0.0, u_e=design.trim.u_e, u_r=0.0,
                                     u_f=cfg.guidance.launch_flap, u_m=0.0)

        def carried_tension(ys: np.ndarray) -> float:
            p_vec = np.array([gp.r_M2 * ys[2] - half_rail, 0.0, 0.0])
            return float(np.linalg.norm(tether.tension_force(p_vec, ys[0], tp)))

        def carried_aero(ys: np.ndarray, wind: np.ndarray,
                         gi: GliderInputs) -> tuple[float, float]:
            att = Attitude(0.0, cfg.slide_incidence, 0.0)
            v_b = inertial_to_body(att, np.array([gp.r_M2 * ys[3], 0.0, 0.0]))
            try:
                ad = aero.airdata(v_b, att, wind)
            except aero.DegenerateAirspeedError:
                return 0.0, 0.0
            f_b, _ = aero.aero_wrench(model.coefficients, model.geometry, ad,
                                      np.zeros(3), gi.surfaces(), rho=cfg.rho)
            f_in = body_to_inertial(att, f_b)
            return float(f_in[0]), float(f_in[2])

        def deriv_carried(ys: np.ndarray, u_gs: tuple[float, float],
                          wind: np.ndarray, gi: GliderInputs) -> np.ndarray:
            f_ax, _ = carried_aero(ys, wind, gi)
            tension = carried_tension(ys)
            d = np.zeros(16)
            d[0:4] = gs_derivatives(mode, GroundStationState.from_array(ys),
                                    u_gs, tension, 0.0, f_ax, gp)
            return d

        def deriv_free(ys: np.ndarray, u_gs: tuple[float, float],
                       gi: GliderInputs, wind: np.ndarray) -> np.ndarray:
            xs = AircraftState.from_array(ys[4:16])
            try:
                ad = aero.airdata(xs.v_b, xs.att, wind)
                ad = aero.AirData(w_a=ad.w_a, v_a=ad.v_a, alpha=ad.alpha,
                                  beta=ad.beta, alpha_dot=alpha_dot_hold)
                f_aero, m_aero = aero.aero_wrench(
                    model.coefficients, model.geometry, ad, xs.omega_b,
                    gi.surfaces(), rho=cfg.rho, brakes=brakes)
                w_a = ad.w_a
            except aero.DegenerateAirspeedError:
                w_a = inertial_to_body(xs.att, wind) - xs.v_b
                f_aero = np.zeros(3)
                m_aero = np.zeros(3)
            tw = tether.tether_wrench(xs.p, ys[0], w_a, xs.att, tp,
                                      rho=cfg.rho)
            force, moment = total_wrench(xs.att, model.inertia, gi,
                                         f_aero, m_aero,
                                         tw.force_body, tw.moment_body)
            d = np.zeros(16)
            d[4:16] = rigid_body_derivatives(xs, force, moment,
                                             model.inertia).as_array()
            f_tx = float(tether.ground_axial_force(xs.p, tw.tension)[0])
            d[0:4] = gs_derivatives(mode, GroundStationState.from_array(ys),
                                    u_gs, tw.tension, f_tx, 0.0, gp)
            return d

        def free_tension(ys: np.ndarray) -> float:
            return float(np.linalg.norm(
                tether.tension_force(ys[4:7], ys[0], tp)))

        done = False
        for i in range(n):
            wind = wind_sample(cfg.wind, gust, cfg.control_dt)

            t_true = carried_tension(y) if mode is OperatingMode.SLIDE_CARRIED \
                else free_tension(y)
            t_meas = measure_tension(t_true, cfg.gs_control.sigma_tension,
                                     rng_noise)
            u_m1, u_m2 = gs_ctl.step(mode, GroundStationState.from_array(y[0:4]),
                                     t_meas)

            x_ref = np.zeros(9)
            if mode is OperatingMode.SLIDE_CARRIED:
                gi = launch_inputs
                brakes = False
            else:
                xs = AircraftState.from_array(y[4:16])
                x_fb = y[4:16].copy()
                try:
                    ad_now = aero.airdata(xs.v_b, xs.att, wind)
                    alpha_now = ad_now.alpha
                    v_air = ad_now.v_a
                    # the regulator stabilizes the aerodynamic state: feed
                    # it air-relative velocity (what a pitot-based sensor
                    # suite measures), identical to ground velocity in calm
                    x_fb[3:6] = -ad_now.w_a
                except aero.DegenerateAirspeedError:
                    alpha_now = 0.0
                    v_air = 0.0
                if alpha_valid:
                    alpha_dot_hold = (alpha_now - alpha_prev) / cfg.control_dt
                else:
                    alpha_dot_hold = 0.0
                    alpha_valid = True
                alpha_prev = alpha_now
                gi, x_ref = flight.step(x_fb, alpha_now, v_air)
                brakes = flight.phase is FlightPhase.LANDING

            if mode is OperatingMode.SLIDE_CARRIED:
                px_row = gp.r_M2 * y[2] - half_rail
                v_slide = gp.r_M2 * y[3]
                log[rows, 6:18] = (
                    px_row, 0.0, 0.0,
                    v_slide * math.cos(cfg.slide_incidence), 0.0,
                    v_slide * math.sin(cfg.slide_incidence),
                    0.0, cfg.slide_incidence, 0.0, 0.0, 0.0, 0.0)
            else:
                log[rows, 6:18] = y[4:16]
            log[rows, 0] = t
            log[rows, 1] = float(mode.value)
            log[rows, 2:6] = y[0:4]
            log[rows, 18] = u_m1
            log[rows, 19] = u_m2
            log[rows, 20:25] = gi.as_array()
            log[rows, 25:28] = wind
            log[rows, 28] = t_true
            log[rows, 29:31] = gs_ctl.last_refs
            if mode is OperatingMode.FREE_FLIGHT:
                log[rows, 31] = x_ref[5]
                log[rows, 32] = x_ref[7]
                log[rows, 33] = x_ref[8]
            rows += 1

            u_gs = (u_m1, u_m2)
            for _ in range(cfg.substeps):
                if mode is OperatingMode.SLIDE_CARRIED:
                    y = rk4_step(lambda ys: deriv_carried(ys, u_gs, wind, gi),
                                 y, cfg.dt)
                    if y[2] < 0.0:
                        y[2] = 0.0
                        y[3] = max(y[3], 0.0)
                    elif y[2] > rail_angle:
                        y[2] = rail_angle
                        y[3] = min(y[3], 0.0)
                    t += cfg.dt
                    max_t1 = max(max_t1, carried_tension(y))
                    _, f_az = carried_aero(y, wind, gi)
                    if takeoff_predicate(f_az, cfg.inertia.m):
                        t_takeoff = t
                        travel_takeoff = gp.r_M2 * y[2]
                        v_rel = gp.r_M2 * y[3]
                        # stall guard on airspeed, not ground speed: into-wind
                        # launches hand off slower over the ground but with
                        # the same aerodynamic state
                        v_air = float(np.linalg.norm(
                            np.array([v_rel, 0.0, 0.0]) - wind))
                        if v_air < cfg.stall_speed:
                            status = kernels.ST_STALL
                            done = True
                            break
                        y[4:16] = 0.0
                        y[4] = gp.r_M2 * y[2] - half_rail
                        y[7] = v_rel
                        y[11] = cfg.slide_incidence
                        mode = OperatingMode.FREE_FLIGHT
                        gs_ctl.on_mode_switch(
                            GroundStationState.from_array(y[0:4]))
                else:
                    pz_prev = y[6]
                    px_prev = y[4]
                    py_prev = y[5]
                    xs_prev = AircraftState.from_array(y[4:16])
                    speed_prev = float(np.linalg.norm(xs_prev.v_inertial()))
                    try:
                        y = rk4_step(
                            lambda ys: deriv_free(ys, u_gs, gi, wind),
                            y, cfg.dt)
                    except GimbalSingularError:
                        status = kernels.ST_GIMBAL
                        done = True
                        break
                    except ZeroLengthError:
                        status = kernels.ST_LINE_OUT
                        done = True
                        break
                    if abs(math.cos(y[11])) <= 1e-6:
                        status = kernels.ST_GIMBAL
                        done = True
                        break
                    if y[2] < 0.0:
                        y[2] = 0.0
                        y[3] = max(y[3], 0.0)
                    elif y[2] > rail_angle:
                        y[2] = rail_angle
                        y[3] = min(y[3], 0.0)
                    t += cfg.dt
                    if not armed and y[6] < -cfg.arm_altitude:
                        armed = True
                    if y[6] >= 0.0 and (armed
                                        or y[6] > kernels.GROUND_GRACE):
                        frac = pz_prev / (pz_prev - y[6]) \
                            if pz_prev < 0.0 else 1.0
                        t_td = t - cfg.dt + frac * cfg.dt
                        td_x = px_prev + frac * (y[4] - px_prev)
                        td_y = py_prev + frac * (y[5] - py_prev)
                        xs_new = AircraftState.from_array(y[4:16])
                        speed_new = float(np.linalg.norm(xs_new.v_inertial()))
                        td_speed = speed_prev + frac * (speed_new - speed_prev)
                        status = kernels.ST_LANDED
                        done = True
                        break
                    if (np.dot(y[7:10], y[7:10]) > 1.0e4
                            or np.max(np.abs(y[13:16])) > 100.0):
                        status = kernels.ST_DIVERGED
                        done = True
                        break
            if done:
                break

        out = (status, rows, t_takeoff if not math.isnan(t_takeoff) else -1.0,
               travel_takeoff if not math.isnan(travel_takeoff) else -1.0,
               max_t1, t_td, td_x, td_y, td_speed)
        return self._record_from_kernel(seed, out, log, keep_rows)
