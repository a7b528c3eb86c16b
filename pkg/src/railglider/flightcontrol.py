"""Flight-side control: trim solving, linear models, LQR synthesis and the
outer guidance loops.

The regulator tracks a straight-and-level trim condition. Guidance shapes
the reference vector handed to the regulator: the flight-path loop turns a
path-angle error into a pitch-rate reference, the heading loop filters the
bearing to the active waypoint, and the final-approach loop replaces
heading tracking with a yaw-rate command that bleeds off the line-of-sight
error toward the rail origin.

Angles are radians, speeds m/s. The reduced state used by the regulator
stacks the nine non-position entries in plant order:

    [v_bx, v_by, v_bz, phi, theta, psi, omega_x, omega_y, omega_z]
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.optimize

from .airframe import GliderInputs, InputLimits
from .dynamics import GliderModel, glider_derivatives, level_state
from .frames import wrap_angle

SPEED_MIN = 6.0
SPEED_MAX = 25.0

REDUCED_DIM = 9
INPUT_SLOTS = (0, 1, 2, 4)  # aileron, elevator, rudder, thrust


class TrimNotFound(RuntimeError):
    """The trim solver failed to reach the requested residual."""


class EnvelopeViolation(ValueError):
    """Requested operating point lies outside the supported speed range."""


class NotStabilizable(RuntimeError):
    """Riccati synthesis produced no stabilizing gain."""


@dataclass(frozen=True)
class TrimPoint:
    airspeed: float
    alpha: float
    u_e: float
    u_m: float
    state: np.ndarray
    inputs: np.ndarray
    residual: float

    @property
    def reduced_state(self) -> np.ndarray:
        return self.state[3:12].copy()


def find_trim(airspeed: float, model: GliderModel, tol: float = 1e-8) -> TrimPoint:
    """Solve straight, wings-level, constant-speed flight at the given airspeed.

    Unknowns are angle of attack, elevator and thrust; pitch equals alpha so
    the flight path is level, and sideslip is zero by symmetry. Raises
    EnvelopeViolation outside [SPEED_MIN, SPEED_MAX] and TrimNotFound if the
    residual cannot be driven below tol.
    """
    if not SPEED_MIN <= airspeed <= SPEED_MAX:
        raise EnvelopeViolation(
            f"airspeed {airspeed:.2f} m/s outside [{SPEED_MIN}, {SPEED_MAX}]")

    def residuals(z: np.ndarray) -> np.ndarray:
        alpha, u_e, u_m = z
        x = level_state(airspeed, alpha)
        u = np.array([0.0, u_e, 0.0, 0.0, u_m])
        d = glider_derivatives(x, u, model)
        return np.array([d[3], d[5], d[10]])

    guess = np.array([0.05, -0.01, 0.5])
    sol = scipy.optimize.root(residuals, guess, method="hybr", tol=1e-12)
    alpha, u_e, u_m = sol.x
    x = level_state(airspeed, alpha)
    u = np.array([0.0, u_e, 0.0, 0.0, u_m])
    full = glider_derivatives(x, u, model)
    residual = float(np.max(np.abs(full[3:12])))
    if not sol.success or residual >= tol:
        raise TrimNotFound(
            f"residual {residual:.3e} at {airspeed:.2f} m/s (tol {tol:.1e})")
    return TrimPoint(airspeed=airspeed, alpha=float(alpha), u_e=float(u_e),
                     u_m=float(u_m), state=x, inputs=u, residual=residual)


def _reduced_derivatives(x9: np.ndarray, u: np.ndarray, trim: TrimPoint,
                         model: GliderModel) -> np.ndarray:
    x = trim.state.copy()
    x[3:12] = x9
    return glider_derivatives(x, u, model)[3:12]


def linearize(trim: TrimPoint, model: GliderModel,
              step: float = 1e-5) -> tuple[np.ndarray, np.ndarray]:
    """Central-difference Jacobians of the reduced dynamics about trim.

    Returns (A, B) with A 9x9 over the non-position states and B 9x4 over
    (aileron, elevator, rudder, thrust). Step sizes scale with the local
    state magnitude so fast and slow channels are resolved alike.
    """
    x0 = trim.reduced_state
    u0 = trim.inputs
    a = np.zeros((REDUCED_DIM, REDUCED_DIM))
    for j in range(REDUCED_DIM):
        h = step * max(1.0, abs(x0[j]))
        xp = x0.copy()
        xm = x0.copy()
        xp[j] += h
        xm[j] -= h
        a[:, j] = (_reduced_derivatives(xp, u0, trim, model)
                   - _reduced_derivatives(xm, u0, trim, model)) / (2.0 * h)
    b = np.zeros((REDUCED_DIM, len(INPUT_SLOTS)))
    for col, j in enumerate(INPUT_SLOTS):
        h = step * max(1.0, abs(u0[j]))
        up = u0.copy()
        um = u0.copy()
        up[j] += h
        um[j] -= h
        b[:, col] = (_reduced_derivatives(x0, up, trim, model)
                     - _reduced_derivatives(x0, um, trim, model)) / (2.0 * h)
    return a, b


def care_residual(a: np.ndarray, b: np.ndarray, q: np.ndarray, r: np.ndarray,
                  p: np.ndarray) -> float:
    br = b @ np.linalg.solve(r, b.T)
    res = a.T @ p + p @ a - p @ br @ p + q
    return float(np.max(np.abs(res)))


def lqr_gain(a: np.ndarray, b: np.ndarray, q: np.ndarray,
             r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Continuous-time LQR via the algebraic Riccati equation.

    The scipy solution is polished with Kleinman iterations until the
    Riccati residual drops below 1e-10 in max norm. Raises NotStabilizable
    when no stabilizing solution exists.
    """
    try:
        p = scipy.linalg.solve_continuous_are(a, b, q, r)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NotStabilizable(str(exc)) from exc
    k = np.linalg.solve(r, b.T @ p)
    for _ in range(6):
        if care_residual(a, b, q, r, p) < 1e-10:
            break
        acl = a - b @ k
        if np.max(np.real(np.linalg.eigvals(acl))) >= 0.0:
            break
        p = scipy.linalg.solve_continuous_lyapunov(acl.T, -(q + k.T @ r @ k))
        p = 0.5 * (p + p.T)
        k = np.linalg.solve(r, b.T @ p)
    abscissa = float(np.max(np.real(np.linalg.eigvals(a - b @ k))))
    if abscissa >= 0.0:
        raise NotStabilizable(f"closed-loop spectral abscissa {abscissa:.3e}")
    return k, p


class FlightPhase(enum.Enum):
    LAUNCH = "launch"
    CRUISE = "cruise"
    LANDING = "landing"


def _clip(v: float, bound: float) -> float:
    return min(max(v, -bound), bound)


@dataclass(frozen=True)
class GuidanceParams:
    k_gamma: float = 10.0
    k_beta: float = 40.0
    gamma_sat: float = math.radians(15.0)
    psi_filter_tau: float = 0.5
    waypoint_radius: float = 25.0  # must exceed the turn radius or the
                                   # sequencer can orbit a point forever
    launch_flap: float = math.radians(15.0)
    landing_brake: float = math.radians(7.0)
    landing_aim_ahead: float = 15.0  # m, lateral pursuit distance on final
    rate_ref_max: float = 1.2       # rad/s, bound on commanded body rates
    climb_speed_min: float = 9.0    # m/s, below this only level flight
    climb_speed_full: float = 11.0  # m/s, full climb authority here and up


def altitude_guidance(p: np.ndarray, wp: np.ndarray, alpha: float,
                      theta: float, gp: GuidanceParams,
                      climb_floor: float = -math.inf) -> tuple[float, float]:
    """Path-angle reference and pitch-rate command toward a waypoint.

    gamma = alpha - theta is positive descending (Z points down). The raw
    reference is the elevation of the waypoint over the remaining horizontal
    range, saturated to +-gamma_sat; climb_floor tightens the climbing side
    only (speed protection). Returns (gamma_ref, omega_y_ref); the caller
    also shifts the regulator's pitch-angle reference to
    alpha_trim - gamma_ref so the angle hold and the rate command agree on
    where the nose should settle.
    """
    gamma = alpha - theta
    range_xy = math.hypot(wp[0] - p[0], wp[1] - p[1])
    raw = math.atan2(wp[2] - p[2], range_xy)
    gamma_ref = max(max(-gp.gamma_sat, climb_floor), min(gp.gamma_sat, raw))
    return gamma_ref, -gp.k_gamma * (gamma_ref - gamma)


def climb_protection(v_air: float, gp: GuidanceParams) -> float:
    """Lower bound on the path-angle reference given the speed margin.

    Climb authority fades in linearly between climb_speed_min (level
    flight only, all excess thrust accelerates) and climb_speed_full
    (the whole -gamma_sat available). Below climb_speed_min the bound
    goes positive, forcing a shallow descent: with the thrust already
    saturated the only way to buy airspeed back is altitude. This keeps
    a slow aircraft off the back side of the power curve instead of
    letting it mush.
    """
    if gp.climb_speed_full <= gp.climb_speed_min:
        return -gp.gamma_sat
    margin = (v_air - gp.climb_speed_min) / (gp.climb_speed_full
                                             - gp.climb_speed_min)
    margin = min(1.0, max(-0.5, margin))
    return -gp.gamma_sat * margin


def heading_guidance(p: np.ndarray, wp: np.ndarray, filter_state: float | None,
                     gp: GuidanceParams, dt: float) -> tuple[float, float]:
    """First-order-filtered bearing to the waypoint.

    The filter state is the previous filtered heading; None seeds the filter
    at the raw bearing. The innovation is wrapped before blending so a
    target crossing the +-pi seam never drags the reference the long way
    round.
    """
    raw = math.atan2(wp[1] - p[1], wp[0] - p[0])
    if filter_state is None:
        return raw, raw
    blend = 1.0 - math.exp(-dt / gp.psi_filter_tau)
    psi_ref = wrap_angle(filter_state + blend * wrap_angle(raw - filter_state))
    return psi_ref, psi_ref


def landing_alignment(p: np.ndarray, psi: float, gp: GuidanceParams) -> float:
    """Yaw-rate command for the final approach.

    beta_y is the heading error relative to the line of sight toward a
    virtual aim point landing_aim_ahead metres ahead on the rail axis.
    Keeping the aim distance fixed rather than measuring it to the origin
    makes the cross-track error decay exponentially with a constant length
    scale of roughly landing_aim_ahead metres: a pursuit of the origin
    proper converges on a chord and crosses the centreline at an angle,
    which leaves a lateral offset of a metre or two exactly where the
    rails demand centimetres.
    """
    los = math.atan2(-p[1], gp.landing_aim_ahead)
    beta_y = wrap_angle(psi - los)
    return gp.k_beta * (0.0 - beta_y)


def waypoint_advance(p: np.ndarray, waypoints: np.ndarray, index: int,
                     gp: GuidanceParams) -> int:
    """Advance to the next waypoint once strictly inside the capture radius.

    Capture is judged on horizontal (X, Y) distance only; the altitude loop
    converges on its own schedule and must not hold the sequencer hostage.
    """
    if index < len(waypoints) - 1:
        if float(np.hypot(p[0] - waypoints[index][0],
                          p[1] - waypoints[index][1])) < gp.waypoint_radius:
            index += 1
    return index


def inner_loop(x: np.ndarray, x_ref: np.ndarray, trim: TrimPoint,
               k_gain: np.ndarray, phase: FlightPhase, gp: GuidanceParams,
               limits: InputLimits | None = None) -> GliderInputs:
    """Regulator step: u = clamp(u_trim - K (x_tilde - x_tilde_ref)).

    x is the full 12-state vector, x_ref the 9-entry reference. The heading
    error is wrapped; during the landing phase heading is released entirely
    (the yaw-rate reference owns the lateral axis) while thrust stays
    regulated: the approach is flown fast and powered, trading float for a
    firm arrival inside the rail box, and the line loads leave no speed
    margin for a gliding flare anyway.  The brake channel opens with the
    landing brake deflection to steepen the reachable glide slope.
    """
    if limits is None:
        limits = InputLimits()
    err = x[3:12] - x_ref
    err[5] = wrap_angle(err[5])
    if phase is FlightPhase.LANDING:
        err[5] = 0.0
    du = k_gain @ err
    u_a = trim.inputs[0] - du[0]
    u_e = trim.inputs[1] - du[1]
    u_r = trim.inputs[2] - du[2]
    u_m = trim.inputs[4] - du[3]
    if phase is FlightPhase.LANDING:
        u_f = gp.landing_brake
    elif phase is FlightPhase.LAUNCH:
        u_f = gp.launch_flap
    else:
        u_f = 0.0
    return GliderInputs.clamped(u_a, u_e, u_r, u_f, u_m, limits)


@dataclass
class FlightController:
    """Stateful outer loop: waypoint sequencing plus reference shaping.

    Owns the heading filter and the waypoint index. step() returns the
    surface commands and the reference vector used, so episode logs can
    carry both.
    """
    trim: TrimPoint
    k_gain: np.ndarray
    waypoints: np.ndarray
    gp: GuidanceParams = field(default_factory=GuidanceParams)
    dt: float = 0.01
    limits: InputLimits = field(default_factory=InputLimits)
    index: int = 0
    psi_filter: float | None = None

    @property
    def phase(self) -> FlightPhase:
        if self.index >= len(self.waypoints) - 1:
            return FlightPhase.LANDING
        if self.index == 0:
            return FlightPhase.LAUNCH
        return FlightPhase.CRUISE

    def step(self, x: np.ndarray, alpha: float,
             v_air: float) -> tuple[GliderInputs, np.ndarray]:
        p = x[0:3]
        self.index = waypoint_advance(p, self.waypoints, self.index, self.gp)
        phase = self.phase
        wp = self.waypoints[self.index]
        x_ref = self.trim.reduced_state
        theta = x[7]
        rmax = self.gp.rate_ref_max
        floor = climb_protection(v_air, self.gp)
        gamma_ref, wy_ref = altitude_guidance(p, wp, alpha, theta, self.gp,
                                              climb_floor=floor)
        x_ref[4] = self.trim.alpha - gamma_ref
        x_ref[7] = _clip(wy_ref, rmax)
        if phase is FlightPhase.LANDING:
            x_ref[8] = _clip(landing_alignment(p, x[8], self.gp), rmax)
            x_ref[5] = x[8]  # heading released; kept in the log for context
        else:
            psi_ref, self.psi_filter = heading_guidance(
                p, wp, self.psi_filter, self.gp, self.dt)
            x_ref[5] = psi_ref
        u = inner_loop(x, x_ref, self.trim, self.k_gain, phase, self.gp,
                       self.limits)
        return u, x_ref
