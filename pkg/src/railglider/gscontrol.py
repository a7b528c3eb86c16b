"""Ground-station controller: high-level reference strategy plus the two
motor servo loops.

The high level is mode-dependent.  Carried phase: the slide gets a step
reference (full rail travel) and the winch reference is latched to the
slide angle plus a margin, keeping the line slack.  Free flight: the winch
reference comes from a tension measurement through an assumed constant
line stiffness, which makes the winch hold a small tension; the slide
reference stays latched.

The raw free-flight reference is blended with a decaying payout ramp
seeded from the winch speed at takeoff.  Without it the winch would brake
its (fast) launch payout immediately and the receding glider would snap
the line taut at full flight speed; the ramp lets the line go taut at a
low relative speed, after which the tension law governs.  The ramp never
overrides a payout demand from the tension law, only the slack coast-down
and the reel-in rate.

The slide servo is a plain PD with derivative on the measurement (its
reference is a step).  The winch servo uses derivative on the error plus
viscous-friction feedforward: it must follow ramps at up to the flight
speed without position lag, since lag there turns directly into tension.

In free flight the winch gains are scaled down proportionally to the
deployed length below detune_length.  The taut line closes a stiffness
loop through the servo whose crossover grows as 1/sqrt(length); near the
rig a full-gain loop would cross above the 100 Hz sampling rate and pump
the line's axial mode.  Detuning there trades tracking speed (harmless,
the approach only slackens the line) for discrete-loop stability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .groundstation import GroundStationParams, GroundStationState, OperatingMode

# Consecutive control samples in firm line contact after which the payout
# ramp retires and the tension law alone drives the winch reference.
# Contact is judged against a fraction of the hold target because the
# taut-tracking equilibrium sits essentially at the hold value itself;
# counting against the full value straddles it and keeps resetting.
RAMP_RETIRE_SAMPLES = 25
RAMP_RETIRE_FRACTION = 0.6

# How far (rad) the ramp's integrated position may trail the physical drum.
# The floor drags the ramp along during taut stretches so a momentary
# tension dip cannot command a violent brake back to a stale position.
RAMP_BACKLASH = 1.0


@dataclass(frozen=True)
class MotorGains:
    k_p: float
    k_d: float
    friction_ff: float = 0.0  # viscous feedforward, N m s/rad


@dataclass(frozen=True)
class GsControlParams:
    travel: float = 5.0            # L, commanded slide travel, m
    delta_theta_launch: float = math.pi   # winch margin over the slide, rad
    delta_theta_flight: float = 0.1       # reel-in bias in flight, rad
    k_hat: float = 500.0           # assumed line stiffness, N/m
    sigma_tension: float = 0.05    # tension sensor noise std, N
    torque_limit: float = 30.0     # both motors, N m
    winch_gains: MotorGains = MotorGains(k_p=79.0, k_d=3.5, friction_ff=0.04)
    slide_gains: MotorGains = MotorGains(k_p=110.0, k_d=4.8)
    payout_decay: float = 6.0      # ramp deceleration after first contact, rad/s²
    payout_learn: float = 1.0      # ramp-rate gain on excess tension, rad/s²/N
    payout_rate_max: float = 150.0  # reference payout rate bound, rad/s
    reel_in_max: float = 120.0     # reference reel-in rate bound, rad/s
    detune_length: float = 50.0    # m, full servo gain above this line length
    detune_floor: float = 0.05     # minimum gain fraction at short line
    min_winch_ref: float = -20.0   # rad, keeps some line on the drum
    line_length0: float = 2.5      # m, line deployed at theta_M1 = 0
    r_M1: float = 0.1
    r_M2: float = 0.1

    def __post_init__(self) -> None:
        if self.travel <= 0 or self.k_hat <= 0:
            raise ValueError("travel and k_hat must be positive")
        if self.delta_theta_launch <= 0 or self.delta_theta_flight <= 0:
            raise ValueError("winch margins must be positive")
        if self.sigma_tension < 0:
            raise ValueError("sensor noise std must be nonnegative")


def gs_references(mode: OperatingMode, theta_M2: float, f_t_meas: float,
                  theta_M1: float, cp: GsControlParams) -> tuple[float, float]:
    """Reference angles (winch, slide) for the current mode.

    Carried: winch rides the slide with a slack margin; slide target is the
    full travel.  Free flight: the measured tension and the assumed
    stiffness estimate the line run to the glider, and the winch aims
    slightly short of it, which reels toward a fixed small tension.
    """
    theta_M2_ref = cp.travel / cp.r_M2
    if mode is OperatingMode.SLIDE_CARRIED:
        theta_M1_ref = theta_M2 + cp.delta_theta_launch
    else:
        p_hat = f_t_meas / cp.k_hat + theta_M1 * cp.r_M1
        theta_M1_ref = p_hat / cp.r_M1 - cp.delta_theta_flight
    return theta_M1_ref, theta_M2_ref


def position_loop(theta_ref: float, theta: float, theta_dot: float,
                  gains: MotorGains, torque_limit: float) -> float:
    """PD servo with derivative on the measurement, clamped to the motor limit."""
    u = gains.k_p * (theta_ref - theta) - gains.k_d * theta_dot
    return min(max(u, -torque_limit), torque_limit)


def measure_tension(f_t_true: float, sigma: float, rng: np.random.Generator) -> float:
    """Load-cell model: truth plus Gaussian noise, clamped at zero."""
    if sigma == 0.0:
        return max(0.0, f_t_true)
    return max(0.0, f_t_true + sigma * float(rng.standard_normal()))


@dataclass
class GroundStationController:
    """Per-episode controller state for both motors.

    step() is called at the control rate with the measured ground-station
    state and tension; it returns the two motor torques and logs its
    references for the trajectory record.
    """

    params: GsControlParams
    gp: GroundStationParams
    dt: float = 0.01
    ref_winch: float = 0.0
    ref_winch_rate: float = 0.0
    ramp_pos: float = 0.0
    prev_err_winch: float = 0.0
    ramp_active: bool = False
    taut_count: int = 0
    taut_ever: bool = False
    last_refs: tuple[float, float] = (0.0, 0.0)

    def on_mode_switch(self, xs: GroundStationState) -> None:
        """Seed the payout ramp from the winch speed at takeoff."""
        self.ref_winch = xs.theta_M1
        self.ref_winch_rate = max(0.0, xs.theta_M1_dot)
        self.ramp_pos = xs.theta_M1
        self.prev_err_winch = 0.0
        self.ramp_active = True
        self.taut_count = 0
        self.taut_ever = False

    def step(self, mode: OperatingMode, xs: GroundStationState,
             f_t_meas: float) -> tuple[float, float]:
        cp = self.params
        ref_raw, ref_slide = gs_references(mode, xs.theta_M2, f_t_meas,
                                           xs.theta_M1, cp)
        if mode is OperatingMode.SLIDE_CARRIED:
            ref_winch = ref_raw
            self.ref_winch = ref_winch
            err = ref_winch - xs.theta_M1
            u_winch = self._winch_pd(err, xs.theta_M1_dot, 1.0)
        else:
            ref_winch = self._shaped_reference(ref_raw, f_t_meas,
                                               xs.theta_M1)
            err = ref_winch - xs.theta_M1
            u_winch = self._winch_pd(err, xs.theta_M1_dot,
                                     self._gain_scale(xs.theta_M1))
        u_slide = position_loop(ref_slide, xs.theta_M2, xs.theta_M2_dot,
                                cp.slide_gains, cp.torque_limit)
        self.last_refs = (ref_winch, ref_slide)
        return u_winch, u_slide

    def _shaped_reference(self, ref_raw: float, f_t_meas: float,
                          theta_M1: float) -> float:
        """Free-flight winch reference: tension law over a coasting ramp.

        The ramp holds the handoff rate until the line first comes taut
        (there is nothing to learn from before that, and decaying early
        only steepens the first engagement), then decays so the line is
        re-contacted within a couple of seconds; tension above the hold
        target feeds the rate back up, cushioning the engagement surges.
        Once the line stays in firm contact for RAMP_RETIRE_SAMPLES the
        ramp retires for good and the tension law alone tracks payout and
        reel-in through the measured tension.

        The tension-law reference may jump ahead of the ramp without rate
        limiting: during a spike the drum is already surging on the line
        torque, and a lagging reference would make the servo brake that
        surge, turning the transient into an elastic bounce against the
        glider.  The jump must not persist, though.  The ramp continues
        from its own integrated position, not from the published
        reference: carrying the spike offset forward makes the servo
        chase it at full torque, dump slack, and meet the next
        engagement even harder, a pump that ends in divergence.
        """
        cp = self.params
        t_hold = cp.k_hat * cp.r_M1 * cp.delta_theta_flight
        if f_t_meas > RAMP_RETIRE_FRACTION * t_hold:
            self.taut_count += 1
            self.taut_ever = True
        else:
            self.taut_count = 0
        if self.taut_count >= RAMP_RETIRE_SAMPLES:
            # the line is taut and tracking: the tension law carries the
            # reference from here on and the open-loop ramp must not coast
            # slack out during turns or the approach
            self.ramp_active = False
        if self.ramp_active:
            rate = self.ref_winch_rate
            if self.taut_ever:
                rate -= cp.payout_decay * self.dt
            rate += cp.payout_learn * max(0.0, f_t_meas - t_hold) * self.dt
            rate = min(max(rate, -cp.reel_in_max), cp.payout_rate_max)
            self.ref_winch_rate = rate
            self.ramp_pos = max(self.ramp_pos + rate * self.dt,
                                theta_M1 - RAMP_BACKLASH)
            ref = max(self.ramp_pos, ref_raw)
        else:
            ref = ref_raw
        ref = max(ref, self.ref_winch - cp.reel_in_max * self.dt)
        ref = max(ref, cp.min_winch_ref)
        self.ref_winch = ref
        return ref

    def _gain_scale(self, theta_M1: float) -> float:
        cp = self.params
        length = cp.line_length0 + cp.r_M1 * theta_M1
        return min(1.0, max(cp.detune_floor, length / cp.detune_length))

    def _winch_pd(self, err: float, theta_dot: float, scale: float) -> float:
        cp = self.params
        g = cp.winch_gains
        derr = (err - self.prev_err_winch) / self.dt
        self.prev_err_winch = err
        u = scale * (g.k_p * err + g.k_d * derr) + g.friction_ff * theta_dot
        return min(max(u, -cp.torque_limit), cp.torque_limit)
