"""Episode and batch configuration: one structured YAML file carrying every
physical constant, gain and numerical knob, with strict unknown-key checks.

The file is organised in sections matching the dataclasses of the physics
and control modules. Typos in constant names are build-breaking on purpose:
an ignored misspelt inertia entry is far worse than a loud error.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import yaml

from .aero import AeroGeometry, BaseDerivatives
from .airframe import Inertia, InputLimits
from .flightcontrol import GuidanceParams
from .groundstation import GroundStationParams
from .gscontrol import GsControlParams, MotorGains
from .tether import TetherParams
from .wind import WindConfig


class ConfigError(ValueError):
    """Malformed configuration: unknown key, bad type or bad value."""


# Counterclockwise circuit around the ground station.  Distance from the
# station grows a few metres per leg and only collapses on the final
# approach: once the line is out, the range never re-extends into it, so
# the winch sees no hard taut transitions mid-pattern.  The last entry is
# the landing aim point, placed past the rail and slightly below grade so
# the glide path crosses the deck near the rail midpoint.
DEFAULT_WAYPOINTS = (
    (58.0, 8.0, -21.0),
    (52.0, 44.0, -25.0),
    (12.0, 72.0, -27.0),
    (-40.0, 68.0, -27.0),
    (-74.0, 40.0, -22.0),
    (-94.0, -2.0, -13.0),
    (8.0, 0.0, 1.0),
)

# Regulator weights over [v_bx, v_by, v_bz, phi, theta, psi, wx, wy, wz]
# and efforts over [aileron, elevator, rudder, thrust].
DEFAULT_LQR_Q = (16.0, 4.0, 4.0, 50.0, 50.0, 8.0, 10.0, 40.0, 40.0)
DEFAULT_LQR_R = (60.0, 60.0, 60.0, 0.5)


@dataclass(frozen=True)
class EpisodeConfig:
    trim_speed: float = 11.0
    dt: float = 0.001
    control_dt: float = 0.01
    t_max: float = 120.0
    rho: float = 1.225
    slide_incidence: float = math.radians(5.0)
    stall_speed: float = 6.0
    arm_altitude: float = 1.0
    waypoints: tuple[tuple[float, float, float], ...] = DEFAULT_WAYPOINTS
    lqr_q_diag: tuple[float, ...] = DEFAULT_LQR_Q
    lqr_r_diag: tuple[float, ...] = DEFAULT_LQR_R
    wind: WindConfig = field(default_factory=WindConfig)
    geometry: AeroGeometry = field(default_factory=AeroGeometry)
    base_coeffs: BaseDerivatives = field(default_factory=BaseDerivatives)
    inertia: Inertia = field(default_factory=Inertia)
    tether: TetherParams = field(default_factory=TetherParams)
    gs: GroundStationParams = field(default_factory=GroundStationParams)
    gs_control: GsControlParams = field(default_factory=GsControlParams)
    guidance: GuidanceParams = field(default_factory=GuidanceParams)
    limits: InputLimits = field(default_factory=InputLimits)

    def __post_init__(self) -> None:
        if self.dt <= 0 or self.control_dt <= 0:
            raise ConfigError("step sizes must be positive")
        ratio = self.control_dt / self.dt
        if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 1:
            raise ConfigError("control_dt must be an integer multiple of dt")
        if len(self.waypoints) < 2:
            raise ConfigError("need at least two waypoints")
        if len(self.lqr_q_diag) != 9 or len(self.lqr_r_diag) != 4:
            raise ConfigError("lqr_q_diag needs 9 entries and lqr_r_diag 4")

    @property
    def substeps(self) -> int:
        return round(self.control_dt / self.dt)


@dataclass(frozen=True)
class BatchConfig:
    episode: EpisodeConfig = field(default_factory=EpisodeConfig)
    n_episodes: int = 50
    base_seed: int = 2024
    wind_speeds: tuple[float, ...] = (2.0, 4.0, 6.0)
    gust_fraction: float = 0.3

    def __post_init__(self) -> None:
        if self.n_episodes < 1:
            raise ConfigError("n_episodes must be >= 1")
        if not self.wind_speeds:
            raise ConfigError("need at least one wind condition")


_SECTION_TYPES: dict[str, type] = {
    "wind": WindConfig,
    "geometry": AeroGeometry,
    "base_coeffs": BaseDerivatives,
    "inertia": Inertia,
    "tether": TetherParams,
    "gs": GroundStationParams,
    "gs_control": GsControlParams,
    "guidance": GuidanceParams,
    "limits": InputLimits,
}

_TUPLE_FIELDS = {"waypoints", "lqr_q_diag", "lqr_r_diag", "wind_speeds"}


def _build_section(cls: type, data: dict[str, Any], path: str) -> Any:
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    kwargs: dict[str, Any] = {}
    for key, value in data.items():
        if cls is GsControlParams and key in ("winch_gains", "slide_gains"):
            kwargs[key] = _build_section(MotorGains, value, f"{path}.{key}")
        elif key == "attach_body":
            kwargs[key] = tuple(float(v) for v in value)
        else:
            kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def episode_config_from_dict(data: dict[str, Any]) -> EpisodeConfig:
    if not isinstance(data, dict):
        raise ConfigError("top level: expected a mapping")
    names = {f.name for f in dataclasses.fields(EpisodeConfig)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"top level: unknown keys {sorted(unknown)}")
    kwargs: dict[str, Any] = {}
    for key, value in data.items():
        if key in _SECTION_TYPES:
            kwargs[key] = _build_section(_SECTION_TYPES[key], value, key)
        elif key == "waypoints":
            kwargs[key] = tuple(tuple(float(c) for c in wp) for wp in value)
        elif key in _TUPLE_FIELDS:
            kwargs[key] = tuple(float(v) for v in value)
        else:
            kwargs[key] = value
    try:
        return EpisodeConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def episode_config_to_dict(cfg: EpisodeConfig) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for f in dataclasses.fields(cfg):
        value = getattr(cfg, f.name)
        if f.name in _SECTION_TYPES:
            out[f.name] = dataclasses.asdict(value)
            if f.name == "tether":
                out[f.name]["attach_body"] = list(value.attach_body)
        elif f.name == "waypoints":
            out[f.name] = [list(wp) for wp in value]
        elif f.name in _TUPLE_FIELDS:
            out[f.name] = list(value)
        else:
            out[f.name] = value
    return out


def load_episode_config(path: str | Path) -> EpisodeConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    data = yaml.safe_load(text)
    if data is None:
        data = {}
    return episode_config_from_dict(data)


def save_episode_config(cfg: EpisodeConfig, path: str | Path) -> None:
    Path(path).write_text(yaml.safe_dump(episode_config_to_dict(cfg),
                                         sort_keys=True))


def default_config_yaml() -> str:
    """Fully commented default configuration, units spelled out per entry."""
    return """\
# Closed-loop launch/land episode configuration. All angles rad, SI units.
trim_speed: 11.0        # m/s, straight-and-level design point
dt: 0.001               # s, plant integration step
control_dt: 0.01        # s, controller sample period (integer multiple of dt)
t_max: 120.0            # s, episode timeout
rho: 1.225              # kg/m^3, air density
slide_incidence: 0.08726646259971647  # rad, glider pitch as mounted (5 deg)
stall_speed: 6.0        # m/s, handoff below this aborts the episode
arm_altitude: 1.0       # m, touchdown detection arms above this altitude

waypoints:              # m, inertial (X, Y, Z), Z down; circuit around the
  - [58.0, 8.0, -21.0]  # station, station distance grows until the final
  - [52.0, 44.0, -25.0] # approach; last point = landing aim past the rail
  - [12.0, 72.0, -27.0]
  - [-40.0, 68.0, -27.0]
  - [-74.0, 40.0, -22.0]
  - [-94.0, -2.0, -13.0]
  - [8.0, 0.0, 1.0]

# Regulator weights over [v_bx v_by v_bz phi theta psi wx wy wz] and
# efforts over [aileron elevator rudder thrust].
lqr_q_diag: [16.0, 4.0, 4.0, 50.0, 50.0, 8.0, 10.0, 40.0, 40.0]
lqr_r_diag: [60.0, 60.0, 60.0, 0.5]

wind:
  nominal_speed: 0.0    # m/s, mean wind magnitude, blows along -X
  gust_fraction: 0.3    # 1, gust amplitude as a fraction of nominal speed
  filter_cutoff: 1.0    # Hz, first-order gust colouring filter
  seed: 0               # RNG seed for the gust stream

geometry:
  span: 1.68            # m, wing span
  area_wing: 0.317      # m^2, wing reference area
  area_tail: 0.059      # m^2, horizontal tail area
  area_fin: 0.024       # m^2, vertical fin area
  chord: 0.194          # m, mean aerodynamic chord
  chord_tail: 0.115     # m, tail chord
  arm_tail: 0.658       # m, CG-to-tail aero centre arm
  z_tail: 0.0           # m, tail vertical offset
  arm_fin: 0.657        # m, CG-to-fin arm
  z_fin: 0.1            # m, fin centre height above CG
  aspect_wing: 8.89     # 1, wing aspect ratio
  aspect_tail: 4.94     # 1, tail aspect ratio
  oswald: 0.8           # 1, span efficiency
  taper: 2.35           # 1, wing taper parameter
  x_ac: 0.25            # 1, aero centre, fraction of chord
  x_cg: 0.23            # 1, centre of gravity, fraction of chord
  eta_tail: 0.9         # 1, tail dynamic-pressure ratio
  eps_downwash: 0.203   # 1, downwash gradient at the tail
  v_tail: null          # 1, tail volume; null = derive from geometry
  v_fin: null           # 1, fin volume; null = derive from geometry

base_coeffs:
  slope_wing: 4.81      # 1/rad, wing lift-curve slope
  slope_tail: 4.07      # 1/rad, tail lift-curve slope
  slope_fin: 3.29       # 1/rad, fin lift-curve slope
  c_Y_beta: -0.17       # 1/rad, sideforce per sideslip
  c_l_wing: -0.0055     # 1/rad, wing dihedral-effect contribution (tabulated)
  c_n_beta: 0.0745      # 1/rad, weathercock stability
  c_L0_wing: 0.139      # 1, wing lift at zero alpha
  c_L0_tail: 0.0        # 1, tail lift at zero tail alpha
  c_d0_wing: 0.0115     # 1, wing parasite drag
  c_d0_tail: 0.0145     # 1, tail parasite drag
  d_l_aileron: 0.0061   # 1/deg, roll moment per aileron
  d_n_aileron: -0.00068 # 1/deg, yaw moment per aileron
  d_L_elevator: 0.048   # 1/deg, lift per elevator
  d_Y_rudder: 0.048     # 1/deg, sideforce per rudder
  d_L_flap: 0.015       # 1/deg, lift per flap
  d_d_flap: 0.00066     # 1/deg, drag per flap
  d_m_flap: -0.003      # 1/deg, pitch moment per flap
  d_L_brake: -0.015     # 1/deg, lift per brake
  d_d_brake: 0.008      # 1/deg, drag per brake
  d_m_brake: -0.001     # 1/deg, pitch moment per brake
  c_m0_extra: 0.0       # 1, residual zero-alpha pitching moment
  c_m_fuselage: 0.0     # 1/rad, fuselage pitch contribution

inertia:
  m: 1.2                # kg, glider mass
  I_xx: 0.0576          # kg m^2
  I_yy: 0.103           # kg m^2
  I_zz: 0.1598          # kg m^2
  I_zx: -0.00275        # kg m^2, roll/yaw product of inertia

tether:
  youngs_modulus: 5.3e9 # Pa, line material stiffness
  eps_break: 0.02       # 1, strain at break (sets axial stiffness scale)
  drag_coeff: 1.0       # 1, line drag coefficient
  diameter: 0.002       # m, line diameter
  r_winch: 0.1          # m, winch drum radius
  initial_length: 2.5   # m, line deployed before launch
  attach_body: [0.0, 0.0, 0.0]  # m, attachment point in body axes
  weight_half: 5.886    # N, half the line weight, carried by the aircraft

gs:
  r_M1: 0.1             # m, winch drum radius
  r_M2: 0.1             # m, slide pinion radius
  J_M1: 0.08            # kg m^2, winch inertia
  J_M2: 0.01            # kg m^2, slide motor inertia
  beta_M1: 0.04         # N m s, winch viscous friction
  beta_M2: 0.01         # N m s, slide motor viscous friction
  m_slide: 9.0          # kg, slide mass
  beta_slide: 0.6       # N s/m, slide rail friction
  m_aircraft: 1.2       # kg, glider mass while carried
  rail_length: 5.0      # m
  rail_width: 0.4       # m

gs_control:
  travel: 5.0           # m, slide reference travel
  delta_theta_launch: 3.141592653589793  # rad, winch lead during launch
  delta_theta_flight: 0.1                # rad, tension-servo offset in flight
  k_hat: 500.0          # N/rad-ish, assumed line stiffness for the servo
  sigma_tension: 0.05   # N, tension measurement noise, 1 sigma
  torque_limit: 30.0    # N m, both motors
  winch_gains: {k_p: 79.0, k_d: 3.5, friction_ff: 0.04}
  slide_gains: {k_p: 110.0, k_d: 4.8, friction_ff: 0.0}
  payout_decay: 6.0     # rad/s^2, ramp deceleration after first line contact
  payout_learn: 1.0     # rad/s^2 per N, ramp-rate gain on excess tension
  payout_rate_max: 150.0  # rad/s, fastest commanded payout rate
  reel_in_max: 120.0    # rad/s, fastest commanded reel-in rate
  detune_length: 50.0   # m, full winch-servo gain above this line length
  detune_floor: 0.05    # 1, minimum winch gain fraction at short line
  min_winch_ref: -20.0  # rad, winch reference floor (keeps line on the drum)
  line_length0: 2.5     # m, must match tether.initial_length
  r_M1: 0.1             # m, must match gs.r_M1
  r_M2: 0.1             # m, must match gs.r_M2

guidance:
  k_gamma: 10.0         # 1/s, flight-path angle loop gain
  k_beta: 40.0          # 1/s, final-approach alignment gain
  gamma_sat: 0.2617993877991494   # rad, path-angle saturation (15 deg)
  psi_filter_tau: 0.5   # s, heading reference filter time constant
  waypoint_radius: 25.0 # m, capture radius; keep above the turn radius
  launch_flap: 0.2617993877991494  # rad, flap during launch (15 deg)
  landing_brake: 0.12217304763960307  # rad, brake during landing (7 deg)
  landing_aim_ahead: 15.0  # m, lateral pursuit distance on final approach
  rate_ref_max: 1.2     # rad/s, bound on commanded body rates
  climb_speed_min: 9.0  # m/s, hold level flight below this airspeed
  climb_speed_full: 11.0  # m/s, unrestricted climb commands at/above this

limits:
  surface: 0.3490658503988659  # rad, control-surface deflection limit (20 deg)
  thrust_max: 9.0       # N, propulsion upper bound
"""
