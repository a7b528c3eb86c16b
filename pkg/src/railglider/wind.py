"""Seedable wind model: steady headwind plus bounded, filtered gusts.

The nominal wind blows along -X (toward the launch rig).  Gusts are built
from uniform zero-mean innovations pushed through a first-order low-pass
and then hard-limited to a fraction of the nominal speed, one independent
channel per axis.  Every sequence is a pure function of (seed, step index),
which keeps batch runs reproducible across platforms and worker counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class WindConfig:
    nominal_speed: float = 0.0   # m/s, applied along -X
    gust_fraction: float = 0.3
    filter_cutoff: float = 1.0   # Hz
    seed: int = 0

    def __post_init__(self) -> None:
        if self.nominal_speed < 0.0:
            raise ValueError("nominal speed must be nonnegative")
        if not 0.0 <= self.gust_fraction <= 1.0:
            raise ValueError("gust fraction must lie in [0, 1]")
        if self.filter_cutoff <= 0.0:
            raise ValueError("filter cutoff must be positive")

    @property
    def gust_amplitude(self) -> float:
        return self.gust_fraction * self.nominal_speed


@dataclass
class GustState:
    """Per-episode filter memory and RNG stream."""

    rng: np.random.Generator
    filt: np.ndarray = field(default_factory=lambda: np.zeros(3))

    @classmethod
    def from_seed(cls, seed: int) -> "GustState":
        return cls(rng=np.random.Generator(np.random.PCG64(seed)))


def filter_alpha(cutoff_hz: float, dt: float) -> float:
    """Discrete first-order low-pass coefficient for a given cutoff."""
    return 1.0 - math.exp(-2.0 * math.pi * cutoff_hz * dt)


def wind_sample(cfg: WindConfig, gs: GustState, dt: float) -> np.ndarray:
    """Advance the gust filters one step and return the inertial wind vector.

    Mutates gs (filter memory and RNG position).  The innovation is uniform
    on ±amplitude, the filter output is clamped to the same band, so the
    bound holds exactly at every step.
    """
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    amp = cfg.gust_amplitude
    wind = np.array([-cfg.nominal_speed, 0.0, 0.0])
    if amp == 0.0:
        # keep the stream position independent of amplitude
        gs.rng.uniform(-1.0, 1.0, size=3)
        return wind
    innov = amp * gs.rng.uniform(-1.0, 1.0, size=3)
    a = filter_alpha(cfg.filter_cutoff, dt)
    gs.filt += a * (innov - gs.filt)
    np.clip(gs.filt, -amp, amp, out=gs.filt)
    return wind + gs.filt


def gust_innovations(cfg: WindConfig, n_steps: int) -> np.ndarray:
    """All innovations for an episode in one draw, shape (n_steps, 3).

    Uses the same stream order as repeated wind_sample calls, so filtering
    these with filter_alpha reproduces the stepwise sequence bit for bit.
    """
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    u = rng.uniform(-1.0, 1.0, size=(n_steps, 3))
    return cfg.gust_amplitude * u
