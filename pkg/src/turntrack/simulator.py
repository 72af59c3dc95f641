"""Deterministic ground-truth trajectories and measurement corruption.

Noise is drawn from a counter-based generator so that runs are reproducible
across platforms and can be regenerated by other implementations:

* bit generator: Philox4x64-10 with ``key = seed`` and the counter starting
  at zero (``numpy.random.Philox(key=seed)``), read through ``random_raw``;
* uniform: ``u = (raw >> 11) * 2**-53`` in ``[0, 1)``;
* per sample, three uniforms in order ``u1, u2, u3``; the noise is the
  Box-Muller pair ``sigma * sqrt(-2 ln(1 - u1)) * (cos 2 pi u2, sin 2 pi u2)``
  and the sample is dropped when ``u3 < dropout_prob``.

All three uniforms are consumed for every sample, dropped or not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .core import Vec2, as_vec2
from .errors import ConfigError

RNG_ALGORITHM = "philox4x64-10/boxmuller"

DEFAULT_SPEED = {"circle": 5.0, "lemniscate": 0.25}


@dataclass(frozen=True)
class ScenarioConfig:
    """Scenario parameters.

    For ``kind="circle"`` ``radius`` is the circle radius (m) and ``speed`` the
    tangential speed (m/s). For ``kind="lemniscate"`` they are the half-width
    ``a`` (m) and the parameter rate (rad/s) of the Gerono lemniscate.
    """

    kind: str = "circle"
    center: Vec2 = field(default_factory=lambda: np.zeros(2))
    radius: float = 10.0
    speed: float | None = None
    phase0: float = 0.0
    dt: float = 0.1
    steps: int = 600
    noise_sigma: float = 0.5
    dropout_prob: float = 0.0
    seed: int = 0
    t0: float = 0.0

    def __post_init__(self):
        if self.kind not in DEFAULT_SPEED:
            raise ConfigError(f"scenario kind must be 'circle' or 'lemniscate'; got {self.kind!r}")
        try:
            center = as_vec2(self.center, "center")
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        object.__setattr__(self, "center", center)
        if self.speed is None:
            object.__setattr__(self, "speed", DEFAULT_SPEED[self.kind])
        checks = [
            (math.isfinite(self.radius) and self.radius > 0, "radius must be > 0"),
            (math.isfinite(self.speed) and self.speed >= 0, "speed must be >= 0"),
            (self.kind == "circle" or self.speed > 0, "lemniscate parameter rate must be > 0"),
            (math.isfinite(self.dt) and self.dt > 0, "dt must be > 0"),
            (isinstance(self.steps, int) and self.steps >= 1, "steps must be an integer >= 1"),
            (math.isfinite(self.noise_sigma) and self.noise_sigma >= 0, "noise_sigma must be >= 0"),
            (0.0 <= self.dropout_prob <= 1.0, "dropout_prob must lie in [0, 1]"),
            (isinstance(self.seed, int) and 0 <= self.seed < 2**64, "seed must be an unsigned 64-bit integer"),
            (math.isfinite(self.phase0) and math.isfinite(self.t0), "phase0 and t0 must be finite"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)


@dataclass(frozen=True)
class TrackSample:
    """One tick: truth (if known) and the measurement (``None`` when dropped)."""

    t: float
    truth: Vec2 | None
    measurement: Vec2 | None

    @property
    def dropped(self) -> bool:
        return self.measurement is None


def _times(cfg: ScenarioConfig) -> np.ndarray:
    return cfg.t0 + cfg.dt * np.arange(cfg.steps)


def _samples(times: np.ndarray, truth: np.ndarray) -> list[TrackSample]:
    return [TrackSample(float(t), p, None) for t, p in zip(times, truth)]


def gen_circle(cfg: ScenarioConfig) -> list[TrackSample]:
    """Counter-clockwise circle at constant speed, truth only."""
    if cfg.kind != "circle":
        raise ConfigError(f"gen_circle needs kind='circle'; got {cfg.kind!r}")
    k = np.arange(cfg.steps)
    theta = cfg.phase0 + (cfg.speed / cfg.radius) * k * cfg.dt
    truth = cfg.center + cfg.radius * np.column_stack([np.cos(theta), np.sin(theta)])
    return _samples(_times(cfg), truth)


def gen_lemniscate(cfg: ScenarioConfig) -> list[TrackSample]:
    """Gerono figure-eight ``(a cos u, (a/2) sin 2u)`` at constant parameter rate."""
    if cfg.kind != "lemniscate":
        raise ConfigError(f"gen_lemniscate needs kind='lemniscate'; got {cfg.kind!r}")
    a = cfg.radius
    u = cfg.phase0 + cfg.speed * np.arange(cfg.steps) * cfg.dt
    truth = cfg.center + np.column_stack([a * np.cos(u), 0.5 * a * np.sin(2.0 * u)])
    return _samples(_times(cfg), truth)


def generate_truth(cfg: ScenarioConfig) -> list[TrackSample]:
    return gen_circle(cfg) if cfg.kind == "circle" else gen_lemniscate(cfg)


def uniform_stream(seed: int, n: int) -> np.ndarray:
    """``n`` uniforms in ``[0, 1)`` from the documented Philox stream."""
    raw = np.random.Philox(key=seed).random_raw(n)
    return (raw >> np.uint64(11)).astype(np.float64) * 2.0**-53


def corrupt(truth_track: list[TrackSample], cfg: ScenarioConfig) -> list[TrackSample]:
    """Add seeded Gaussian noise to each truth sample and drop some at random."""
    n = len(truth_track)
    u = uniform_stream(cfg.seed, 3 * n).reshape(n, 3)
    r = cfg.noise_sigma * np.sqrt(-2.0 * np.log1p(-u[:, 0]))
    noise = np.column_stack([r * np.cos(2.0 * np.pi * u[:, 1]), r * np.sin(2.0 * np.pi * u[:, 1])])
    out = []
    for sample, eps, u3 in zip(truth_track, noise, u[:, 2]):
        if u3 < cfg.dropout_prob:
            out.append(replace(sample, measurement=None))
        elif cfg.noise_sigma == 0.0:
            out.append(replace(sample, measurement=sample.truth.copy()))
        else:
            out.append(replace(sample, measurement=sample.truth + eps))
    return out


def simulate(cfg: ScenarioConfig) -> list[TrackSample]:
    """Truth plus corrupted measurements for a scenario."""
    return corrupt(generate_truth(cfg), cfg)

