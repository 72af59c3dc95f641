"""Two-phase trajectory prediction.

Observation phase: take the latest positions from a window and estimate the
per-sample turn angle from their increments. Prediction phase: keep turning
the latest increment by that angle and accumulate it onto the last position.
On a uniformly sampled circular arc this recurrence is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DegenerateIncrements, InsufficientData, NonUniformSampling
from .evolution import (
    DEFAULT_WINDOW,
    EPS_DELTA,
    EPS_INC,
    ObservationWindow,
    estimate_speed,
    window_evolution,
)

#: Allowed relative deviation of sampling intervals from their mean.
MAX_JITTER = 0.01


class PropagationMode(str, Enum):
    ROTATE = "rotate"  # rotate the observed chord increment
    ARC = "arc"  # step V * dt along the heading, advancing it by delta


@dataclass(frozen=True)
class PredictionConfig:
    """Prediction settings.

    ``step_dt=None`` predicts at the observed sampling interval. ``stride``
    is passed to :func:`~turntrack.evolution.window_evolution`.
    """

    window_len: int = DEFAULT_WINDOW
    horizon_steps: int = 20
    step_dt: float | None = None
    mode: PropagationMode = PropagationMode.ROTATE
    stride: int = 1

    def __post_init__(self):
        if self.window_len < 3:
            raise ValueError(f"window_len must be >= 3; got {self.window_len}")
        if self.horizon_steps < 1:
            raise ValueError(f"horizon_steps must be >= 1; got {self.horizon_steps}")
        if self.step_dt is not None and not self.step_dt > 0:
            raise ValueError(f"step_dt must be positive; got {self.step_dt}")
        if self.stride < 1:
            raise ValueError(f"stride must be >= 1; got {self.stride}")
        object.__setattr__(self, "mode", PropagationMode(self.mode))


@dataclass(frozen=True)
class PredictedTrajectory:
    start_t: float
    times: np.ndarray
    positions: np.ndarray

    def __len__(self) -> int:
        return len(self.times)


def heading_seed(w: ObservationWindow) -> float:
    """Heading ``theta`` of the latest increment, with ``d ~ (-sin theta, cos theta)``.

    ``theta = 0`` points north and increases counter-clockwise.
    """
    if len(w) < 2:
        raise InsufficientData(f"need at least 2 observations; window has {len(w)}")
    de, dn = w.positions[-1] - w.positions[-2]
    if math.hypot(de, dn) <= EPS_INC:
        raise DegenerateIncrements("latest increment is too short to define a heading")
    return math.atan2(-de, dn)


def _check_uniform(times: tuple[float, ...]) -> float:
    dts = np.diff(np.asarray(times))
    mean = float(dts.mean())
    if np.max(np.abs(dts - mean)) > MAX_JITTER * mean:
        raise NonUniformSampling(
            f"sampling intervals vary by more than {MAX_JITTER:.0%} "
            f"(min {dts.min():g} s, max {dts.max():g} s)"
        )
    return mean


def predict_horizon(w: ObservationWindow, cfg: PredictionConfig = PredictionConfig()) -> PredictedTrajectory:
    """Extrapolate the track ``cfg.horizon_steps`` steps past the window.

    Raises:
        InsufficientData: the window is shorter than ``cfg.window_len``.
        DegenerateIncrements: the observations show no motion.
        NonUniformSampling: sampling intervals jitter by more than 1%.
    """
    need = max(3, cfg.window_len)
    if len(w) < need:
        raise InsufficientData(f"need {need} observations for prediction; window has {len(w)}")
    obs = w.tail(cfg.window_len)
    dt_obs = _check_uniform(obs.times)
    step_dt = dt_obs if cfg.step_dt is None else float(cfg.step_dt)
    scale = step_dt / dt_obs
    ev = window_evolution(obs, cfg.stride)
    delta = 0.0 if abs(ev.delta) < EPS_DELTA else ev.delta
    step_turn = delta * scale

    last = obs.positions[-1]
    d = obs.positions[-1] - obs.positions[-2]
    length = math.hypot(d[0], d[1])
    if length <= EPS_INC:
        raise DegenerateIncrements("latest increment is too short to extrapolate")

    if cfg.mode is PropagationMode.ARC:
        step_len = estimate_speed(obs) * step_dt
    elif delta == 0.0:
        step_len = length * scale
    else:
        # Chord of the new step on the same circle.
        step_len = length * math.sin(0.5 * step_turn) / math.sin(0.5 * delta)

    # The latest chord points along the mid-interval heading; the next one is
    # half an observed turn plus half a predicted turn further round.
    heading = math.atan2(d[1], d[0]) + 0.5 * (delta + step_turn)
    if scale == 1.0 and cfg.mode is PropagationMode.ROTATE:
        # Same step as observed: rotate the chord itself, which keeps the
        # recurrence exact without trigonometric round trips.
        c, s = (ev.c, ev.s) if delta != 0.0 else (1.0, 0.0)
        inc = np.array([c * d[0] - s * d[1], s * d[0] + c * d[1]])
    else:
        inc = step_len * np.array([math.cos(heading), math.sin(heading)])
        c, s = math.cos(step_turn), math.sin(step_turn)

    n = cfg.horizon_steps
    positions = np.empty((n, 2))
    p = last.copy()
    for i in range(n):
        if i:
            inc = np.array([c * inc[0] - s * inc[1], s * inc[0] + c * inc[1]])
        p = p + inc
        positions[i] = p
    start_t = obs.times[-1]
    times = start_t + step_dt * np.arange(1, n + 1)
    return PredictedTrajectory(start_t, times, positions)
