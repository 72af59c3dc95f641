"""Sequential single-target tracker: evolution window feeding the EKF.

Each tick the tracker

1. estimates the turn geometry from its window of past filtered positions,
2. propagates the filter to the tick time with that geometry as input,
3. corrects with the measurement when one is present, and
4. appends the resulting estimate to the window.

Until the window is full the track is re-initialized from every measurement:
a turn fitted to a handful of noisy fixes is worse than no model at all.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from numpy.typing import ArrayLike

from .core import Mat2, Measurement, Vec2
from .ekf import (
    MAX_SUBSTEP,
    Dropout,
    FilterState,
    NoiseConfig,
    StepReport,
    check_p0,
    default_p0,
    init_from_measurement,
    process_measurement,
)
from .errors import DegenerateIncrements
from .evolution import (
    DEFAULT_WINDOW,
    CenterMode,
    CurvatureEstimate,
    ObservationWindow,
    arc_speed,
    curvature_center,
    window_evolution,
)

#: Turn estimates steeper than this per sample are treated as noise (rad).
MAX_TURN = 0.5


@dataclass(frozen=True)
class TrackStep:
    """One tick of tracker output; ``estimate`` is ``None`` before the first fix."""

    t: float
    measurement: Vec2 | None
    estimate: Vec2 | None
    P: Mat2 | None
    report: StepReport | None
    inputs: CurvatureEstimate | None


def default_stride(window: int) -> int:
    return max(1, window // 6)


def window_inputs(
    w: ObservationWindow,
    mode: CenterMode | str = CenterMode.MIDPOINT_CORRECTED,
    *,
    stride: int | None = None,
    span: int | None = None,
    max_turn: float = MAX_TURN,
) -> CurvatureEstimate:
    """Turn geometry for the EKF input.

    The turn angle comes from strided increments; the center and the arc
    speed come from the chord across ``span`` increments (the whole window by
    default). Long baselines keep both insensitive to position noise.

    A window without motion yields a stationary estimate; a turn steeper than
    ``max_turn`` per sample is replaced by straight-line motion.
    """
    stride = default_stride(len(w)) if stride is None else stride
    try:
        ev = window_evolution(w, stride)
    except DegenerateIncrements:
        return CurvatureEstimate(None, None, 0.0, 0.0, True, np.zeros(2))
    est = curvature_center(w, ev, mode, span=len(w) - 1 if span is None else span)
    est = replace(est, speed=arc_speed(w, ev, span))
    if abs(ev.delta) > max_turn:
        est = replace(est, center=None, radius=None, straight_line=True)
    return est


class Tracker:
    """Stateful driver around :func:`~turntrack.ekf.process_measurement`.

    Args:
        noise: Filter noise covariances.
        window: Capacity of the evolution window.
        center_mode: How the curvature center is placed.
        P0: Initial covariance; defaults to four times ``diag(R)``.
        joseph: Use the Joseph-form covariance update.
        max_substep: Longest integration substep in seconds.
        stride: Increment stride for the turn estimate; ``None`` picks
            ``window // 6``.
        span: Chord span for the center; ``None`` uses the whole window.
    """

    def __init__(
        self,
        noise: NoiseConfig,
        *,
        window: int = DEFAULT_WINDOW,
        center_mode: CenterMode | str = CenterMode.MIDPOINT_CORRECTED,
        P0: ArrayLike | None = None,
        joseph: bool = False,
        max_substep: float = MAX_SUBSTEP,
        stride: int | None = None,
        span: int | None = None,
    ):
        self.noise = noise
        self.center_mode = CenterMode(center_mode)
        self.P0 = default_p0(noise) if P0 is None else check_p0(P0)
        self.joseph = joseph
        self.max_substep = max_substep
        self.stride = default_stride(window) if stride is None else stride
        self.span = span
        self.window = ObservationWindow(window)
        self.state: FilterState | None = None

    @property
    def warmed_up(self) -> bool:
        return len(self.window) == self.window.capacity

    def step(self, t: float, pos: ArrayLike | None) -> TrackStep:
        """Process one tick; ``pos=None`` marks a dropout."""
        t = float(t)
        meas = None if pos is None else Measurement(t, pos)
        if not self.warmed_up:
            return self._warm_up(t, meas)
        inputs = window_inputs(self.window, self.center_mode, stride=self.stride, span=self.span)
        event = Dropout(t) if meas is None else meas
        self.state, report = process_measurement(
            self.state, event, inputs, self.noise, joseph=self.joseph, max_substep=self.max_substep
        )
        self.window = self.window.push(t, self.state.x_hat)
        return TrackStep(t, None if meas is None else meas.pos, self.state.x_hat, self.state.P, report, inputs)

    def _warm_up(self, t: float, meas: Measurement | None) -> TrackStep:
        if meas is None:
            # Hold the last fix without a motion model; the window only takes real fixes.
            if self.state is None:
                return TrackStep(t, None, None, None, None, None)
            return TrackStep(t, None, self.state.x_hat, self.state.P, None, None)
        self.state = init_from_measurement(meas, self.P0, self.noise)
        self.window = self.window.push(meas.t, meas.pos)
        return TrackStep(t, meas.pos, self.state.x_hat, self.state.P, None, None)
