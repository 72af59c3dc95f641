"""Least-squares turn estimation from a sliding window of positions.

Consecutive position increments of a target on a circular arc, sampled at a
uniform rate, are related by a fixed rotation:

    d[j] = R(delta) @ d[j-1],   R(delta) = [[cos, -sin], [sin, cos]].

Stacking every consecutive pair in the window gives an overdetermined linear
system in ``(c, s) = (cos delta, sin delta)``. Its solution yields the
per-sample turn angle, from which the radius and the instantaneous curvature
center follow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from numpy.typing import ArrayLike

from .core import Vec2, as_vec2
from .errors import DegenerateIncrements, InsufficientData, NonMonotoneTime

DEFAULT_WINDOW = 20
#: Turn angles below this magnitude are treated as straight-line motion (rad).
EPS_DELTA = 1e-4
#: Increments shorter than this are treated as zero motion (m).
EPS_INC = 1e-9
_MAX_CHORD_TURN = 2.0 * math.pi / 3.0
_MAX_STRIDED_TURN = 0.5 * math.pi


class CenterMode(str, Enum):
    RAW = "raw"
    MIDPOINT_CORRECTED = "midpoint_corrected"


@dataclass(frozen=True)
class ObservationWindow:
    """Bounded, time-ordered buffer of ``(t, position)`` observations.

    The window is a value: :meth:`push` returns a new window and leaves the
    original untouched.
    """

    capacity: int = DEFAULT_WINDOW
    times: tuple[float, ...] = ()
    positions: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))

    def __post_init__(self):
        if self.capacity < 3:
            raise ValueError(f"window capacity must be >= 3; got {self.capacity}")
        pos = np.array(self.positions, dtype=np.float64).reshape(-1, 2)
        if len(pos) != len(self.times):
            raise ValueError("times and positions must have equal length")
        if len(pos) > self.capacity:
            raise ValueError("window holds more samples than its capacity")
        if np.any(np.diff(self.times) <= 0):
            raise NonMonotoneTime("window timestamps must strictly increase")
        pos.flags.writeable = False
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        object.__setattr__(self, "positions", pos)

    def __len__(self) -> int:
        return len(self.times)

    @property
    def last_time(self) -> float | None:
        return self.times[-1] if self.times else None

    def push(self, t: float, pos: ArrayLike) -> ObservationWindow:
        return push_observation(self, t, pos)

    @classmethod
    def _trusted(cls, capacity: int, times: tuple[float, ...], positions: np.ndarray) -> ObservationWindow:
        # Skips validation for windows derived from an already valid one.
        w = object.__new__(cls)
        positions.flags.writeable = False
        object.__setattr__(w, "capacity", capacity)
        object.__setattr__(w, "times", times)
        object.__setattr__(w, "positions", positions)
        return w

    def tail(self, n: int) -> ObservationWindow:
        """The ``n`` most recent observations as a window of capacity ``n``."""
        n = min(n, len(self))
        start = len(self) - n
        return ObservationWindow._trusted(max(n, 3), self.times[start:], self.positions[start:].copy())


@dataclass(frozen=True)
class EvolutionMatrix:
    """Unit-norm ``(cos delta, sin delta)`` pair and the turn angle itself."""

    c: float
    s: float
    delta: float

    def rotate(self, v: ArrayLike) -> Vec2:
        e, n = v
        return np.array([self.c * e - self.s * n, self.s * e + self.c * n])


@dataclass(frozen=True)
class CurvatureEstimate:
    """Turn geometry recovered from a window.

    ``center`` and ``radius`` are ``None`` when ``straight_line`` is set.
    ``direction`` is the unit heading of the latest increment (zero for a
    stationary target) and drives straight-line propagation.
    """

    center: Vec2 | None
    radius: float | None
    speed: float
    delta: float
    straight_line: bool
    direction: Vec2


def push_observation(w: ObservationWindow, t: float, pos: ArrayLike) -> ObservationWindow:
    """Append an observation, evicting the oldest one when full.

    Raises:
        NonMonotoneTime: if ``t`` does not exceed the latest timestamp.
    """
    t = float(t)
    if not math.isfinite(t):
        raise ValueError(f"timestamp must be finite; got {t}")
    p = as_vec2(pos, "position")
    if w.times and t <= w.times[-1]:
        raise NonMonotoneTime(f"timestamp {t!r} does not exceed previous {w.times[-1]!r}")
    times = w.times + (t,)
    positions = np.vstack([w.positions, p[None, :]])
    if len(times) > w.capacity:
        times = times[1:]
        positions = positions[1:]
    return ObservationWindow._trusted(w.capacity, times, positions)


def build_increments(w: ObservationWindow) -> np.ndarray:
    """Consecutive position differences, oldest first, shape ``(len-1, 2)``."""
    if len(w) < 2:
        raise InsufficientData(f"need at least 2 observations; window has {len(w)}")
    return np.diff(w.positions, axis=0)


def stride_increments(w: ObservationWindow, stride: int = 1) -> np.ndarray:
    """Differences ``p[i + stride] - p[i]`` over the window, oldest first."""
    if stride < 1:
        raise ValueError(f"stride must be >= 1; got {stride}")
    if len(w) < stride + 1:
        raise InsufficientData(f"need at least {stride + 1} observations; window has {len(w)}")
    return w.positions[stride:] - w.positions[:-stride]


def least_squares_rotation(increments: ArrayLike, lag: int = 1) -> tuple[float, float]:
    """Unnormalized least-squares ``(c, s)`` for ``d[j] ~ c d[j-lag] + s perp(d[j-lag])``.

    The two regressors ``d`` and ``perp(d)`` are orthogonal with equal norm, so
    the 2x2 normal matrix is ``sum |d[j-lag]|^2 * I`` and the solve reduces to
    two projections. Increments are scaled by their mean norm first.
    """
    d = np.asarray(increments, dtype=np.float64).reshape(-1, 2)
    if lag < 1:
        raise ValueError(f"lag must be >= 1; got {lag}")
    if len(d) < lag + 1:
        raise InsufficientData(f"need at least {lag + 1} increments; got {len(d)}")
    norms = np.hypot(d[:, 0], d[:, 1])
    if not np.any(norms > EPS_INC):
        raise DegenerateIncrements("all increments are below the motion threshold")
    d = d / norms.mean()
    prev, nxt = d[:-lag], d[lag:]
    gram = float(np.sum(prev * prev))
    if gram <= 0.0:
        raise DegenerateIncrements("regressor increments are all zero")
    c = float(np.sum(nxt[:, 0] * prev[:, 0] + nxt[:, 1] * prev[:, 1])) / gram
    s = float(np.sum(nxt[:, 1] * prev[:, 0] - nxt[:, 0] * prev[:, 1])) / gram
    return c, s


def evolution_residual(increments: ArrayLike, c: float, s: float, lag: int = 1) -> float:
    """Euclidean norm of the stacked residual for a candidate ``(c, s)``."""
    d = np.asarray(increments, dtype=np.float64).reshape(-1, 2)
    prev, nxt = d[:-lag], d[lag:]
    pred_e = c * prev[:, 0] - s * prev[:, 1]
    pred_n = s * prev[:, 0] + c * prev[:, 1]
    return float(np.sqrt(np.sum((nxt[:, 0] - pred_e) ** 2 + (nxt[:, 1] - pred_n) ** 2)))


def solve_evolution(increments: ArrayLike, lag: int = 1) -> EvolutionMatrix:
    """Estimate the rotation between increments ``lag`` rows apart.

    The least-squares solution is projected onto the unit circle so that it is
    a proper rotation, and ``delta = atan2(s, c)``.

    Raises:
        InsufficientData: fewer than ``lag + 1`` increments.
        DegenerateIncrements: no usable motion in the increments.
    """
    c, s = least_squares_rotation(increments, lag)
    norm = math.hypot(c, s)
    if norm == 0.0:
        raise DegenerateIncrements("least-squares rotation is zero")
    c /= norm
    s /= norm
    return EvolutionMatrix(c, s, math.atan2(s, c))


def window_evolution(w: ObservationWindow, stride: int = 1) -> EvolutionMatrix:
    """Per-sample evolution matrix from strided increments.

    Increments spanning ``stride`` samples rotate by ``stride * delta`` every
    ``stride`` rows, and are ``stride`` times longer than single-step
    increments, so noise perturbs their direction proportionally less. The
    stride is reduced when the window is too short to pair any increments,
    and so that the strided rotation stays within a quarter turn, judged by
    the consecutive-increment solve. ``stride=1`` is the plain
    consecutive-increment solve.
    """
    stride = max(1, min(stride, (len(w) - 1) // 2))
    if stride == 1:
        return solve_evolution(build_increments(w))
    coarse = solve_evolution(build_increments(w))
    if coarse.delta != 0.0:
        stride = max(1, min(stride, int(_MAX_STRIDED_TURN / abs(coarse.delta))))
    if stride == 1:
        return coarse
    ev = solve_evolution(stride_increments(w, stride), lag=stride)
    delta = ev.delta / stride
    return EvolutionMatrix(math.cos(delta), math.sin(delta), delta)


def estimate_speed(w: ObservationWindow) -> float:
    """Mean chord speed ``|d pos| / dt`` over the window."""
    if len(w) < 2:
        raise InsufficientData(f"need at least 2 observations; window has {len(w)}")
    d = np.diff(w.positions, axis=0)
    dt = np.diff(np.asarray(w.times))
    return float(np.mean(np.hypot(d[:, 0], d[:, 1]) / dt))


def _chord_span(w: ObservationWindow, delta: float, span: int | None) -> int:
    span = len(w) - 1 if span is None else span
    if delta != 0.0:
        span = min(span, int(_MAX_CHORD_TURN / abs(delta)))
    return max(1, min(span, len(w) - 1))


def arc_speed(w: ObservationWindow, ev: EvolutionMatrix, span: int | None = None) -> float:
    """Speed along the arc from the chord across the last ``span`` increments.

    The chord length is divided by elapsed time and by ``sinc`` of half the
    turn it subtends, which is exact on a uniformly traversed circle. Unlike
    the mean of per-step chord speeds it is not inflated by position noise.
    ``span`` defaults to the whole window and is capped like the center chord.
    """
    if len(w) < 2:
        raise InsufficientData(f"need at least 2 observations; window has {len(w)}")
    span = _chord_span(w, ev.delta, span)
    chord = w.positions[-1] - w.positions[-1 - span]
    elapsed = w.times[-1] - w.times[-1 - span]
    half = 0.5 * span * ev.delta
    arc = half / math.sin(half) if abs(half) > 1e-12 else 1.0
    return math.hypot(chord[0], chord[1]) / elapsed * arc


def curvature_center(
    w: ObservationWindow,
    ev: EvolutionMatrix,
    mode: CenterMode | str = CenterMode.MIDPOINT_CORRECTED,
    *,
    span: int = 1,
) -> CurvatureEstimate:
    """Recover the curvature center, radius and speed from the latest increment.

    ``raw`` places the center at ``p + perp(d) / delta`` from the latest
    position, which is biased by about ``r * delta / 2`` because the chord
    heading lags the heading at ``p``. ``midpoint_corrected`` drops the
    perpendicular from the chord midpoint at distance ``|d| / (2 tan(delta/2))``,
    which is exact for circular arcs.

    With ``span > 1`` the midpoint construction uses the chord across the
    last ``span`` increments, which turns by ``span * delta``. A longer
    baseline makes the center far less sensitive to position noise. The span
    is capped by the window length and so that the chord turns by at most
    120 degrees. ``raw`` mode always uses the latest increment.
    """
    mode = CenterMode(mode)
    if len(w) < 2:
        raise InsufficientData(f"need at least 2 observations; window has {len(w)}")
    if span < 1:
        raise ValueError(f"span must be >= 1; got {span}")
    p_prev, p_last = w.positions[-2], w.positions[-1]
    d = p_last - p_prev
    length = math.hypot(d[0], d[1])
    speed = length / (w.times[-1] - w.times[-2])
    direction = d / length if length > EPS_INC else np.zeros(2)
    delta = ev.delta
    if abs(delta) < EPS_DELTA or length <= EPS_INC:
        return CurvatureEstimate(None, None, speed, delta, True, direction)

    if mode is CenterMode.RAW:
        center = p_last + np.array([-d[1], d[0]]) / delta
        radius = length / (2.0 * abs(math.sin(0.5 * delta)))
        return CurvatureEstimate(center, radius, speed, delta, False, direction)

    span = _chord_span(w, delta, span)
    p_start = w.positions[-1 - span]
    chord = p_last - p_start
    turn = span * delta
    perp = np.array([-chord[1], chord[0]])
    center = 0.5 * (p_start + p_last) + perp / (2.0 * math.tan(0.5 * turn))
    radius = math.hypot(chord[0], chord[1]) / (2.0 * abs(math.sin(0.5 * turn)))
    return CurvatureEstimate(center, radius, speed, delta, False, direction)
