"""Continuous-discrete extended Kalman filter for the coordinated-turn model.

Prediction integrates the state with classical RK4 and the covariance

    dP/dt = A P + P A^T + Q

with a first-order step on the same substep grid. Correction uses the
identity measurement Jacobian, so the gain is ``P (R + P)^-1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from numpy.typing import ArrayLike

from .core import InputVector, Mat2, Measurement, Vec2, as_mat2, dynamics_xy, h_measure, jacobian_c, jacobian_xy
from .errors import BadCovariance, NotInitialized, SingularInnovation
from .evolution import CurvatureEstimate

#: Longest allowed integration substep (s).
MAX_SUBSTEP = 0.01
#: Allowed mismatch between measurement time and filter time (s).
DT_TOLERANCE = 1e-6
DEFAULT_Q = 2.0


@dataclass(frozen=True)
class NoiseConfig:
    """Process noise density ``Q`` (m^2/s) and measurement noise ``R`` (m^2)."""

    Q: Mat2
    R: Mat2

    def __post_init__(self):
        Q = as_mat2(self.Q, "Q")
        R = as_mat2(self.R, "R")
        _check_symmetric(Q, "Q")
        _check_symmetric(R, "R")
        if np.linalg.eigvalsh(Q).min() < -1e-12 * max(np.trace(Q), 1.0):
            raise BadCovariance("Q must be positive semi-definite")
        if np.linalg.eigvalsh(R).min() <= 0.0:
            raise BadCovariance("R must be positive definite")
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "R", R)

    @classmethod
    def isotropic(cls, q: float = DEFAULT_Q, r: float = 1.0) -> NoiseConfig:
        return cls(q * np.eye(2), r * np.eye(2))


@dataclass(frozen=True)
class FilterState:
    x_hat: Vec2
    P: Mat2
    t: float
    initialized: bool = True


@dataclass(frozen=True)
class StepReport:
    """Outcome of one filter step; correction fields are ``None`` on dropout."""

    predicted: Vec2
    corrected: Vec2 | None = None
    gain: Mat2 | None = None
    innovation: Vec2 | None = None
    P_prior: Mat2 | None = None
    P_post: Mat2 | None = None
    u: InputVector | None = None


@dataclass(frozen=True)
class Dropout:
    """A tick at which no measurement arrived."""

    t: float


def _check_symmetric(M: np.ndarray, name: str, tol: float = 1e-9) -> None:
    scale = max(float(np.max(np.abs(M))), 1e-300)
    if np.max(np.abs(M - M.T)) > tol * scale:
        raise BadCovariance(f"{name} is not symmetric")


def _symmetrize(P: np.ndarray) -> np.ndarray:
    return 0.5 * (P + P.T)


def init_from_measurement(m: Measurement, P0: ArrayLike, noise: NoiseConfig | None = None) -> FilterState:
    """Start a track at the measured position with covariance ``P0``.

    Raises:
        BadCovariance: ``P0`` is asymmetric or not positive definite.
    """
    P0 = check_p0(P0)
    return FilterState(h_measure(m.pos), P0.copy(), m.t, True)


def check_p0(P0: ArrayLike) -> Mat2:
    """Validate an initial covariance: symmetric and positive definite."""
    P0 = as_mat2(P0, "P0")
    _check_symmetric(P0, "P0")
    if np.linalg.eigvalsh(_symmetrize(P0)).min() <= 0.0:
        raise BadCovariance("P0 must be positive definite")
    return P0


def default_p0(noise: NoiseConfig) -> Mat2:
    return 4.0 * np.diag(np.diag(noise.R))


def _substeps(dt: float, max_substep: float) -> int:
    return max(1, math.ceil(dt / max_substep - 1e-9))


def predict_step(
    f: FilterState,
    u: InputVector,
    dt: float,
    noise: NoiseConfig,
    *,
    max_substep: float = MAX_SUBSTEP,
) -> FilterState:
    """Propagate state and covariance through the turn dynamics for ``dt``.

    Raises:
        NotInitialized: ``f`` has not been initialized.
        DegenerateRadius: the trajectory reaches the curvature center.
    """
    if not f.initialized:
        raise NotInitialized("predict_step on an uninitialized filter")
    if not dt > 0.0:
        raise ValueError(f"dt must be positive; got {dt}")
    n = _substeps(dt, max_substep)
    h = dt / n
    v = u.speed
    ce, cn = float(u.center[0]), float(u.center[1])
    pe, pn = float(f.x_hat[0]), float(f.x_hat[1])
    (p00, p01), (p10, p11) = f.P
    (q00, q01), (q10, q11) = noise.Q
    for _ in range(n):
        a00, a01, a10, a11 = jacobian_xy(pe, pn, v, ce, cn)
        # First-order covariance step P <- F P F^T + h Q with F = I + h A taken
        # at the substep start. It matches an Euler step of the Riccati
        # equation up to the h^2 A P A^T term, which keeps P positive
        # semi-definite where the bare Euler step can lose it.
        f00, f01, f10, f11 = 1.0 + h * a00, h * a01, h * a10, 1.0 + h * a11
        m00 = f00 * p00 + f01 * p10
        m01 = f00 * p01 + f01 * p11
        m10 = f10 * p00 + f11 * p10
        m11 = f10 * p01 + f11 * p11
        p00, p01, p10, p11 = (
            m00 * f00 + m01 * f01 + h * q00,
            m00 * f10 + m01 * f11 + h * q01,
            m10 * f00 + m11 * f01 + h * q10,
            m10 * f10 + m11 * f11 + h * q11,
        )
        k1e, k1n = dynamics_xy(pe, pn, v, ce, cn)
        k2e, k2n = dynamics_xy(pe + 0.5 * h * k1e, pn + 0.5 * h * k1n, v, ce, cn)
        k3e, k3n = dynamics_xy(pe + 0.5 * h * k2e, pn + 0.5 * h * k2n, v, ce, cn)
        k4e, k4n = dynamics_xy(pe + h * k3e, pn + h * k3n, v, ce, cn)
        pe += h / 6.0 * (k1e + 2.0 * k2e + 2.0 * k3e + k4e)
        pn += h / 6.0 * (k1n + 2.0 * k2n + 2.0 * k3n + k4n)
    P = _symmetrize(np.array([[p00, p01], [p10, p11]]))
    return FilterState(np.array([pe, pn]), P, f.t + dt, True)


def predict_straight(
    f: FilterState,
    speed: float,
    direction: ArrayLike,
    dt: float,
    noise: NoiseConfig,
    *,
    max_substep: float = MAX_SUBSTEP,
) -> FilterState:
    """Straight-line propagation: constant velocity, ``A = 0`` in the Riccati step."""
    if not f.initialized:
        raise NotInitialized("predict_straight on an uninitialized filter")
    if not dt > 0.0:
        raise ValueError(f"dt must be positive; got {dt}")
    n = _substeps(dt, max_substep)
    h = dt / n
    P = f.P.copy()
    for _ in range(n):
        P = P + h * noise.Q
    x = f.x_hat + speed * dt * np.asarray(direction, dtype=np.float64)
    return FilterState(x, _symmetrize(P), f.t + dt, True)


def update_step(
    f: FilterState,
    m: Measurement,
    noise: NoiseConfig,
    *,
    joseph: bool = False,
    dt_tolerance: float = DT_TOLERANCE,
) -> tuple[FilterState, StepReport]:
    """Correct the state with a position measurement taken at ``f.t``.

    ``joseph=True`` uses ``(I - L C) P (I - L C)^T + L R L^T`` instead of
    ``(I - L C) P``.
    """
    if not f.initialized:
        raise NotInitialized("update_step on an uninitialized filter")
    if abs(m.t - f.t) > dt_tolerance:
        raise ValueError(f"measurement at t={m.t!r} does not match filter time {f.t!r}")
    C = jacobian_c()
    P = f.P
    S = noise.R + C @ P @ C.T
    try:
        # L = P C^T S^-1, solved as S^T L^T = C P^T.
        L = np.linalg.solve(S.T, C @ P.T).T
    except np.linalg.LinAlgError as exc:
        raise SingularInnovation("innovation covariance is singular") from exc
    innovation = m.pos - h_measure(f.x_hat)
    x = f.x_hat + L @ innovation
    IKC = np.eye(2) - L @ C
    if joseph:
        P_new = IKC @ P @ IKC.T + L @ noise.R @ L.T
    else:
        P_new = IKC @ P
    P_new = _symmetrize(P_new)
    report = StepReport(
        predicted=f.x_hat, corrected=x, gain=L, innovation=innovation, P_prior=P, P_post=P_new
    )
    return FilterState(x, P_new, f.t, True), report


def input_from_estimate(est: CurvatureEstimate) -> InputVector | None:
    """Input vector for a turning estimate; ``None`` for straight-line motion."""
    if est.straight_line:
        return None
    return InputVector(est.speed, est.center)


def process_measurement(
    f: FilterState,
    event: Measurement | Dropout,
    evolution_inputs: CurvatureEstimate,
    noise: NoiseConfig,
    *,
    joseph: bool = False,
    max_substep: float = MAX_SUBSTEP,
) -> tuple[FilterState, StepReport]:
    """Advance the filter to the event time and correct if a measurement is present."""
    if not f.initialized:
        raise NotInitialized("process_measurement on an uninitialized filter")
    dt = event.t - f.t
    if not dt > 0.0:
        raise ValueError(f"event at t={event.t!r} is not after filter time {f.t!r}")
    u = input_from_estimate(evolution_inputs)
    if u is None:
        prior = predict_straight(
            f, evolution_inputs.speed, evolution_inputs.direction, dt, noise, max_substep=max_substep
        )
    else:
        prior = predict_step(f, u, dt, noise, max_substep=max_substep)
    # Land exactly on the event time regardless of float accumulation.
    prior = replace(prior, t=event.t)
    if isinstance(event, Dropout):
        return prior, StepReport(predicted=prior.x_hat, P_prior=prior.P, P_post=prior.P, u=u)
    post, report = update_step(prior, event, noise, joseph=joseph)
    return post, replace(report, u=u)
