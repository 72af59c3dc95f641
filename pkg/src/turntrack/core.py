"""Coordinated-turn process and measurement models.

The state is the planar target position ``(e, n)`` in the east-north plane.
The input is the target speed together with the instantaneous curvature
center; the target is assumed to move tangentially around that center, so

    d/dt (e, n) = V * (-(n - n0), e - e0) / rho,    rho = |(e, n) - (e0, n0)|.

Vectors are plain ``numpy`` arrays of shape ``(2,)`` ordered ``(e, n)``;
matrices are ``(2, 2)`` arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DegenerateRadius

Vec2 = NDArray[np.float64]
Mat2 = NDArray[np.float64]

#: Minimum admissible distance between target and curvature center (m).
EPS_RADIUS = 1e-6


def as_vec2(value: ArrayLike, name: str = "vector") -> Vec2:
    """Coerce ``value`` to a finite float array of shape (2,)."""
    arr = np.asarray(value, dtype=np.float64).reshape(-1)
    if arr.shape != (2,):
        raise ValueError(f"{name} must have 2 components; got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite; got {arr}")
    return arr


def as_mat2(value: ArrayLike, name: str = "matrix") -> Mat2:
    """Coerce ``value`` to a finite float array of shape (2, 2).

    Scalars are broadcast onto the diagonal.
    """
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim == 0:
        arr = float(arr) * np.eye(2)
    elif arr.shape == (2,):
        arr = np.diag(arr)
    if arr.shape != (2, 2):
        raise ValueError(f"{name} must be 2x2; got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


@dataclass(frozen=True)
class InputVector:
    """Speed along the arc and instantaneous curvature center."""

    speed: float
    center: Vec2

    def __post_init__(self):
        speed = float(self.speed)
        if not math.isfinite(speed) or speed < 0.0:
            raise ValueError(f"speed must be finite and >= 0; got {self.speed}")
        object.__setattr__(self, "speed", speed)
        object.__setattr__(self, "center", as_vec2(self.center, "center"))


@dataclass(frozen=True)
class Measurement:
    """Timestamped position measurement, already in the inertial plane."""

    t: float
    pos: Vec2

    def __post_init__(self):
        t = float(self.t)
        if not math.isfinite(t):
            raise ValueError(f"measurement time must be finite; got {self.t}")
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "pos", as_vec2(self.pos, "measurement"))


def _radius_vector(pe: float, pn: float, ce: float, cn: float) -> tuple[float, float, float]:
    de = pe - ce
    dn = pn - cn
    rho = math.hypot(de, dn)
    if not rho > EPS_RADIUS:
        raise DegenerateRadius(
            f"target at ({pe:g}, {pn:g}) is within {EPS_RADIUS:g} m of the curvature center"
        )
    return de, dn, rho


def dynamics_xy(pe: float, pn: float, speed: float, ce: float, cn: float) -> tuple[float, float]:
    """Scalar form of :func:`f_dynamics`, used in the integration loops."""
    de, dn, rho = _radius_vector(pe, pn, ce, cn)
    k = speed / rho
    return -k * dn, k * de


def jacobian_xy(
    pe: float, pn: float, speed: float, ce: float, cn: float
) -> tuple[float, float, float, float]:
    """Scalar form of :func:`jacobian_a`, returned row-major."""
    de, dn, rho = _radius_vector(pe, pn, ce, cn)
    k = speed / rho**3
    return k * dn * de, -k * de * de, k * dn * dn, -k * de * dn


def f_dynamics(pos: ArrayLike, u: InputVector) -> Vec2:
    """Velocity of the target under the coordinated-turn model.

    The result has magnitude ``u.speed`` and is perpendicular to the radius
    vector, turning counter-clockwise about ``u.center``.

    Raises:
        DegenerateRadius: if the target is within ``EPS_RADIUS`` of the center.
    """
    pe, pn = as_vec2(pos, "position")
    return np.array(dynamics_xy(pe, pn, u.speed, u.center[0], u.center[1]))


def jacobian_a(pos: ArrayLike, u: InputVector) -> Mat2:
    """Analytic Jacobian of :func:`f_dynamics` with respect to position."""
    pe, pn = as_vec2(pos, "position")
    return np.array(jacobian_xy(pe, pn, u.speed, u.center[0], u.center[1])).reshape(2, 2)


def h_measure(pos: ArrayLike) -> Vec2:
    """Measurement model: the sensor observes position directly."""
    return as_vec2(pos, "position").copy()


def jacobian_c() -> Mat2:
    """Jacobian of :func:`h_measure` (the 2x2 identity)."""
    return np.eye(2)
