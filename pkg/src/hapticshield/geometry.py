"""Differentiable safety fields and vehicle dynamics.

A safety field assigns a scalar clearance h(q) to every position q, with

    h(q) > 0   strictly safe,
    h(q) = 0   on the boundary,
    h(q) < 0   in violation.

Constraint construction needs h up to second order, so every field exposes
analytic gradients and Hessians. Three families cover the scenarios used
here:

* ``Plane``          h(q) = (q - c) . n_hat           (walls, floors)
* ``Superellipsoid`` h(q) = sum_k ((q_k - c_k)/a_k)^n - 1
* ``SphereMargin``   h(q) = ||q - c|| - d_min         (keep-out distance)

The superellipsoid exponent n is even so h is smooth everywhere; n = 2 is an
ellipsoid, larger n approaches the axis-aligned box with half-extents a.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np


class DegeneratePoint(ValueError):
    """A field derivative was requested where it is undefined."""


def as_vec3(v) -> np.ndarray:
    """Coerce to a finite float (3,) array; raises ValueError otherwise."""
    out = np.asarray(v, dtype=float)
    if out.shape != (3,):
        out = out.reshape(3)
    if not np.all(np.isfinite(out)):
        raise ValueError(f"non-finite 3-vector: {out!r}")
    return out


@dataclass(frozen=True)
class Plane:
    """Halfspace boundary through ``center`` with unit outward ``normal``.

    Safe side is the one the normal points into: h = (q - center) . normal.
    """

    center: np.ndarray
    normal: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "center", as_vec3(self.center))
        n = as_vec3(self.normal)
        nn = float(np.linalg.norm(n))
        if abs(nn - 1.0) > 1e-9:
            raise ValueError(f"plane normal must be unit length, got ||n||={nn}")
        object.__setattr__(self, "normal", n)


@dataclass(frozen=True)
class Superellipsoid:
    """Axis-aligned superellipsoid obstacle.

    h(q) = sum_k ((q_k - c_k)/a_k)^n - 1, so h = 0 is the surface and the
    interior is negative. ``exponent`` must be even and >= 2 to keep h
    C^2 everywhere (odd powers would break symmetry and smoothness at the
    center planes).
    """

    center: np.ndarray
    scale: np.ndarray
    exponent: int = 2

    def __post_init__(self):
        object.__setattr__(self, "center", as_vec3(self.center))
        a = as_vec3(self.scale)
        if np.any(a <= 0):
            raise ValueError(f"scale must be positive, got {a}")
        object.__setattr__(self, "scale", a)
        n = int(self.exponent)
        if n < 2 or n % 2 != 0:
            raise ValueError(f"exponent must be even and >= 2, got {self.exponent}")
        object.__setattr__(self, "exponent", n)


@dataclass(frozen=True)
class SphereMargin:
    """Minimum-distance field around a point: h(q) = ||q - center|| - d_min."""

    center: np.ndarray
    d_min: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_vec3(self.center))
        if not (float(self.d_min) > 0):
            raise ValueError(f"d_min must be positive, got {self.d_min}")
        object.__setattr__(self, "d_min", float(self.d_min))


SafetyField = Union[Plane, Superellipsoid, SphereMargin]


def eval_h(field: SafetyField, q) -> float:
    """Clearance value h(q). Negative means the position violates the field."""
    q = as_vec3(q)
    if isinstance(field, Plane):
        return float((q - field.center) @ field.normal)
    if isinstance(field, Superellipsoid):
        s = (q - field.center) / field.scale
        return float(np.sum(s**field.exponent) - 1.0)
    if isinstance(field, SphereMargin):
        return float(np.linalg.norm(q - field.center) - field.d_min)
    raise TypeError(f"unknown field type {type(field).__name__}")


def grad_h(field: SafetyField, q) -> np.ndarray:
    """Analytic gradient of h at q.

    Plane: the normal itself. Superellipsoid, componentwise:
    (n/a_k) * ((q_k-c_k)/a_k)^(n-1). SphereMargin: the unit radial vector,
    undefined at the center (DegeneratePoint).
    """
    q = as_vec3(q)
    if isinstance(field, Plane):
        return field.normal.copy()
    if isinstance(field, Superellipsoid):
        s = (q - field.center) / field.scale
        n = field.exponent
        return (n / field.scale) * s ** (n - 1)
    if isinstance(field, SphereMargin):
        r = q - field.center
        d = float(np.linalg.norm(r))
        if d < 1e-12:
            raise DegeneratePoint("sphere-margin gradient undefined at the center")
        return r / d
    raise TypeError(f"unknown field type {type(field).__name__}")


def hess_h(field: SafetyField, q) -> np.ndarray:
    """Analytic Hessian of h at q, as a (3, 3) array.

    Plane: zero. Superellipsoid: diagonal with entries
    n(n-1)/a_k^2 * ((q_k-c_k)/a_k)^(n-2). SphereMargin:
    (I - r_hat r_hat^T)/||q - c||, the curvature of the distance function.
    """
    q = as_vec3(q)
    if isinstance(field, Plane):
        return np.zeros((3, 3))
    if isinstance(field, Superellipsoid):
        s = (q - field.center) / field.scale
        n = field.exponent
        diag = (n * (n - 1) / field.scale**2) * s ** (n - 2)
        return np.diag(diag)
    if isinstance(field, SphereMargin):
        r = q - field.center
        d = float(np.linalg.norm(r))
        if d < 1e-12:
            raise DegeneratePoint("sphere-margin Hessian undefined at the center")
        rh = r / d
        return (np.eye(3) - np.outer(rh, rh)) / d
    raise TypeError(f"unknown field type {type(field).__name__}")


def field_center(field: SafetyField) -> np.ndarray:
    """Reference point of a field (used as the hazard direction anchor)."""
    return field.center.copy()


# -- vehicle model ---------------------------------------------------------


@dataclass(frozen=True)
class UavState:
    """Double-integrator state: position q and velocity qdot, world frame."""

    q: np.ndarray
    qdot: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "q", as_vec3(self.q))
        object.__setattr__(self, "qdot", as_vec3(self.qdot))


def step_dynamics(state: UavState, u, dt: float, v_max: float = 5.0) -> UavState:
    """One semi-implicit Euler step of the acceleration-driven point mass.

        qdot' = clamp(qdot + u*dt, v_max)     (norm clamp)
        q'    = q + qdot'*dt

    The velocity is updated first and the new velocity moves the position,
    which keeps the discretization slightly dissipative. The speed clamp
    models rotor limits: the velocity direction is kept, only the magnitude
    saturates at v_max.
    """
    if not (dt > 0) or not np.isfinite(dt):
        raise ValueError(f"dt must be positive and finite, got {dt}")
    if not (v_max > 0):
        raise ValueError(f"v_max must be positive, got {v_max}")
    qdot = state.qdot + as_vec3(u) * dt
    speed = float(np.linalg.norm(qdot))
    if speed > v_max:
        qdot = qdot * (v_max / speed)
    return UavState(q=state.q + qdot * dt, qdot=qdot)
