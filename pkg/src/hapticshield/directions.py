"""Canonical cue directions and the actuator layout container.

Cue directions live on the unit sphere in the body frame (x forward, y left,
z up) and are indexed by polar angle theta (from body-up) and azimuth phi
(from body-forward, positive toward the left). The canonical set is the
4 x 8 grid

    theta in {pi/6, pi/3, pi/2, 2pi/3}
    phi   in {-3pi/4, -pi/2, -pi/4, 0, pi/4, pi/2, 3pi/4, pi}

ordered theta-major then phi ascending, 32 directions total. The steep
downward ring (theta = 5pi/6) is omitted: the legs are not instrumented.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

THETA_RINGS = (math.pi / 6, math.pi / 3, math.pi / 2, 2 * math.pi / 3)
PHI_SLOTS = (
    -3 * math.pi / 4,
    -math.pi / 2,
    -math.pi / 4,
    0.0,
    math.pi / 4,
    math.pi / 2,
    3 * math.pi / 4,
    math.pi,
)
N_DIRECTIONS = len(THETA_RINGS) * len(PHI_SLOTS)

LAYOUT_HEADER = ["index", "theta", "phi", "rx", "ry", "rz", "px", "py", "pz"]


def spherical_to_direction(theta: float, phi: float) -> np.ndarray:
    """Unit vector for polar angle theta (from +z) and azimuth phi (from +x).

        r = (sin t cos p, sin t sin p, cos t)
    """
    st = math.sin(theta)
    return np.array([st * math.cos(phi), st * math.sin(phi), math.cos(theta)])


def canonical_angles() -> list[tuple[float, float]]:
    """The 32 (theta, phi) pairs in canonical order."""
    return [(t, p) for t in THETA_RINGS for p in PHI_SLOTS]


def canonical_directions() -> np.ndarray:
    """(32, 3) array of unit direction vectors in canonical order."""
    return np.stack([spherical_to_direction(t, p) for t, p in canonical_angles()])


def rotate_world_to_body(v: np.ndarray, yaw: float) -> np.ndarray:
    """Express a world-frame vector in the body frame of a craft at ``yaw``.

    Only heading is modeled (hover-class vehicle), so this is a rotation by
    -yaw about z.
    """
    c, s = math.cos(yaw), math.sin(yaw)
    # R_z(-yaw) @ v
    return np.array([c * v[0] + s * v[1], -s * v[0] + c * v[1], v[2]])


@dataclass(frozen=True)
class ActuatorLayout:
    """The 32 cue directions plus, once fitted, their body-surface positions.

    ``angles`` holds (theta, phi) per channel, ``directions`` the matching
    unit vectors, and ``positions`` is None until a layout has been fitted
    or loaded.
    """

    angles: tuple
    directions: np.ndarray
    positions: Optional[np.ndarray] = None

    def __post_init__(self):
        dirs = np.asarray(self.directions, dtype=float)
        if dirs.shape != (N_DIRECTIONS, 3):
            raise ValueError(f"expected ({N_DIRECTIONS}, 3) directions, got {dirs.shape}")
        norms = np.linalg.norm(dirs, axis=1)
        if np.any(np.abs(norms - 1.0) > 1e-9):
            raise ValueError("direction rows must be unit length")
        object.__setattr__(self, "directions", dirs)
        object.__setattr__(self, "angles", tuple((float(t), float(p)) for t, p in self.angles))
        if len(self.angles) != N_DIRECTIONS:
            raise ValueError(f"expected {N_DIRECTIONS} angle pairs")
        if self.positions is not None:
            pos = np.asarray(self.positions, dtype=float)
            if pos.shape != (N_DIRECTIONS, 3) or not np.all(np.isfinite(pos)):
                raise ValueError("positions must be a finite (32, 3) array")
            object.__setattr__(self, "positions", pos)

    @classmethod
    def canonical(cls, positions=None) -> "ActuatorLayout":
        return cls(
            angles=tuple(canonical_angles()),
            directions=canonical_directions(),
            positions=positions,
        )

    def save(self, path) -> None:
        """Write the layout as CSV: index,theta,phi,rx,ry,rz,px,py,pz.

        Position columns are left empty when no positions are fitted.
        """
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(LAYOUT_HEADER)
            for i, ((t, p), d) in enumerate(zip(self.angles, self.directions)):
                row = [i, repr(t), repr(p)] + [repr(float(x)) for x in d]
                if self.positions is not None:
                    row += [repr(float(x)) for x in self.positions[i]]
                else:
                    row += ["", "", ""]
                w.writerow(row)

    @classmethod
    def load(cls, path) -> "ActuatorLayout":
        angles, dirs, pos = [], [], []
        with open(path, newline="") as f:
            r = csv.reader(f)
            header = next(r)
            if header != LAYOUT_HEADER:
                raise ValueError(f"unexpected layout header {header!r}")
            rows = sorted(r, key=lambda row: int(row[0]))
        for row in rows:
            angles.append((float(row[1]), float(row[2])))
            dirs.append([float(row[3]), float(row[4]), float(row[5])])
            if row[6] != "":
                pos.append([float(row[6]), float(row[7]), float(row[8])])
        positions = np.array(pos) if len(pos) == len(rows) else None
        return cls(angles=tuple(angles), directions=np.array(dirs), positions=positions)


def min_pairwise_angle(directions: np.ndarray) -> float:
    """Smallest angle in radians between any two distinct directions."""
    dots = np.clip(directions @ directions.T, -1.0, 1.0)
    np.fill_diagonal(dots, -1.0)
    return float(np.arccos(np.max(dots)))


def covering_radius(directions: np.ndarray, probes: int = 20000, seed: int = 0) -> float:
    """Largest angular gap from any unit vector to its nearest direction.

    Monte-Carlo estimate over ``probes`` uniformly distributed sphere points;
    used to sanity-check how evenly the set covers the sphere.
    """
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(probes, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    best = np.max(np.clip(v @ directions.T, -1.0, 1.0), axis=1)
    return float(np.max(np.arccos(best)))
