"""Synthetic direction-mapping data and layout optimization.

The perceptual study this stands in for asked wearers which direction each
torso actuator felt like it pointed from. Here a geometric torso produces
that data instead: a vertical capsule with optional shoulder spheres, where
each mounted actuator reports its outward surface normal, warped by a
front-facing azimuthal bias and angular noise.

The fitted network (see :mod:`hapticshield.mlp`) inverts the mapping:
perceived direction in, body position out. ``optimize_layout`` evaluates it
at the 32 canonical cue directions and projects the results back onto the
torso, yielding the actuator layout the renderer and hardware use.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from .directions import ActuatorLayout, canonical_angles, canonical_directions
from .geometry import as_vec3
from .mlp import MlpModel, TrainConfig, TrainResult, train

_INSIDE_TOL = 1e-9


@dataclass(frozen=True)
class BodyModel:
    """Geometric torso: a vertical capsule plus two shoulder spheres.

    The capsule axis runs along z with the cylindrical section spanning
    |z| <= height/2 and hemispherical caps beyond. ``shoulder_radius = 0``
    drops the shoulder spheres entirely (useful when the analysis needs a
    surface whose normal-to-position map is one-to-one per hemisphere).
    ``bias`` is the peak azimuthal pull toward the front in radians, applied
    as phi - bias*sin(phi); sigma_theta/sigma_phi are the report noise.
    """

    radius: float = 0.17
    height: float = 0.5
    shoulder_radius: float = 0.08
    shoulder_offset: Tuple[float, float, float] = (0.0, 0.20, 0.25)
    bias: float = math.radians(10.0)
    sigma_theta: float = 0.18
    sigma_phi: float = 0.53

    def __post_init__(self):
        if not (self.radius > 0):
            raise ValueError("radius must be positive")
        if not (self.height > 0):
            raise ValueError("height must be positive")
        if self.shoulder_radius < 0:
            raise ValueError("shoulder_radius must be non-negative")
        if self.sigma_theta < 0 or self.sigma_phi < 0:
            raise ValueError("noise spreads must be non-negative")

    @property
    def shoulder_centers(self) -> List[np.ndarray]:
        if self.shoulder_radius == 0:
            return []
        off = np.asarray(self.shoulder_offset, dtype=float)
        return [off * np.array([1.0, 1.0, 1.0]), off * np.array([1.0, -1.0, 1.0])]


@dataclass(frozen=True)
class MappingSample:
    """One actuator-to-direction report from a (synthetic) participant."""

    actuator_position: np.ndarray
    reported_theta: float
    reported_phi: float
    participant_id: int
    actuator_id: int

    def __post_init__(self):
        object.__setattr__(self, "actuator_position", as_vec3(self.actuator_position))
        if not (0 < self.reported_theta < math.pi):
            raise ValueError("reported_theta must lie in (0, pi)")
        if not (-math.pi < self.reported_phi <= math.pi):
            raise ValueError("reported_phi must lie in (-pi, pi]")


# -- body geometry -------------------------------------------------------------


def _inside_capsule(body: BodyModel, p: np.ndarray, tol: float) -> bool:
    z = np.clip(p[2], -body.height / 2, body.height / 2)
    axis_point = np.array([0.0, 0.0, z])
    return float(np.linalg.norm(p - axis_point)) < body.radius - tol


def _inside_any_shoulder(body: BodyModel, p: np.ndarray, tol: float) -> bool:
    return any(
        float(np.linalg.norm(p - c)) < body.shoulder_radius - tol
        for c in body.shoulder_centers
    )


def _capsule_projection(body: BodyModel, p: np.ndarray):
    """Nearest point on the capsule surface and its outward normal."""
    z = np.clip(p[2], -body.height / 2, body.height / 2)
    axis_point = np.array([0.0, 0.0, z])
    radial = p - axis_point
    dist = float(np.linalg.norm(radial))
    if dist < 1e-12:
        # on the axis: any radial direction is equally near
        normal = np.array([1.0, 0.0, 0.0])
    else:
        normal = radial / dist
    return axis_point + body.radius * normal, normal


def _sphere_projection(center: np.ndarray, radius: float, p: np.ndarray):
    radial = p - center
    dist = float(np.linalg.norm(radial))
    if dist < 1e-12:
        normal = np.array([1.0, 0.0, 0.0])
    else:
        normal = radial / dist
    return center + radius * normal, normal


def _project_primitive(body: BodyModel, idx: int, p: np.ndarray) -> np.ndarray:
    if idx == 0:
        return _capsule_projection(body, p)[0]
    return _sphere_projection(body.shoulder_centers[idx - 1], body.shoulder_radius, p)[0]


def _burying_primitive(body: BodyModel, own: int, q: np.ndarray):
    if own != 0 and _inside_capsule(body, q, _INSIDE_TOL):
        return 0
    for j, c in enumerate(body.shoulder_centers, start=1):
        if j != own and float(np.linalg.norm(q - c)) < body.shoulder_radius - _INSIDE_TOL:
            return j
    return None


def nearest_surface_point(body: BodyModel, p) -> np.ndarray:
    """Closest point on the union surface (capsule with shoulder bumps).

    Candidate projections onto each primitive are discarded when they fall
    strictly inside another primitive (those lie under the union surface).
    A point deep in an overlap buries every candidate; the union surface
    nearest it is then the crease where the two primitive surfaces meet,
    reached by alternating projections from the nearest candidate.
    """
    p = as_vec3(p)
    n_prims = 1 + len(body.shoulder_centers)
    candidates = [_project_primitive(body, i, p) for i in range(n_prims)]
    keep = [
        q for i, q in enumerate(candidates) if _burying_primitive(body, i, q) is None
    ]
    if keep:
        dists = [float(np.linalg.norm(p - q)) for q in keep]
        return keep[int(np.argmin(dists))]

    own = int(np.argmin([float(np.linalg.norm(p - q)) for q in candidates]))
    q = candidates[own]
    for _ in range(100):
        other = _burying_primitive(body, own, q)
        if other is None:
            break
        moved = _project_primitive(body, own, _project_primitive(body, other, q))
        if float(np.linalg.norm(moved - q)) < 1e-13:
            q = moved
            break
        q = moved
    return q


def surface_region(body: BodyModel, p) -> str:
    """Which patch a surface point sits on: cylinder, cap, or shoulder."""
    p = as_vec3(p)
    cap_q, _ = _capsule_projection(body, p)
    best = ("capsule", float(np.linalg.norm(p - cap_q)))
    for c in body.shoulder_centers:
        q, _ = _sphere_projection(c, body.shoulder_radius, p)
        d = float(np.linalg.norm(p - q))
        if d < best[1]:
            best = ("shoulder", d)
    if best[0] == "shoulder":
        return "shoulder"
    return "cylinder" if abs(p[2]) < body.height / 2 - 1e-9 else "cap"


def mean_curvature(body: BodyModel, p) -> float:
    """Mean curvature of the owning patch: wraps tighter on smaller bumps."""
    region = surface_region(body, p)
    if region == "shoulder":
        return 1.0 / body.shoulder_radius
    if region == "cap":
        return 1.0 / body.radius
    return 1.0 / (2.0 * body.radius)


def surface_normal(body: BodyModel, p) -> np.ndarray:
    """Outward normal of the patch owning a surface point."""
    p = as_vec3(p)
    cap_q, cap_n = _capsule_projection(body, p)
    best = (float(np.linalg.norm(p - cap_q)), cap_n)
    for c in body.shoulder_centers:
        q, n = _sphere_projection(c, body.shoulder_radius, p)
        d = float(np.linalg.norm(p - q))
        if d < best[0]:
            best = (d, n)
    return best[1]


def sample_surface(body: BodyModel, n: int, rng: np.random.Generator):
    """Uniform points on the union surface with their outward normals.

    Draws proportionally to each primitive's full area and rejects draws
    buried inside another primitive, which leaves a uniform density on the
    exposed union surface.
    """
    areas = [2 * math.pi * body.radius * body.height + 4 * math.pi * body.radius**2]
    for _ in body.shoulder_centers:
        areas.append(4 * math.pi * body.shoulder_radius**2)
    weights = np.asarray(areas) / sum(areas)

    points = np.empty((n, 3))
    normals = np.empty((n, 3))
    got = 0
    while got < n:
        pick = int(rng.choice(len(weights), p=weights))
        if pick == 0:
            cyl_area = 2 * math.pi * body.radius * body.height
            cap_area = 4 * math.pi * body.radius**2
            if rng.uniform(0, cyl_area + cap_area) < cyl_area:
                phi = rng.uniform(-math.pi, math.pi)
                z = rng.uniform(-body.height / 2, body.height / 2)
                normal = np.array([math.cos(phi), math.sin(phi), 0.0])
                point = np.array([0.0, 0.0, z]) + body.radius * normal
            else:
                d = rng.normal(size=3)
                d /= np.linalg.norm(d)
                top = d[2] >= 0
                center = np.array([0.0, 0.0, body.height / 2 if top else -body.height / 2])
                point, normal = center + body.radius * d, d
            if _inside_any_shoulder(body, point, _INSIDE_TOL):
                continue
        else:
            center = body.shoulder_centers[pick - 1]
            d = rng.normal(size=3)
            d /= np.linalg.norm(d)
            point = center + body.shoulder_radius * d
            normal = d
            if _inside_capsule(body, point, _INSIDE_TOL):
                continue
            others = [c for i, c in enumerate(body.shoulder_centers) if i != pick - 1]
            if any(
                float(np.linalg.norm(point - c)) < body.shoulder_radius - _INSIDE_TOL
                for c in others
            ):
                continue
        points[got] = point
        normals[got] = normal
        got += 1
    return points, normals


# -- synthetic study data ------------------------------------------------------


def _direction_to_angles(d: np.ndarray) -> Tuple[float, float]:
    theta = math.acos(max(-1.0, min(1.0, float(d[2]))))
    phi = math.atan2(float(d[1]), float(d[0]))
    return theta, phi


def _wrap_phi(phi: float) -> float:
    if -math.pi < phi <= math.pi:
        # already in range: pass through untouched so noiseless reports
        # reproduce the normal's azimuth bit for bit
        return phi
    phi = (phi + math.pi) % (2 * math.pi) - math.pi
    return math.pi if phi == -math.pi else phi


def generate_synthetic_dataset(
    body: BodyModel,
    n_actuators: int,
    reps: int,
    seed: int,
    participant_id: int = 0,
) -> List[MappingSample]:
    """Mount actuators uniformly and collect their direction reports.

    Each actuator yields ``reps`` reports of its outward normal, warped by
    the front-facing azimuthal bias and then angular noise. Zero bias and
    zero noise reproduce the normal exactly.
    """
    if n_actuators < 1:
        raise ValueError("n_actuators must be >= 1")
    if reps < 1:
        raise ValueError("reps must be >= 1")
    rng = np.random.default_rng(seed)
    points, normals = sample_surface(body, n_actuators, rng)
    samples = []
    for act in range(n_actuators):
        theta0, phi0 = _direction_to_angles(normals[act])
        phi_biased = phi0 - body.bias * math.sin(phi0)
        for _ in range(reps):
            theta = theta0 + rng.normal(scale=body.sigma_theta) if body.sigma_theta else theta0
            phi = phi_biased + rng.normal(scale=body.sigma_phi) if body.sigma_phi else phi_biased
            theta = float(np.clip(theta, 1e-6, math.pi - 1e-6))
            samples.append(
                MappingSample(
                    actuator_position=points[act],
                    reported_theta=theta,
                    reported_phi=_wrap_phi(phi),
                    participant_id=participant_id,
                    actuator_id=act,
                )
            )
    return samples


DATASET_HEADER = ["participant_id", "actuator_id", "px", "py", "pz", "theta", "phi"]


def save_dataset(path, samples: Iterable[MappingSample]) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(DATASET_HEADER)
        for s in samples:
            p = s.actuator_position
            writer.writerow(
                [s.participant_id, s.actuator_id]
                + [repr(float(v)) for v in (p[0], p[1], p[2], s.reported_theta, s.reported_phi)]
            )


def load_dataset(path) -> List[MappingSample]:
    samples = []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        if header != DATASET_HEADER:
            raise ValueError(f"unexpected dataset header {header!r}")
        for row in reader:
            samples.append(
                MappingSample(
                    actuator_position=np.array([float(row[2]), float(row[3]), float(row[4])]),
                    reported_theta=float(row[5]),
                    reported_phi=float(row[6]),
                    participant_id=int(row[0]),
                    actuator_id=int(row[1]),
                )
            )
    return samples


# -- fitting and layout extraction ----------------------------------------------


def train_mapping(samples: Sequence[MappingSample], cfg: TrainConfig = TrainConfig()) -> TrainResult:
    """Fit the direction-to-position network to mapping reports."""
    if not samples:
        raise ValueError("dataset is empty")
    angles = np.array([[s.reported_theta, s.reported_phi] for s in samples])
    targets = np.array([s.actuator_position for s in samples])
    return train(angles, targets, cfg)


def optimize_layout(model: MlpModel, body: BodyModel = BodyModel()) -> ActuatorLayout:
    """Evaluate the fitted map at the 32 canonical directions.

    Raw network outputs need not sit on the torso, so each is replaced by
    its nearest surface point before the layout is assembled.
    """
    angles = canonical_angles()
    raw = model.forward(angles)
    positions = np.array([nearest_surface_point(body, p) for p in raw])
    return ActuatorLayout(
        angles=angles, directions=canonical_directions(), positions=positions
    )
