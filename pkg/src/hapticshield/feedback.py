"""Per-obstacle safe-input feedback rendered onto the actuator layout.

Instead of collapsing every hazard into one filtered input, each obstacle
gets its own single-constraint projection

    u_safe_i = argmin ||u - u_ref||^2  s.t.  a_i . u >= b_i

and the *deviation* ||u_safe_i - u_ref|| is what the pilot feels: it is
rendered on the actuator most aligned with the obstacle's bearing, so two
hazards on opposite sides light two opposite channels instead of cancelling
into a single averaged cue. Intensity is K_v times the deviation, quantized
to the 16 hardware levels; overlapping cues on one channel keep the maximum.

The baseline comparator (`render_global_force`) filters through the
intersection of all constraints at once and returns one force vector - the
single-direction signal this scheme replaces.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .cbf import (
    CbfGains,
    HalfspaceConstraint,
    InfeasibleDegenerate,
    NotConverged,
    SafeInput,
    build_constraint,
    project_halfspace,
    project_intersection,
)
from .directions import ActuatorLayout, rotate_world_to_body
from .geometry import DegeneratePoint, SafetyField, UavState, as_vec3, field_center

N_LEVELS = 16  # 4-bit intensity quantization
MAX_LEVEL = N_LEVELS - 1


@dataclass(frozen=True)
class FeedbackConfig:
    """Rendering parameters.

    k_v scales input deviation (m/s^2) to cue intensity; i_max is the
    intensity that saturates the top quantization level; frequency_index
    selects the per-session drive frequency slot (the resonant slot by
    default).
    """

    gains: CbfGains = field(default_factory=CbfGains)
    k_v: float = 1.0
    i_max: float = 10.0
    frequency_index: int = 2

    def __post_init__(self):
        if not (self.k_v > 0):
            raise ValueError(f"k_v must be positive, got {self.k_v}")
        if not (self.i_max > 0):
            raise ValueError(f"i_max must be positive, got {self.i_max}")
        if not (0 <= self.frequency_index <= 7):
            raise ValueError(f"frequency_index must be 0..7, got {self.frequency_index}")


@dataclass(frozen=True)
class FeedbackFrame:
    """One rendered tick: raw intensity and quantized level per channel.

    ``contributing[j]`` lists the obstacle ids whose cue mapped to channel j
    this tick (each violated obstacle appears on exactly one channel);
    ``skipped`` lists obstacles whose constraint could not be rendered
    (degenerate geometry), surfaced as diagnostics rather than crashes.
    """

    intensities: np.ndarray
    levels: np.ndarray
    contributing: tuple
    skipped: tuple = ()

    def __post_init__(self):
        inten = np.asarray(self.intensities, dtype=float)
        lev = np.asarray(self.levels, dtype=int)
        n = inten.shape[0]
        if inten.shape != (n,) or lev.shape != (n,):
            raise ValueError("intensities and levels must be equal-length vectors")
        if np.any(inten < 0):
            raise ValueError("intensities must be non-negative")
        if np.any((lev < 0) | (lev > MAX_LEVEL)):
            raise ValueError(f"levels must be within 0..{MAX_LEVEL}")
        object.__setattr__(self, "intensities", inten)
        object.__setattr__(self, "levels", lev)
        object.__setattr__(self, "contributing", tuple(tuple(c) for c in self.contributing))
        object.__setattr__(self, "skipped", tuple(self.skipped))

    def record(self) -> dict:
        """Flat wire/log form: levels and raw intensities."""
        return {
            "levels": [int(v) for v in self.levels],
            "intensities": [float(v) for v in self.intensities],
        }


def select_actuator(direction_world, yaw: float, layout: ActuatorLayout) -> int:
    """Channel whose cue direction best matches a world-frame bearing.

    The bearing is rotated into the body frame (yaw only), then the argmax
    of the dot products against the layout directions is taken; exact ties
    resolve to the lowest index so selection is deterministic.
    """
    d = as_vec3(direction_world)
    n = float(np.linalg.norm(d))
    if n < 1e-12:
        raise ValueError("zero-length direction has no bearing")
    body = rotate_world_to_body(d / n, yaw)
    dots = layout.directions @ body
    return int(np.argmax(dots))  # argmax returns the first (lowest) maximizer


def quantize_level(intensity: float, i_max: float) -> int:
    """Map raw intensity to the 4-bit level: floor(16 I / i_max), capped at
    15, with any strictly positive intensity lifted to at least level 1 so a
    faint hazard is never silently dropped."""
    if intensity <= 0:
        return 0
    lvl = int(math.floor(N_LEVELS * intensity / i_max))
    return max(1, min(MAX_LEVEL, lvl))


def constraints_for_scene(
    state: UavState,
    fields: Sequence[SafetyField],
    gains: CbfGains,
) -> tuple[list[HalfspaceConstraint], list[int]]:
    """Barrier constraints for every field, with degenerate ones skipped.

    Returns (constraints, skipped_ids); obstacle_id is the field's index in
    ``fields``.
    """
    cs: list[HalfspaceConstraint] = []
    skipped: list[int] = []
    for i, f in enumerate(fields):
        try:
            cs.append(build_constraint(f, state, gains, obstacle_id=i))
        except DegeneratePoint:
            skipped.append(i)
    return cs, skipped


def render_feedback(
    state: UavState,
    yaw: float,
    u_ref,
    fields: Sequence[SafetyField],
    layout: ActuatorLayout,
    cfg: FeedbackConfig = FeedbackConfig(),
) -> FeedbackFrame:
    """Render one feedback frame from per-obstacle projections.

    For every field: build its constraint, project u_ref onto it alone, and
    if the constraint was active map intensity k_v*||u_safe_i - u_ref|| onto
    the actuator aligned with the obstacle bearing (field center minus
    position, world frame, yaw-corrected). Channels hit by several obstacles
    keep the maximum intensity. Degenerate constraints and zero-bearing
    obstacles are skipped and reported in ``skipped``.
    """
    u = as_vec3(u_ref)
    n_ch = layout.directions.shape[0]
    intensities = np.zeros(n_ch)
    contributing: list[list[int]] = [[] for _ in range(n_ch)]
    cs, skipped = constraints_for_scene(state, fields, cfg.gains)

    for c in cs:
        i = c.obstacle_id
        try:
            res = project_halfspace(u, c)
        except InfeasibleDegenerate:
            skipped.append(i)
            continue
        if not res.active:
            continue
        offset = field_center(fields[i]) - state.q
        if float(np.linalg.norm(offset)) < 1e-12:
            skipped.append(i)
            continue
        j = select_actuator(offset, yaw, layout)
        intensity = cfg.k_v * res.violation
        intensities[j] = max(intensities[j], intensity)
        contributing[j].append(i)

    levels = np.array([quantize_level(v, cfg.i_max) for v in intensities])
    return FeedbackFrame(
        intensities=intensities,
        levels=levels,
        contributing=tuple(tuple(c) for c in contributing),
        skipped=tuple(sorted(skipped)),
    )


def render_global_force(
    state: UavState,
    u_ref,
    fields: Sequence[SafetyField],
    cfg: FeedbackConfig = FeedbackConfig(),
) -> np.ndarray:
    """Baseline single-channel force: K_v times the deviation of the
    all-constraints projection.

        force = K_v * (project_intersection(u_ref, all constraints) - u_ref)

    Zero when the reference is already globally safe. NotConverged (empty or
    ill-conditioned intersection) propagates to the caller.
    """
    u = as_vec3(u_ref)
    cs, _ = constraints_for_scene(state, fields, cfg.gains)
    if not cs:
        return np.zeros(3)
    res = project_intersection(u, cs)
    return cfg.k_v * (res.u_safe - u)


def global_force_or_zero(
    state: UavState,
    u_ref,
    fields: Sequence[SafetyField],
    cfg: FeedbackConfig = FeedbackConfig(),
) -> tuple[np.ndarray, bool]:
    """Delivery policy for the baseline force channel inside the simulator.

    A real force channel cannot raise an exception mid-flight: when the
    global projection has no answer (empty intersection between opposing
    constraints, or a degenerate violated constraint), it delivers nothing.
    Returns (force, infeasible_flag); the flag is diagnostic so trials can
    count how often the single-channel baseline went silent.
    """
    try:
        return render_global_force(state, u_ref, fields, cfg), False
    except (NotConverged, InfeasibleDegenerate):
        return np.zeros(3), True


def per_obstacle_projections(
    state: UavState,
    u_ref,
    fields: Sequence[SafetyField],
    gains: CbfGains,
) -> list[tuple[int, SafeInput]]:
    """(obstacle_id, SafeInput) for each renderable field; analysis helper."""
    u = as_vec3(u_ref)
    out = []
    cs, _ = constraints_for_scene(state, fields, gains)
    for c in cs:
        try:
            out.append((c.obstacle_id, project_halfspace(u, c)))
        except InfeasibleDegenerate:
            continue
    return out
