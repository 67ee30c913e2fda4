"""Run configuration: one flat record covering every tunable default.

Everything the simulation, feedback renderer, and scenario generator accept
lives here so a single YAML file can pin a whole study. Field names match
the YAML keys one to one.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import yaml


@dataclass
class SimConfig:
    # integration
    dt: float = 0.01
    timeout: float = 120.0
    v_max: float = 5.0
    u_max: float = 5.0
    # barrier gains
    k1: float = 4.0
    k2: float = 4.0
    # feedback rendering
    k_v: float = 1.0
    i_max: float = 10.0
    frequency_index: int = 2
    # pilot behavior
    haptic_gain: float = 0.5
    compliance: float = 0.5
    cone_half_angle: float = math.pi / 2
    cone_axis: str = "camera"
    # collision counting
    collision_debounce: float = 1.0
    # scenario generation
    tunnel_width: float = 5.0
    tunnel_length: float = 50.0
    n_obstacles: int = 15
    obstacle_scale_min: float = 0.3
    obstacle_scale_max: float = 1.0
    corridor_clearance: float = 0.8
    max_rejections: int = 10000

    def __post_init__(self):
        if not (self.dt > 0):
            raise ValueError("dt must be positive")
        if not (self.timeout > 0):
            raise ValueError("timeout must be positive")
        if not (self.v_max > 0 and self.u_max > 0):
            raise ValueError("v_max and u_max must be positive")
        if not (self.k1 > 0 and self.k2 > 0):
            raise ValueError("barrier gains must be positive")
        if self.cone_axis not in ("camera", "velocity"):
            raise ValueError("cone_axis must be 'camera' or 'velocity'")
        if not (0 < self.cone_half_angle <= math.pi):
            raise ValueError("cone_half_angle must be in (0, pi]")
        if self.n_obstacles < 0:
            raise ValueError("n_obstacles must be non-negative")
        if not (0 < self.obstacle_scale_min <= self.obstacle_scale_max):
            raise ValueError("obstacle scale range is invalid")
        if self.corridor_clearance < 0:
            raise ValueError("corridor_clearance must be non-negative")
        if self.max_rejections < 1:
            raise ValueError("max_rejections must be >= 1")


def save_config(path, cfg: SimConfig) -> None:
    with open(path, "w") as f:
        yaml.safe_dump(asdict(cfg), f, sort_keys=False)


def load_config(path) -> SimConfig:
    with open(path) as f:
        raw = yaml.safe_load(f) or {}
    known = {f.name for f in fields(SimConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return SimConfig(**raw)
