"""Mission configuration: a nested dataclass tree with JSON round-trip.

One file describes everything a mission needs — world geometry, field grid,
sensor models, objective weights, optimizer knobs, speed limits, and the
mission section itself. Unknown or ill-typed keys fail loudly with the
offending section named, so a typo in a config never silently falls back to
a default.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field as dc_field
from typing import Optional


class ConfigError(ValueError):
    """Raised when a configuration file cannot be interpreted."""


PLANNER_KINDS = ("oaipp-adaptive", "oaipp-nonadaptive", "lawnmower", "random")


@dataclass
class GpConfig:
    length_scale: float = 3.67
    signal_variance: float = 1.82
    noise_variance: float = 1.42


@dataclass
class FieldConfig:
    resolution: float = 0.75
    extent: list = dc_field(default_factory=lambda: [30.0, 30.0])
    prior_mean: float = 0.1
    gp: GpConfig = dc_field(default_factory=GpConfig)


@dataclass
class BoxConfig:
    min: list = dc_field(default_factory=lambda: [0.0, 0.0, 0.0])
    max: list = dc_field(default_factory=lambda: [1.0, 1.0, 1.0])


@dataclass
class RandomBoxesConfig:
    """Obstacles drawn per mission seed instead of listed explicitly."""

    count: int = 0
    size: list = dc_field(default_factory=lambda: [4.0, 4.0, 13.0])
    clear_radius: float = 2.5   # keep-out around the start position


@dataclass
class WorldConfig:
    bounds_min: list = dc_field(default_factory=lambda: [0.0, 0.0, 0.0])
    bounds_max: list = dc_field(default_factory=lambda: [30.0, 30.0, 26.0])
    voxel_size: float = 0.5
    boxes: list = dc_field(default_factory=list)            # list of BoxConfig
    random_boxes: Optional[RandomBoxesConfig] = None


@dataclass
class SensingConfig:
    fov_deg: list = dc_field(default_factory=lambda: [45.0, 60.0])
    frequency: float = 0.15
    noise_scale: float = 1.0
    noise_decay: float = 0.05
    optimal_altitude: float = 10.0
    altitude_spread: float = 7.0
    saturation_altitude: float = 26.0
    false_positive_prob: float = 0.05
    false_positive_offset: float = 1.0


@dataclass
class ObjectiveSection:
    info_weight: float = 1.0
    collision_weight: float = 1000.0
    kappa: float = 2.0
    collision_sample_spacing: float = 0.25


@dataclass
class OptimizerSection:
    nbv_samples: int = 100
    altitude_min: float = 2.0
    altitude_max: float = 26.0
    cmaes_sigma0: Optional[float] = None
    cmaes_population: Optional[int] = None
    cmaes_max_evaluations: int = 90
    cmaes_f_tolerance: float = 1e-12


@dataclass
class LimitsConfig:
    v_max: float = 5.0
    a_max: float = 3.0


@dataclass
class MissionSection:
    budget: float = 150.0
    planner: str = "oaipp-adaptive"
    waypoints_per_plan: int = 4
    uav_radius: float = 1.0
    start_pose: list = dc_field(default_factory=lambda: [2.25, 2.25, 10.0])
    seed: int = 0
    retry_cap: int = 10
    targets: list = dc_field(default_factory=list)   # [ix, iy] cell pairs


@dataclass
class Config:
    world: WorldConfig = dc_field(default_factory=WorldConfig)
    field: FieldConfig = dc_field(default_factory=FieldConfig)
    sensing: SensingConfig = dc_field(default_factory=SensingConfig)
    objective: ObjectiveSection = dc_field(default_factory=ObjectiveSection)
    optimizer: OptimizerSection = dc_field(default_factory=OptimizerSection)
    limits: LimitsConfig = dc_field(default_factory=LimitsConfig)
    mission: MissionSection = dc_field(default_factory=MissionSection)


def validate_config(cfg: Config) -> None:
    m = cfg.mission
    if m.budget <= 0:
        raise ConfigError("mission.budget must be positive")
    if m.planner not in PLANNER_KINDS:
        raise ConfigError(
            f"mission.planner must be one of {', '.join(PLANNER_KINDS)}; "
            f"got {m.planner!r}")
    if m.waypoints_per_plan < 2:
        raise ConfigError("mission.waypoints_per_plan must be at least 2")
    if m.uav_radius <= 0:
        raise ConfigError("mission.uav_radius must be positive")
    if m.retry_cap < 1:
        raise ConfigError("mission.retry_cap must be at least 1")
    if cfg.field.resolution <= 0:
        raise ConfigError("field.resolution must be positive")
    if cfg.world.voxel_size <= 0:
        raise ConfigError("world.voxel_size must be positive")
    if len(cfg.world.bounds_min) != 3 or len(cfg.world.bounds_max) != 3:
        raise ConfigError("world bounds must have three components")
    if any(a >= b for a, b in zip(cfg.world.bounds_min, cfg.world.bounds_max)):
        raise ConfigError("world.bounds_min must be strictly below bounds_max")
    if cfg.optimizer.altitude_min <= 0:
        raise ConfigError("optimizer.altitude_min must be positive")
    if cfg.optimizer.altitude_max <= cfg.optimizer.altitude_min:
        raise ConfigError("optimizer.altitude_max must exceed altitude_min")
    for t in m.targets:
        if len(t) != 2:
            raise ConfigError(f"mission.targets entries must be [ix, iy]; got {t!r}")


def _fill(cls, data, where):
    """Instantiate a section dataclass from a mapping, rejecting unknown keys."""
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a mapping, got {type(data).__name__}")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(fields)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(sorted(unknown))}")
    kwargs = {}
    for name, value in data.items():
        sub = _SECTION_TYPES.get((cls, name))
        if sub is not None and value is not None:
            if sub is BoxConfig:   # list of boxes
                value = [_fill(BoxConfig, b, f"{where}.{name}[{i}]")
                         for i, b in enumerate(value)]
            else:
                value = _fill(sub, value, f"{where}.{name}")
        kwargs[name] = value
    return cls(**kwargs)


_SECTION_TYPES = {
    (FieldConfig, "gp"): GpConfig,
    (WorldConfig, "random_boxes"): RandomBoxesConfig,
    (WorldConfig, "boxes"): BoxConfig,
    (Config, "world"): WorldConfig,
    (Config, "field"): FieldConfig,
    (Config, "sensing"): SensingConfig,
    (Config, "objective"): ObjectiveSection,
    (Config, "optimizer"): OptimizerSection,
    (Config, "limits"): LimitsConfig,
    (Config, "mission"): MissionSection,
}


def config_from_dict(data: dict) -> Config:
    cfg = _fill(Config, data, "config")
    validate_config(cfg)
    return cfg


def config_to_dict(cfg: Config) -> dict:
    return dataclasses.asdict(cfg)


def load_config(path) -> Config:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: line {e.lineno}, column {e.colno}: {e.msg}") from e
    return config_from_dict(data)


def save_config(cfg: Config, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config_to_dict(cfg), fh, indent=2, sort_keys=False)
        fh.write("\n")
