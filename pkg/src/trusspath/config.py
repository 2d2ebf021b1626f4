"""Planner configuration with JSON overrides.

All tunables live in one flat dataclass (plus a nested block for transition
planning) so that a run is reproducible from the config dict alone.  Values
are validated eagerly; a bad config should fail before any planning starts.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

DEFAULT_DIRECTION_COUNT = 72
DEFAULT_ROTATION_SAMPLES = 16
DEFAULT_KINEMATICS_TIMEOUT = 2.0  # seconds per feasibility probe
DEFAULT_SEARCH_TIMEOUT = 21600.0  # six hours, matches the headless budget


class PlannerConfigError(Exception):
    pass


@dataclass(frozen=True)
class TransitionSettings:
    max_iterations: int = 3000
    step: float = 0.25  # rad, RRT extension step in weighted joint space
    smoothing_iterations: int = 80
    direct_timeout: float = 5.0
    fallback_timeout: float = 10.0

    def validate(self) -> None:
        if self.max_iterations < 1:
            raise PlannerConfigError("transition.max_iterations must be >= 1")
        if self.step <= 0.0:
            raise PlannerConfigError("transition.step must be positive")
        if self.smoothing_iterations < 0:
            raise PlannerConfigError("transition.smoothing_iterations must be >= 0")
        if self.direct_timeout <= 0.0 or self.fallback_timeout <= 0.0:
            raise PlannerConfigError("transition timeouts must be positive")


@dataclass(frozen=True)
class PlannerConfig:
    # sequencing
    direction_count: int = DEFAULT_DIRECTION_COUNT
    rotation_samples: int = DEFAULT_ROTATION_SAMPLES
    kinematics_timeout: float = DEFAULT_KINEMATICS_TIMEOUT
    search_timeout: float = DEFAULT_SEARCH_TIMEOUT
    use_decomposition: bool = True
    collision_cost_ordering: bool = False
    displacement_tolerance: float = 1.0  # mm, stiffness gate
    # geometry
    clearance: float = 2.0  # mm, added to every capsule pair
    path_spacing: float = 5.0  # mm between extrusion waypoints
    retraction_length: float = 25.0  # mm
    # trajectories
    jump_limit: float = 0.15  # rad per step for revolute joints
    prismatic_jump_limit: float = 15.0  # mm per step on a rail
    capsule_budget: int = 6  # orientation blocks explored per task
    full_graph_vertex_cap: int = 200000
    transition: TransitionSettings = field(default_factory=TransitionSettings)
    seed: int = 0

    def validate(self) -> None:
        if self.direction_count < 4:
            raise PlannerConfigError("direction_count must be >= 4")
        if self.rotation_samples < 1:
            raise PlannerConfigError("rotation_samples must be >= 1")
        if self.kinematics_timeout <= 0.0:
            raise PlannerConfigError("kinematics_timeout must be positive")
        if self.search_timeout <= 0.0:
            raise PlannerConfigError("search_timeout must be positive")
        if self.displacement_tolerance <= 0.0:
            raise PlannerConfigError("displacement_tolerance must be positive")
        if self.clearance < 0.0:
            raise PlannerConfigError("clearance must be >= 0")
        if self.path_spacing <= 0.0:
            raise PlannerConfigError("path_spacing must be positive")
        if self.retraction_length <= 0.0:
            raise PlannerConfigError("retraction_length must be positive")
        if self.jump_limit <= 0.0 or self.prismatic_jump_limit <= 0.0:
            raise PlannerConfigError("jump limits must be positive")
        if self.capsule_budget < 1:
            raise PlannerConfigError("capsule_budget must be >= 1")
        if self.full_graph_vertex_cap < 1:
            raise PlannerConfigError("full_graph_vertex_cap must be >= 1")
        if self.seed < 0:
            raise PlannerConfigError("seed must be >= 0")
        self.transition.validate()

    def to_dict(self) -> dict[str, Any]:
        doc = dataclasses.asdict(self)
        return doc

    def replace(self, **changes: Any) -> "PlannerConfig":
        cfg = dataclasses.replace(self, **changes)
        cfg.validate()
        return cfg


def load_config(source: str | Path | dict | None = None) -> PlannerConfig:
    """Defaults overridden by a JSON file or dict; unknown keys are errors."""
    if source is None:
        cfg = PlannerConfig()
        cfg.validate()
        return cfg
    if isinstance(source, (str, Path)):
        path = Path(source)
        try:
            doc = json.loads(path.read_text())
        except FileNotFoundError as exc:
            raise PlannerConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise PlannerConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    else:
        doc = source
    if not isinstance(doc, dict):
        raise PlannerConfigError("config document must be a JSON object")

    known = {f.name for f in dataclasses.fields(PlannerConfig)}
    unknown = set(doc) - known
    if unknown:
        raise PlannerConfigError(f"unknown config keys: {sorted(unknown)}")
    values = dict(doc)
    if "transition" in values:
        tr = values["transition"]
        if not isinstance(tr, dict):
            raise PlannerConfigError("transition block must be an object")
        tr_known = {f.name for f in dataclasses.fields(TransitionSettings)}
        tr_unknown = set(tr) - tr_known
        if tr_unknown:
            raise PlannerConfigError(f"unknown transition keys: {sorted(tr_unknown)}")
        values["transition"] = TransitionSettings(**tr)
    try:
        cfg = PlannerConfig(**values)
    except TypeError as exc:
        raise PlannerConfigError(f"bad config value: {exc}") from exc
    cfg.validate()
    return cfg
