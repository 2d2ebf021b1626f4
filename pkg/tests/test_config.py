"""Configuration defaults, overrides, and validation."""

import json

import pytest

from trusspath.config import (
    PlannerConfig,
    PlannerConfigError,
    TransitionSettings,
    load_config,
)


def test_defaults_are_valid():
    cfg = load_config()
    assert cfg.direction_count == 72
    assert cfg.rotation_samples == 16
    assert cfg.use_decomposition is True
    assert cfg.collision_cost_ordering is False
    assert cfg.clearance == 2.0
    assert cfg.path_spacing == 5.0
    assert cfg.retraction_length == 25.0
    assert cfg.jump_limit == 0.15
    assert cfg.capsule_budget == 6
    assert cfg.seed == 0
    assert cfg.transition.max_iterations == 3000
    cfg.validate()  # must not raise


def test_load_config_from_dict_and_file(tmp_path):
    cfg = load_config({"direction_count": 16, "seed": 5})
    assert cfg.direction_count == 16
    assert cfg.seed == 5
    assert cfg.rotation_samples == 16  # untouched default

    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"clearance": 3.5, "transition": {"step": 0.1}}))
    cfg = load_config(path)
    assert cfg.clearance == 3.5
    assert cfg.transition.step == 0.1
    assert cfg.transition.max_iterations == 3000


def test_load_config_rejects_unknown_keys():
    with pytest.raises(PlannerConfigError, match="unknown config keys"):
        load_config({"direction_cout": 16})
    with pytest.raises(PlannerConfigError, match="unknown transition keys"):
        load_config({"transition": {"stepp": 0.1}})
    with pytest.raises(PlannerConfigError, match="must be an object"):
        load_config({"transition": 7})
    with pytest.raises(PlannerConfigError, match="JSON object"):
        load_config([])  # type: ignore[arg-type]


def test_load_config_missing_or_bad_file(tmp_path):
    with pytest.raises(PlannerConfigError, match="not found"):
        load_config(tmp_path / "none.json")
    bad = tmp_path / "bad.json"
    bad.write_text("nope{")
    with pytest.raises(PlannerConfigError, match="not valid JSON"):
        load_config(bad)


def test_validation_bounds():
    bad_values = [
        {"direction_count": 3},
        {"rotation_samples": 0},
        {"kinematics_timeout": 0.0},
        {"search_timeout": -1.0},
        {"displacement_tolerance": 0.0},
        {"clearance": -0.5},
        {"path_spacing": 0.0},
        {"retraction_length": 0.0},
        {"jump_limit": 0.0},
        {"prismatic_jump_limit": -2.0},
        {"capsule_budget": 0},
        {"full_graph_vertex_cap": 0},
        {"seed": -1},
    ]
    for overrides in bad_values:
        with pytest.raises(PlannerConfigError):
            load_config(overrides)
    for overrides in [
        {"max_iterations": 0},
        {"step": 0.0},
        {"smoothing_iterations": -1},
        {"direct_timeout": 0.0},
    ]:
        with pytest.raises(PlannerConfigError):
            load_config({"transition": overrides})


def test_replace_revalidates():
    cfg = PlannerConfig()
    changed = cfg.replace(seed=9, clearance=1.0)
    assert changed.seed == 9 and changed.clearance == 1.0
    assert cfg.seed == 0  # original untouched
    with pytest.raises(PlannerConfigError):
        cfg.replace(path_spacing=-1.0)


def test_to_dict_round_trips():
    cfg = PlannerConfig(seed=3, transition=TransitionSettings(step=0.5))
    doc = cfg.to_dict()
    assert doc["seed"] == 3
    assert doc["transition"]["step"] == 0.5
    again = load_config(doc)
    assert again == cfg
    # the dict is JSON serializable as-is
    json.dumps(doc)
