"""Forward/inverse kinematics, Jacobian, limits, and collision queries."""

import json
import math

import numpy as np
import pytest

from trusspath.fixtures import fixture_path, load_bundled_robot
from trusspath.geometry import CapsuleShape
from trusspath.kinematics import (
    EEPose,
    KinematicsError,
    RobotConfigError,
    TrackSpec,
    config_collides,
    config_collides_batch,
    fk,
    fk_frames,
    ik,
    ik_sweep,
    invert_transform,
    jacobian,
    joint_distance,
    load_robot,
    make_transform,
)

IK_MATCH_TOL = 1e-9
IK_POSE_TOL = 1e-6
JAC_TOL = 1e-5


def bundled_doc():
    return json.loads(fixture_path("kr6_like.json").read_text())


def tracked_doc():
    doc = bundled_doc()
    doc["track"] = {"direction": [0.0, 1.0, 0.0], "lower": -500.0, "upper": 500.0, "step": 100.0}
    doc["home"]["track"] = 0.0
    return doc


def pose_error(robot, q, target):
    got = fk(robot, q)
    pos = float(np.linalg.norm(got.position - target.position))
    direction = float(np.linalg.norm(got.direction - target.direction))
    roll = abs((got.rotation - target.rotation + math.pi) % (2 * math.pi) - math.pi)
    return max(pos, direction, roll)


def test_fk_home_is_sane():
    robot = load_bundled_robot("arm")
    pose = fk(robot, robot.home)
    assert np.all(np.isfinite(pose.position))
    assert np.linalg.norm(pose.direction) == pytest.approx(1.0, abs=1e-12)
    frames = fk_frames(robot, robot.home)
    assert frames.shape == (len(robot.joints) + 2, 4, 4)
    for f in frames:
        r = f[:3, :3]
        assert np.allclose(r @ r.T, np.eye(3), atol=1e-12)


def test_ik_round_trip_recovers_configuration():
    robot = load_bundled_robot("arm")
    rng = np.random.default_rng(17)
    worst = 0.0
    for _ in range(100):
        q = rng.uniform(robot.lower, robot.upper)
        target = fk(robot, q)
        solutions = ik(robot, target)
        assert solutions, "reachable pose lost by IK"
        best = min(float(np.max(np.abs(s - q))) for s in solutions)
        worst = max(worst, best)
        # every branch must independently reproduce the target pose
        for s in solutions:
            assert robot.within_limits(s)
            assert pose_error(robot, s, target) < IK_POSE_TOL
    assert worst < IK_MATCH_TOL


def test_ik_rejects_unreachable_pose():
    robot = load_bundled_robot("arm")
    target = EEPose(
        np.array([1e5, 0.0, 0.0]), np.array([0.0, 0.0, 1.0]), 0.0
    )
    assert ik(robot, target) == []


def test_ik_sweep_matches_pointwise_ik():
    robot = load_bundled_robot("arm")
    rng = np.random.default_rng(23)
    q = rng.uniform(robot.lower, robot.upper)
    base = fk(robot, q)
    frame = base.frame()
    rotation = frame[:3, :3]
    origins = base.position[None, :] + rng.uniform(-30, 30, size=(5, 3))
    swept = ik_sweep(robot, rotation, origins)
    assert len(swept) == 5
    for origin, family in zip(origins, swept):
        f = frame.copy()
        f[:3, 3] = origin
        single = ik(robot, f)
        assert len(single) == len(family)
        for a, b in zip(single, family):
            assert np.allclose(a, b, atol=1e-9)


def fd_jacobian(robot, q, eps=1e-6):
    """Central-difference geometric Jacobian: rows (v; omega)."""
    cols = []
    for k in range(robot.dof):
        hi, lo = q.copy(), q.copy()
        hi[k] += eps
        lo[k] -= eps
        fhi = fk_frames(robot, hi)[-1]
        flo = fk_frames(robot, lo)[-1]
        v = (fhi[:3, 3] - flo[:3, 3]) / (2 * eps)
        dr = (fhi[:3, :3] - flo[:3, :3]) / (2 * eps)
        skew = dr @ fk_frames(robot, q)[-1][:3, :3].T
        omega = np.array([skew[2, 1], skew[0, 2], skew[1, 0]])
        cols.append(np.concatenate([v, omega]))
    return np.column_stack(cols)


def test_jacobian_matches_finite_differences():
    robot = load_bundled_robot("arm")
    rng = np.random.default_rng(29)
    for _ in range(20):
        q = rng.uniform(robot.lower * 0.9, robot.upper * 0.9)
        analytic = jacobian(robot, q)
        numeric = fd_jacobian(robot, q)
        assert analytic.shape == (6, robot.dof)
        assert np.allclose(analytic, numeric, rtol=1e-6, atol=JAC_TOL)


def test_joint_distance_norms():
    robot = load_bundled_robot("arm")
    q1 = np.zeros(robot.dof)
    q2 = np.full(robot.dof, 0.5)
    w = robot.weights
    assert joint_distance(robot, q1, q2) == pytest.approx(0.5 * w.sum())
    assert joint_distance(robot, q1, q2, norm="l2") == pytest.approx(
        0.5 * math.sqrt(float((w * w).sum()))
    )
    custom = np.arange(1.0, robot.dof + 1.0)
    assert joint_distance(robot, q1, q2, weights=custom) == pytest.approx(
        0.5 * custom.sum()
    )
    with pytest.raises(KinematicsError):
        joint_distance(robot, q1, q2, norm="linf")


def test_limits_and_jump_limits():
    robot = load_bundled_robot("arm")
    assert robot.within_limits(robot.home)
    assert not robot.within_limits(robot.upper + 1.0)
    steps = robot.jump_limits(0.15, 15.0)
    assert steps.shape == (robot.dof,)
    assert np.all(steps == 0.15)  # all revolute on the bundled arm
    track, arm = robot.split(robot.home)
    assert track == 0.0
    assert np.array_equal(arm, robot.home)


def test_make_and_invert_transform():
    rng = np.random.default_rng(31)
    for _ in range(20):
        origin = rng.uniform(-100, 100, 3)
        rpy = rng.uniform(-math.pi, math.pi, 3)
        t = make_transform(origin, rpy)
        assert np.allclose(t @ invert_transform(t), np.eye(4), atol=1e-12)
    # yaw of 90 degrees turns +x into +y
    t = make_transform((0, 0, 0), (0.0, 0.0, math.pi / 2))
    assert np.allclose(t[:3, :3] @ np.array([1.0, 0, 0]), [0.0, 1.0, 0.0], atol=1e-12)


def test_eepose_frame_round_trip():
    rng = np.random.default_rng(37)
    for _ in range(20):
        direction = rng.normal(size=3)
        direction /= np.linalg.norm(direction)
        if abs(direction[2]) > 0.99:
            continue
        pose = EEPose(rng.uniform(-50, 50, 3), direction, rng.uniform(0, 2 * math.pi))
        back = EEPose.from_frame(pose.frame())
        assert np.allclose(back.position, pose.position)
        assert np.allclose(back.direction, pose.direction, atol=1e-9)
        assert back.rotation == pytest.approx(pose.rotation, abs=1e-9)


def test_track_extends_dof_and_ik():
    robot = load_robot(tracked_doc())
    assert robot.dof == 7
    assert robot.lower[0] == -500.0 and robot.upper[0] == 500.0
    steps = robot.jump_limits(0.15, 15.0)
    assert steps[0] == 15.0 and np.all(steps[1:] == 0.15)

    grid = robot.track.positions()
    assert grid[0] == -500.0 and grid[-1] == 500.0
    assert np.all(np.diff(grid) <= robot.track.step + 1e-9)

    rng = np.random.default_rng(41)
    for _ in range(10):
        q = rng.uniform(robot.lower, robot.upper)
        target = fk(robot, q)
        solutions = ik(robot, target, track_positions=[q[0]])
        assert solutions
        best = min(float(np.max(np.abs(s - q))) for s in solutions)
        assert best < IK_MATCH_TOL
        for s in solutions:
            assert s[0] == pytest.approx(q[0])
            assert pose_error(robot, s, target) < IK_POSE_TOL


def test_track_spec_validation():
    with pytest.raises(RobotConfigError):
        TrackSpec((0.0, 1.0, 0.0), lower=5.0, upper=-5.0)
    with pytest.raises(RobotConfigError):
        TrackSpec((0.0, 2.0, 0.0), lower=-5.0, upper=5.0)  # not unit
    with pytest.raises(RobotConfigError):
        TrackSpec((0.0, 1.0, 0.0), lower=-5.0, upper=5.0, step=0.0)


def test_config_collides_with_scene():
    robot = load_bundled_robot("arm")
    assert not config_collides(robot, robot.home, [])
    tip = fk(robot, robot.home).position
    blocker = CapsuleShape(tuple(tip - 5.0), tuple(tip + 5.0), 30.0)
    assert config_collides(robot, robot.home, [blocker])
    far = CapsuleShape((5000.0, 5000.0, 0.0), (5000.0, 5000.0, 100.0), 50.0)
    assert not config_collides(robot, robot.home, [far])


def test_config_collides_batch_matches_single():
    robot = load_bundled_robot("arm")
    rng = np.random.default_rng(43)
    qs = rng.uniform(robot.lower * 0.7, robot.upper * 0.7, size=(12, robot.dof))
    scene = [CapsuleShape((400.0, 0.0, 0.0), (400.0, 0.0, 800.0), 60.0)]
    batch = config_collides_batch(robot, qs, scene)
    assert batch.shape == (12,)
    for row, q in zip(batch, qs):
        assert row == config_collides(robot, q, scene)
    assert batch.any() or not batch.all()  # vector is well formed


def test_clearance_widens_collisions():
    robot = load_bundled_robot("arm")
    tip = fk(robot, robot.home).position
    # capsule floating 70 mm beyond the tool tip
    probe = CapsuleShape(
        (tip[0] + 100.0, tip[1], tip[2]), (tip[0] + 120.0, tip[1], tip[2]), 10.0
    )
    assert not config_collides(robot, robot.home, [probe], clearance=1.0)
    assert config_collides(robot, robot.home, [probe], clearance=95.0)


def test_load_robot_errors(tmp_path):
    with pytest.raises(RobotConfigError, match="not found"):
        load_robot(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{oops")
    with pytest.raises(RobotConfigError, match="not valid JSON"):
        load_robot(bad)

    doc = bundled_doc()
    doc["dh"] = doc["dh"][:5]
    with pytest.raises(RobotConfigError):
        load_robot(doc)

    doc = bundled_doc()
    doc["home"]["joints_deg"][1] = 1e4
    with pytest.raises(RobotConfigError, match="home"):
        load_robot(doc)

    doc = bundled_doc()
    doc["link_capsules"][0]["frame"] = 99
    with pytest.raises(RobotConfigError, match="frame"):
        load_robot(doc)
