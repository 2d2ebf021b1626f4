"""Robot model, forward/inverse kinematics, and capsule collision queries.

The supported robot is a six-revolute arm with a spherical wrist (joint axes
4, 5, 6 intersect in one point), described by standard DH rows
A_i = Rotz(theta) * Transz(d) * Transx(a) * Rotx(alpha), optionally riding on
one leading prismatic rail.  The rail translates the arm base along a fixed
direction and is enumerated at a configurable step during inverse kinematics.

The wrist decomposition needs a specific DH shape: alpha pattern
(-90, 0, -90, +90, -90, 0) degrees with a4 = a5 = a6 = 0 and d2 = d3 = d5 = 0.
That covers the usual industrial geometry (shoulder offset a1, upper arm a2,
elbow offset a3, forearm d4, flange d6).  `load_robot` rejects anything else
up front instead of failing math deep in a search.

Angles are radians and lengths millimetres everywhere in memory; the JSON
config uses degrees for human editing.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .geometry import (
    CapsuleShape,
    EEGeometry,
    GeometryError,
    default_ee_geometry,
    direction_rotation_from_frame,
    segment_distance_batch,
)

_EXPECTED_ALPHA = np.deg2rad([-90.0, 0.0, -90.0, 90.0, -90.0, 0.0])
_DEFAULT_JUMP_LIMIT = 0.15  # rad per Cartesian step, per revolute joint
_DEFAULT_PRISMATIC_JUMP = 15.0  # mm per Cartesian step on the rail
_POSE_TOL = 1e-6


class KinematicsError(Exception):
    pass


class RobotConfigError(KinematicsError):
    """Robot description file is malformed or outside the solvable family."""


# ---------------------------------------------------------------------------
# model


@dataclass(frozen=True)
class Joint:
    kind: str  # 'revolute' | 'prismatic'
    a: float
    alpha: float
    d: float
    theta: float  # fixed offset added to the joint variable
    lower: float
    upper: float
    weight: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("revolute", "prismatic"):
            raise RobotConfigError(f"unknown joint kind {self.kind!r}")
        if self.lower >= self.upper:
            raise RobotConfigError("joint lower limit must be below upper limit")
        if self.weight <= 0.0:
            raise RobotConfigError("joint weight must be positive")


@dataclass(frozen=True)
class TrackSpec:
    """Leading prismatic rail that carries the arm base."""

    direction: tuple[float, float, float]  # unit vector in the base frame
    lower: float
    upper: float
    step: float = 10.0  # IK enumeration step, mm
    weight: float = 1.0

    def __post_init__(self) -> None:
        if self.lower >= self.upper:
            raise RobotConfigError("track lower limit must be below upper limit")
        if self.step <= 0.0:
            raise RobotConfigError("track step must be positive")
        norm = math.sqrt(sum(c * c for c in self.direction))
        if abs(norm - 1.0) > 1e-6:
            raise RobotConfigError("track direction must be a unit vector")

    def positions(self) -> np.ndarray:
        count = int(math.floor((self.upper - self.lower) / self.step)) + 1
        grid = self.lower + self.step * np.arange(count)
        if grid[-1] < self.upper - 1e-9:
            grid = np.append(grid, self.upper)
        return grid


@dataclass(frozen=True)
class LinkCapsule:
    frame: int  # 0 = arm base, 1..6 = after joint i, 7 = tool frame
    shape: CapsuleShape


@dataclass(frozen=True)
class RobotModel:
    name: str
    joints: tuple[Joint, ...]  # the six DH rows
    base_pose: np.ndarray  # (4, 4) world pose of the rail/arm base
    tool: np.ndarray  # (4, 4) flange -> tool tip
    home: np.ndarray  # (dof,)
    link_capsules: tuple[LinkCapsule, ...]
    ee: EEGeometry
    track: TrackSpec | None = None
    static_capsules: tuple[CapsuleShape, ...] = ()
    analytic_ik: bool = True
    source: dict | None = None  # parsed document this model was loaded from

    @property
    def dof(self) -> int:
        return len(self.joints) + (1 if self.track else 0)

    @property
    def lower(self) -> np.ndarray:
        arm = [j.lower for j in self.joints]
        return np.array(([self.track.lower] if self.track else []) + arm)

    @property
    def upper(self) -> np.ndarray:
        arm = [j.upper for j in self.joints]
        return np.array(([self.track.upper] if self.track else []) + arm)

    @property
    def weights(self) -> np.ndarray:
        arm = [j.weight for j in self.joints]
        return np.array(([self.track.weight] if self.track else []) + arm)

    def jump_limits(
        self,
        revolute: float = _DEFAULT_JUMP_LIMIT,
        prismatic: float = _DEFAULT_PRISMATIC_JUMP,
    ) -> np.ndarray:
        arm = [revolute if j.kind == "revolute" else prismatic for j in self.joints]
        return np.array(([prismatic] if self.track else []) + arm)

    def split(self, q: np.ndarray) -> tuple[float, np.ndarray]:
        """(track position, arm joint values); track is 0 when absent."""
        q = np.asarray(q, dtype=float)
        if self.track is not None:
            return float(q[0]), q[1:]
        return 0.0, q

    def within_limits(self, q: np.ndarray, tol: float = 1e-9) -> bool:
        q = np.asarray(q, dtype=float)
        return bool(np.all(q >= self.lower - tol) and np.all(q <= self.upper + tol))


# ---------------------------------------------------------------------------
# poses


@dataclass(frozen=True)
class EEPose:
    """Tool pose: tip position plus (clearance direction, roll) orientation."""

    position: np.ndarray
    direction: np.ndarray  # unit vector from nozzle tip towards the body
    rotation: float  # roll about the tool axis, [0, 2*pi)

    @classmethod
    def from_frame(cls, frame: np.ndarray) -> "EEPose":
        direction, rotation = direction_rotation_from_frame(frame)
        return cls(frame[:3, 3].copy(), direction, rotation)

    def frame(self) -> np.ndarray:
        from .geometry import pose_from_direction

        return pose_from_direction(self.position, self.direction, self.rotation)


def make_transform(origin: Sequence[float], rpy: Sequence[float]) -> np.ndarray:
    """4x4 from a translation and roll/pitch/yaw (Rz(yaw) Ry(pitch) Rx(roll))."""
    roll, pitch, yaw = rpy
    cr, sr = math.cos(roll), math.sin(roll)
    cp, sp = math.cos(pitch), math.sin(pitch)
    cy, sy = math.cos(yaw), math.sin(yaw)
    r = np.array(
        [
            [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
            [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
            [-sp, cp * sr, cp * cr],
        ]
    )
    t = np.eye(4)
    t[:3, :3] = r
    t[:3, 3] = np.asarray(origin, dtype=float)
    return t


def invert_transform(t: np.ndarray) -> np.ndarray:
    out = np.eye(4)
    r = t[:3, :3]
    out[:3, :3] = r.T
    out[:3, 3] = -r.T @ t[:3, 3]
    return out


def _dh_matrix(joint: Joint, value: float) -> np.ndarray:
    theta = joint.theta + (value if joint.kind == "revolute" else 0.0)
    d = joint.d + (value if joint.kind == "prismatic" else 0.0)
    ct, st = math.cos(theta), math.sin(theta)
    ca, sa = math.cos(joint.alpha), math.sin(joint.alpha)
    return np.array(
        [
            [ct, -st * ca, st * sa, joint.a * ct],
            [st, ct * ca, -ct * sa, joint.a * st],
            [0.0, sa, ca, d],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )


def _dh_matrix_batch(joint: Joint, values: np.ndarray) -> np.ndarray:
    n = values.shape[0]
    theta = joint.theta + (values if joint.kind == "revolute" else 0.0)
    d = joint.d + (values if joint.kind == "prismatic" else 0.0)
    ct, st = np.cos(theta), np.sin(theta)
    ca, sa = math.cos(joint.alpha), math.sin(joint.alpha)
    out = np.zeros((n, 4, 4))
    out[:, 0, 0] = ct
    out[:, 0, 1] = -st * ca
    out[:, 0, 2] = st * sa
    out[:, 0, 3] = joint.a * ct
    out[:, 1, 0] = st
    out[:, 1, 1] = ct * ca
    out[:, 1, 2] = -ct * sa
    out[:, 1, 3] = joint.a * st
    out[:, 2, 1] = sa
    out[:, 2, 2] = ca
    out[:, 2, 3] = d
    out[:, 3, 3] = 1.0
    return out


def fk_frames(robot: RobotModel, q: np.ndarray) -> np.ndarray:
    """All chain frames for one configuration: (2 + n_joints, 4, 4).

    Index 0 is the arm base (rail displacement applied), index i is the frame
    after joint i, the last index is the tool tip frame.
    """
    return fk_frames_batch(robot, np.asarray(q, dtype=float)[None, :])[0]


def fk_frames_batch(robot: RobotModel, qs: np.ndarray) -> np.ndarray:
    qs = np.asarray(qs, dtype=float)
    if qs.ndim != 2 or qs.shape[1] != robot.dof:
        raise KinematicsError(f"expected (n, {robot.dof}) joint array")
    n = qs.shape[0]
    frames = np.zeros((n, len(robot.joints) + 2, 4, 4))

    base = np.broadcast_to(robot.base_pose, (n, 4, 4)).copy()
    if robot.track is not None:
        shift = np.eye(4)[None, :, :].repeat(n, axis=0)
        axis = np.asarray(robot.track.direction, dtype=float)
        shift[:, :3, 3] = qs[:, 0, None] * axis[None, :]
        base = base @ shift
        arm_q = qs[:, 1:]
    else:
        arm_q = qs
    frames[:, 0] = base
    cur = base
    for i, joint in enumerate(robot.joints):
        cur = cur @ _dh_matrix_batch(joint, arm_q[:, i])
        frames[:, i + 1] = cur
    frames[:, -1] = cur @ robot.tool
    return frames


def fk(robot: RobotModel, q: np.ndarray) -> EEPose:
    """Tool pose of a configuration."""
    return EEPose.from_frame(fk_frames(robot, q)[-1])


def jacobian(robot: RobotModel, q: np.ndarray) -> np.ndarray:
    """Geometric Jacobian of the tool tip, rows (v; omega), columns per DOF."""
    frames = fk_frames(robot, q)
    tip = frames[-1][:3, 3]
    cols = []
    if robot.track is not None:
        axis = robot.base_pose[:3, :3] @ np.asarray(robot.track.direction)
        cols.append(np.concatenate([axis, np.zeros(3)]))
    for i, joint in enumerate(robot.joints):
        origin_frame = frames[i]  # frame before joint i+1
        z = origin_frame[:3, 2]
        if joint.kind == "revolute":
            cols.append(np.concatenate([np.cross(z, tip - origin_frame[:3, 3]), z]))
        else:
            cols.append(np.concatenate([z, np.zeros(3)]))
    return np.column_stack(cols)


# ---------------------------------------------------------------------------
# inverse kinematics


def _wrap(angle: np.ndarray) -> np.ndarray:
    return (angle + math.pi) % (2.0 * math.pi) - math.pi


def _family_params(robot: RobotModel) -> tuple[float, float, float, float, float, float]:
    j = robot.joints
    return (j[0].a, j[1].a, j[2].a, j[0].d, j[3].d, j[5].d)


def _check_solvable_family(joints: Sequence[Joint]) -> None:
    if len(joints) != 6 or any(j.kind != "revolute" for j in joints):
        raise RobotConfigError("analytic IK needs exactly six revolute joints")
    alphas = np.array([j.alpha for j in joints])
    if np.max(np.abs(_wrap(alphas - _EXPECTED_ALPHA))) > 1e-9:
        raise RobotConfigError(
            "DH alpha pattern must be (-90, 0, -90, 90, -90, 0) degrees"
        )
    for idx in (3, 4, 5):
        if abs(joints[idx].a) > 1e-9:
            raise RobotConfigError("wrist rows must have a = 0")
    for idx in (1, 2, 4):
        if abs(joints[idx].d) > 1e-9:
            raise RobotConfigError("rows 2, 3 and 5 must have d = 0")


def _ik_arm(
    robot: RobotModel, rot: np.ndarray, pos: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """All closed-form branches for flange targets.

    rot is (n, 3, 3), pos is (n, 3), both in the arm base frame.  Returns
    (n, 8, 6) joint values plus an (n, 8) validity mask.  Branch layout is
    (shoulder, elbow, wrist) binary flags; invalid branches are zero-filled.
    The caller still has to verify against forward kinematics and limits.
    """
    a1, a2, a3, d1, d4, d6 = _family_params(robot)
    l3sq = a3 * a3 + d4 * d4
    n = pos.shape[0]
    sols = np.zeros((n, 8, 6))
    valid = np.zeros((n, 8), dtype=bool)

    wrist = pos - d6 * rot[:, :, 2]
    wx, wy, wz = wrist[:, 0], wrist[:, 1], wrist[:, 2]
    hyp = np.hypot(wx, wy)
    base_angle = np.where(hyp > 1e-12, np.arctan2(wy, wx), 0.0)

    offsets = np.array([j.theta for j in robot.joints])

    for shoulder in (0, 1):
        theta1 = base_angle + (math.pi if shoulder else 0.0)
        rho = -hyp if shoulder else hyp
        p = rho - a1
        q = d1 - wz
        u = (p * p + q * q - a2 * a2 - l3sq) / (2.0 * a2)
        disc = l3sq - u * u
        reach = disc >= -1e-9 * l3sq
        root = np.sqrt(np.maximum(disc, 0.0))
        for elbow in (0, 1):
            v = -root if elbow else root
            theta3 = np.arctan2(a3 * v - d4 * u, a3 * u + d4 * v)
            big_a = a2 + u
            denom_ok = (p * p + q * q) > 1e-12
            theta2 = np.arctan2(big_a * q - v * p, big_a * p + v * q)

            c1, s1 = np.cos(theta1), np.sin(theta1)
            c23 = np.cos(theta2 + theta3)
            s23 = np.sin(theta2 + theta3)
            # columns of R3 = Rz(t1) Rx(-90) Rz(t2+t3) Rx(-90), written out
            r3 = np.empty((n, 3, 3))
            r3[:, 0, 0] = c1 * c23
            r3[:, 1, 0] = s1 * c23
            r3[:, 2, 0] = -s23
            r3[:, 0, 1] = s1
            r3[:, 1, 1] = -c1
            r3[:, 2, 1] = 0.0
            r3[:, 0, 2] = -c1 * s23
            r3[:, 1, 2] = -s1 * s23
            r3[:, 2, 2] = -c23
            r36 = np.einsum("nji,njk->nik", r3, rot)

            cos_b = np.clip(r36[:, 2, 2], -1.0, 1.0)
            beta = np.arccos(cos_b)
            sin_b = np.sin(beta)
            regular = sin_b > 1e-12

            alpha = np.arctan2(r36[:, 1, 2], r36[:, 0, 2])
            gamma = np.arctan2(r36[:, 2, 1], -r36[:, 2, 0])
            gamma_sing = np.arctan2(r36[:, 1, 0], r36[:, 1, 1])

            for wrist_flip in (0, 1):
                slot = 4 * shoulder + 2 * elbow + wrist_flip
                if wrist_flip == 0:
                    t4 = np.where(regular, alpha, 0.0)
                    t5 = -beta
                    t6 = np.where(regular, gamma, gamma_sing)
                    ok = reach & denom_ok
                else:
                    t4 = alpha + math.pi
                    t5 = beta
                    t6 = gamma + math.pi
                    ok = reach & denom_ok & regular  # singular twin is a duplicate

                branch = np.stack(
                    [theta1, theta2, theta3, t4, t5, t6], axis=1
                ) - offsets[None, :]
                sols[:, slot, :] = _wrap(branch)
                valid[:, slot] = ok
    return sols, valid


def _flange_targets(
    robot: RobotModel, frames: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """World tool frames -> flange frames in the arm base frame."""
    inv_base = invert_transform(robot.base_pose)
    inv_tool = invert_transform(robot.tool)
    flange = np.einsum("ij,njk,kl->nil", inv_base, frames, inv_tool)
    return flange[:, :3, :3].copy(), flange[:, :3, 3].copy()


def _verify_and_filter(
    robot: RobotModel,
    sols: np.ndarray,
    valid: np.ndarray,
    rot: np.ndarray,
    pos: np.ndarray,
    track: np.ndarray | None,
) -> list[list[np.ndarray]]:
    """FK-check each branch in flange space and apply joint limits."""
    n, branches, _ = sols.shape
    flat = sols.reshape(n * branches, 6)
    mask = valid.reshape(n * branches)

    lows = np.array([j.lower for j in robot.joints])
    highs = np.array([j.upper for j in robot.joints])
    mask &= np.all((flat >= lows - 1e-9) & (flat <= highs + 1e-9), axis=1)

    cur = np.eye(4)[None, :, :].repeat(n * branches, axis=0)
    for i, joint in enumerate(robot.joints):
        cur = cur @ _dh_matrix_batch(joint, flat[:, i])
    pos_err = np.linalg.norm(
        cur[:, :3, 3] - np.repeat(pos, branches, axis=0), axis=1
    )
    rot_err = np.linalg.norm(
        cur[:, :3, :3] - np.repeat(rot, branches, axis=0), axis=(1, 2)
    ) / math.sqrt(2.0)
    mask &= (pos_err < _POSE_TOL) & (rot_err < _POSE_TOL)

    out: list[list[np.ndarray]] = []
    mask = mask.reshape(n, branches)
    for i in range(n):
        rows = []
        for b in range(branches):
            if not mask[i, b]:
                continue
            arm = sols[i, b]
            full = arm if track is None else np.concatenate([[track[i]], arm])
            rows.append(full)
        # order-stable: lexicographic by joint values
        rows.sort(key=lambda r: tuple(r))
        out.append(rows)
    return out


def ik(
    robot: RobotModel,
    target: EEPose | np.ndarray,
    track_positions: Iterable[float] | None = None,
) -> list[np.ndarray]:
    """All analytic solutions reaching a world tool pose, sorted and verified.

    With a rail, solutions are enumerated per discretized rail position (the
    robot's configured `track.step` grid unless `track_positions` is given
    explicitly).
    Each returned configuration satisfies fk(q) == target within 1e-6.
    """
    if not robot.analytic_ik:
        raise KinematicsError("robot was loaded without analytic IK support")
    frame = target.frame() if isinstance(target, EEPose) else np.asarray(target, float)
    rot, pos = _flange_targets(robot, frame[None, :, :])

    if robot.track is None:
        sols, valid = _ik_arm(robot, rot, pos)
        grouped = _verify_and_filter(robot, sols, valid, rot, pos, None)
        return grouped[0]

    grid = (
        np.asarray(list(track_positions), dtype=float)
        if track_positions is not None
        else robot.track.positions()
    )
    axis = np.asarray(robot.track.direction, dtype=float)
    pos_grid = pos[0][None, :] - grid[:, None] * axis[None, :]
    rot_grid = np.broadcast_to(rot[0], (grid.shape[0], 3, 3))
    sols, valid = _ik_arm(robot, rot_grid, pos_grid)
    grouped = _verify_and_filter(robot, sols, valid, rot_grid, pos_grid, grid)
    merged = [q for rows in grouped for q in rows]
    merged.sort(key=lambda r: tuple(r))
    return merged


def ik_sweep(
    robot: RobotModel,
    rotation: np.ndarray,
    origins: np.ndarray,
    track_positions: Iterable[float] | None = None,
) -> list[list[np.ndarray]]:
    """IK families for many tool positions sharing one orientation.

    This is the inner loop of Cartesian planning: an extrusion pass keeps the
    tool orientation fixed while the tip slides along the element, so the
    whole sweep shares the rotation matrix.  Returns one (possibly empty)
    solution list per origin, each verified and sorted like `ik`.
    """
    origins = np.atleast_2d(np.asarray(origins, dtype=float))
    n = origins.shape[0]
    frames = np.zeros((n, 4, 4))
    frames[:, 3, 3] = 1.0
    frames[:, :3, :3] = rotation
    frames[:, :3, 3] = origins
    rot, pos = _flange_targets(robot, frames)

    if robot.track is None:
        sols, valid = _ik_arm(robot, rot, pos)
        return _verify_and_filter(robot, sols, valid, rot, pos, None)

    grid = (
        np.asarray(list(track_positions), dtype=float)
        if track_positions is not None
        else robot.track.positions()
    )
    axis = np.asarray(robot.track.direction, dtype=float)
    s = grid.shape[0]
    pos_all = pos[:, None, :] - grid[None, :, None] * axis[None, None, :]
    pos_all = pos_all.reshape(n * s, 3)
    rot_all = np.repeat(rot, s, axis=0)
    track_all = np.tile(grid, n)
    sols, valid = _ik_arm(robot, rot_all, pos_all)
    grouped = _verify_and_filter(robot, sols, valid, rot_all, pos_all, track_all)
    out: list[list[np.ndarray]] = []
    for i in range(n):
        rows = [q for g in grouped[i * s : (i + 1) * s] for q in g]
        rows.sort(key=lambda r: tuple(r))
        out.append(rows)
    return out


# ---------------------------------------------------------------------------
# distances and collision


def joint_distance(
    robot: RobotModel,
    q1: np.ndarray,
    q2: np.ndarray,
    norm: str = "l1",
    weights: np.ndarray | None = None,
) -> float:
    """Weighted joint-space distance; 'l1' drives all path costs."""
    w = robot.weights if weights is None else np.asarray(weights, dtype=float)
    delta = w * np.abs(np.asarray(q1, float) - np.asarray(q2, float))
    if norm == "l1":
        return float(delta.sum())
    if norm == "l2":
        return float(np.sqrt((delta * delta).sum()))
    raise KinematicsError(f"unknown norm {norm!r}")


class CapsuleSet:
    """Static scene capsules packed into arrays for batch distance tests."""

    def __init__(self, capsules: Sequence[CapsuleShape]):
        self.capsules = tuple(capsules)
        if self.capsules:
            self.a = np.array([c.p0 for c in self.capsules], dtype=float)
            self.b = np.array([c.p1 for c in self.capsules], dtype=float)
            self.radii = np.array([c.radius for c in self.capsules], dtype=float)
        else:
            self.a = np.zeros((0, 3))
            self.b = np.zeros((0, 3))
            self.radii = np.zeros(0)

    def __len__(self) -> int:
        return len(self.capsules)


def _robot_capsule_table(robot: RobotModel):
    entries = [(lc.frame, lc.shape) for lc in robot.link_capsules]
    tool_frame = len(robot.joints) + 1
    entries.extend((tool_frame, cap) for cap in robot.ee.capsules)
    frames_idx = np.array([e[0] for e in entries], dtype=int)
    local_a = np.array([e[1].p0 for e in entries], dtype=float)
    local_b = np.array([e[1].p1 for e in entries], dtype=float)
    radii = np.array([e[1].radius for e in entries], dtype=float)
    # self-collision pairs: links at least two frames apart
    pairs = [
        (i, j)
        for i in range(len(entries))
        for j in range(i + 1, len(entries))
        if abs(int(frames_idx[i]) - int(frames_idx[j])) >= 2
    ]
    return frames_idx, local_a, local_b, radii, pairs


def config_collides_batch(
    robot: RobotModel,
    qs: np.ndarray,
    scene: CapsuleSet | Sequence[CapsuleShape] | None,
    clearance: float | None = None,
) -> np.ndarray:
    """Vectorized collision test; True rows collide.

    Checks every robot/EE capsule against the scene plus non-adjacent
    self-collision pairs.  The robot's own static workcell capsules are
    always part of the scene.
    """
    qs = np.atleast_2d(np.asarray(qs, dtype=float))
    margin = robot.ee.clearance if clearance is None else clearance
    if not isinstance(scene, CapsuleSet):
        scene = CapsuleSet(tuple(scene or ()) + robot.static_capsules)
    elif robot.static_capsules:
        scene = CapsuleSet(scene.capsules + robot.static_capsules)

    frames_idx, local_a, local_b, radii, pairs = _robot_capsule_table(robot)
    frames = fk_frames_batch(robot, qs)  # (n, F, 4, 4)
    n, c = qs.shape[0], len(radii)
    sel = frames[:, frames_idx]  # (n, c, 4, 4)
    world_a = np.einsum("ncij,cj->nci", sel[:, :, :3, :3], local_a) + sel[:, :, :3, 3]
    world_b = np.einsum("ncij,cj->nci", sel[:, :, :3, :3], local_b) + sel[:, :, :3, 3]

    hit = np.zeros(n, dtype=bool)
    if len(scene):
        dist = segment_distance_batch(
            world_a[:, :, None, :],
            world_b[:, :, None, :],
            scene.a[None, None, :, :],
            scene.b[None, None, :, :],
        )  # (n, c, m)
        limit = radii[None, :, None] + scene.radii[None, None, :] + margin
        hit |= np.any(dist < limit, axis=(1, 2))
    for i, j in pairs:
        dist = segment_distance_batch(
            world_a[:, i], world_b[:, i], world_a[:, j], world_b[:, j]
        )
        hit |= dist < radii[i] + radii[j] + margin
    return hit


def config_collides(
    robot: RobotModel,
    q: np.ndarray,
    scene: CapsuleSet | Sequence[CapsuleShape] | None,
    clearance: float | None = None,
) -> bool:
    return bool(config_collides_batch(robot, np.asarray(q)[None, :], scene, clearance)[0])


# ---------------------------------------------------------------------------
# loading


def load_robot(source: str | Path | dict) -> RobotModel:
    """Build a RobotModel from a JSON path or parsed document."""
    if isinstance(source, (str, Path)):
        path = Path(source)
        try:
            doc = json.loads(path.read_text())
        except FileNotFoundError as exc:
            raise RobotConfigError(f"robot file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise RobotConfigError(f"robot file {path} is not valid JSON: {exc}") from exc
    else:
        doc = source
    if not isinstance(doc, dict):
        raise RobotConfigError("robot document must be a JSON object")
    try:
        name = str(doc.get("name", "robot"))
        dh_rows = doc["dh"]
        joints = tuple(
            Joint(
                kind="revolute",
                a=float(row["a"]),
                alpha=math.radians(float(row["alpha_deg"])),
                d=float(row["d"]),
                theta=math.radians(float(row.get("theta_offset_deg", 0.0))),
                lower=math.radians(float(row["lower_deg"])),
                upper=math.radians(float(row["upper_deg"])),
                weight=float(row.get("weight", 1.0)),
            )
            for row in dh_rows
        )
        _check_solvable_family(joints)

        base = doc.get("base_pose", {})
        base_pose = make_transform(
            base.get("origin", (0.0, 0.0, 0.0)),
            [math.radians(v) for v in base.get("rpy_deg", (0.0, 0.0, 0.0))],
        )
        tool_doc = doc.get("tool", {})
        tool = make_transform(
            tool_doc.get("origin", (0.0, 0.0, 0.0)),
            [math.radians(v) for v in tool_doc.get("rpy_deg", (0.0, 0.0, 0.0))],
        )

        track = None
        if "track" in doc and doc["track"] is not None:
            tr = doc["track"]
            track = TrackSpec(
                direction=tuple(float(v) for v in tr["direction"]),
                lower=float(tr["lower"]),
                upper=float(tr["upper"]),
                step=float(tr.get("step", 10.0)),
                weight=float(tr.get("weight", 1.0)),
            )

        home_doc = doc.get("home", {})
        home_arm = [math.radians(float(v)) for v in home_doc.get("joints_deg", [0.0] * 6)]
        if track is not None:
            home = np.array([float(home_doc.get("track", track.lower))] + home_arm)
        else:
            home = np.array(home_arm)

        link_capsules = tuple(
            LinkCapsule(
                frame=int(row["frame"]),
                shape=CapsuleShape(
                    tuple(float(v) for v in row["p0"]),
                    tuple(float(v) for v in row["p1"]),
                    float(row["radius"]),
                ),
            )
            for row in doc.get("link_capsules", [])
        )
        clearance = float(doc.get("clearance", 2.0))
        if "ee" in doc and doc["ee"] != "default":
            caps = tuple(
                CapsuleShape(
                    tuple(float(v) for v in row["p0"]),
                    tuple(float(v) for v in row["p1"]),
                    float(row["radius"]),
                )
                for row in doc["ee"]["capsules"]
            )
            ee = EEGeometry(caps, clearance)
        else:
            ee = default_ee_geometry(clearance)
        static = tuple(
            CapsuleShape(
                tuple(float(v) for v in row["p0"]),
                tuple(float(v) for v in row["p1"]),
                float(row["radius"]),
            )
            for row in doc.get("static_capsules", [])
        )
    except (KeyError, TypeError, ValueError, GeometryError) as exc:
        raise RobotConfigError(f"bad robot document: {exc}") from exc

    robot = RobotModel(
        name=name,
        joints=joints,
        base_pose=base_pose,
        tool=tool,
        home=home,
        link_capsules=link_capsules,
        ee=ee,
        track=track,
        static_capsules=static,
        source=doc,
    )
    max_frame = len(joints) + 1
    for lc in link_capsules:
        if not 0 <= lc.frame <= max_frame:
            raise RobotConfigError(f"link capsule frame {lc.frame} out of range")
    if not robot.within_limits(home):
        raise RobotConfigError("home configuration violates joint limits")
    return robot
