"""End-to-end planning and independent plan validation.

`run_pipeline` chains the stages: order the elements, pick orientation
blocks and joint paths for every extrusion pass, wrap each pass in approach
and depart slides, and stitch free-space transitions between them, starting
from the robot's home configuration.  The output is a fingerprinted plan
document plus a stage report.

`validate_plan` is the independent half: it takes a plan document plus the
model, robot, and configuration, and re-derives every claim the plan makes
(format, fingerprints, continuity, joint validity, tool consistency,
clearance, structural admissibility) without consulting any planner state.
Planner bugs show up here as failed checks, not as exceptions.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .cartesian import (
    expand_and_search,
    extract_block_path,
    plan_retraction,
    prepare_tasks,
)
from .config import PlannerConfig
from .geometry import (
    CapsuleShape,
    ee_element_collision,
    ee_self_collision,
    sample_directions,
)
from .kinematics import (
    CapsuleSet,
    RobotModel,
    config_collides_batch,
    fk_frames_batch,
)
from .postprocess import (
    PLAN_VERSION,
    PlanFormatError,
    Subprocess,
    TaggedPlan,
    TaskPlan,
    fingerprint,
    plan_to_dict,
    tcp_entries,
    validate_plan_document,
)
from .sequence import SearchStats, SequenceResult, plan_sequence
from .structural import PartialStructure, analyze, check_stability, check_stiffness
from .transition import plan_transition
from .truss import TrussModel, serialize_model

SEAM_TOLERANCE = 1e-9
TCP_TOLERANCE = 1e-6
LIMIT_TOLERANCE = 1e-9


class PipelineError(Exception):
    pass


# ---------------------------------------------------------------------------
# fingerprints


def input_fingerprints(
    model: TrussModel, robot: RobotModel, config: PlannerConfig
) -> dict:
    robot_doc = robot.source
    if robot_doc is None:
        robot_doc = {
            "name": robot.name,
            "dof": robot.dof,
            "home": [float(v) for v in robot.home],
        }
    return {
        "model": fingerprint(serialize_model(model)),
        "robot": fingerprint(robot_doc),
        "config": fingerprint(config.to_dict()),
    }


# ---------------------------------------------------------------------------
# planning


@dataclass
class PipelineReport:
    sequence_stats: SearchStats
    sequence_time: float = 0.0
    cartesian_time: float = 0.0
    transition_time: float = 0.0
    total_time: float = 0.0
    capsules_built: int = 0
    capsules_attempted: int = 0
    cartesian_cost: float = 0.0
    transition_count: int = 0
    transition_via_home: int = 0
    transition_cost: float = 0.0
    subprocess_count: int = 0

    def table(self) -> str:
        s = self.sequence_stats
        rows = [
            (
                "sequence",
                self.sequence_time,
                f"{s.partial_states} states, {s.backtracks} backtracks",
            ),
            (
                "cartesian",
                self.cartesian_time,
                f"{self.capsules_built}/{self.capsules_attempted} capsules, "
                f"joint cost {self.cartesian_cost:.3f}",
            ),
            (
                "transitions",
                self.transition_time,
                f"{self.transition_count} moves, "
                f"{self.transition_via_home} via home, "
                f"joint cost {self.transition_cost:.3f}",
            ),
            ("total", self.total_time, f"{self.subprocess_count} subprocesses"),
        ]
        width = max(len(r[0]) for r in rows)
        lines = [f"{'stage':<{width}} | {'time [s]':>9} | detail"]
        lines.append("-" * len(lines[0]))
        for name, t, detail in rows:
            lines.append(f"{name:<{width}} | {t:9.2f} | {detail}")
        return "\n".join(lines)


def run_pipeline(
    model: TrussModel,
    robot: RobotModel,
    config: PlannerConfig | None = None,
    sequence: SequenceResult | None = None,
) -> tuple[TaggedPlan, PipelineReport]:
    config = config or PlannerConfig()
    config.validate()
    t_all = time.monotonic()

    t0 = time.monotonic()
    if sequence is None:
        sequence = plan_sequence(model, robot, config)
    elif sequence.directions.count != config.direction_count:
        raise PipelineError(
            f"sequence was planned over {sequence.directions.count} directions "
            f"but the configuration says {config.direction_count}"
        )
    seq_time = time.monotonic() - t0

    t0 = time.monotonic()
    tasks = prepare_tasks(model, robot, sequence, config)
    rng = np.random.default_rng(config.seed)
    sparse = expand_and_search(
        robot, tasks, config, rng, max_capsules=config.capsule_budget
    )
    directions = sample_directions(config.direction_count)
    trajectories = [
        extract_block_path(robot, task, cap, directions, ei, xi, config)
        for task, (cap, ei, xi) in zip(tasks, sparse.picks)
    ]
    cart_time = time.monotonic() - t0

    t0 = time.monotonic()
    plan_tasks: list[TaskPlan] = []
    prev = robot.home
    sub_id = 0
    trans_cost = 0.0
    via_home = 0
    for k, (task, (cap, ei, xi), traj) in enumerate(
        zip(tasks, sparse.picks, trajectories)
    ):
        v = directions[cap.direction_index]
        out = plan_retraction(
            robot, task.waypoints[0], v, cap.rotation, traj[0],
            task.scene, config, directions, cap.direction_index,
        )
        approach = out[::-1].copy() if out is not None else traj[:1].copy()
        out = plan_retraction(
            robot, task.waypoints[-1], v, cap.rotation, traj[-1],
            task.scene_after, config, directions, cap.direction_index,
        )
        depart = out if out is not None else traj[-1:].copy()

        move = plan_transition(
            robot, prev, approach[0], task.scene, config,
            np.random.default_rng((config.seed, k)),
        )
        trans_cost += move.cost
        via_home += int(move.via_home)

        plan_tasks.append(
            TaskPlan(
                task_id=k,
                element_id=task.element,
                subprocesses=[
                    Subprocess(sub_id, "transition", "joint", move.path),
                    Subprocess(
                        sub_id + 1,
                        "retraction-approach",
                        "tcp",
                        approach,
                        tcp_entries(robot, approach),
                    ),
                    Subprocess(
                        sub_id + 2,
                        "extrusion",
                        "tcp",
                        traj,
                        tcp_entries(robot, traj),
                        {"extruder_on": 0, "extruder_off": len(traj) - 1},
                    ),
                    Subprocess(
                        sub_id + 3,
                        "retraction-depart",
                        "tcp",
                        depart,
                        tcp_entries(robot, depart),
                    ),
                ],
            )
        )
        sub_id += 4
        prev = depart[-1]
    trans_time = time.monotonic() - t0

    plan = TaggedPlan(
        version=PLAN_VERSION,
        fingerprints=input_fingerprints(model, robot, config),
        dof=robot.dof,
        tasks=plan_tasks,
    )
    report = PipelineReport(
        sequence_stats=sequence.stats,
        sequence_time=seq_time,
        cartesian_time=cart_time,
        transition_time=trans_time,
        total_time=time.monotonic() - t_all,
        capsules_built=sparse.built_capsules,
        capsules_attempted=sparse.attempted,
        cartesian_cost=sparse.cost,
        transition_count=len(plan_tasks),
        transition_via_home=via_home,
        transition_cost=trans_cost,
        subprocess_count=sub_id,
    )
    return plan, report


# ---------------------------------------------------------------------------
# validation


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str


@dataclass
class ValidationReport:
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def table(self) -> str:
        width = max(len(c.name) for c in self.checks)
        lines = []
        for c in self.checks:
            status = "pass" if c.passed else "FAIL"
            lines.append(f"{c.name:<{width}} | {status} | {c.detail}")
        return "\n".join(lines)


def _check(report: ValidationReport, name: str, passed: bool, detail: str) -> None:
    report.checks.append(CheckResult(name, passed, detail))


def validate_plan(
    plan: TaggedPlan | dict,
    model: TrussModel,
    robot: RobotModel,
    config: PlannerConfig | None = None,
) -> ValidationReport:
    """Re-derive every claim a plan makes against its inputs."""
    config = config or PlannerConfig()
    config.validate()
    report = ValidationReport()

    doc = plan if isinstance(plan, dict) else plan_to_dict(plan)
    try:
        validate_plan_document(doc)
        _check(report, "format", True, f"{len(doc['tasks'])} tasks, schema ok")
    except PlanFormatError as exc:
        _check(report, "format", False, str(exc))
        return report  # nothing else is trustworthy

    expected = input_fingerprints(model, robot, config)
    mismatched = [k for k in expected if doc["fingerprints"].get(k) != expected[k]]
    _check(
        report,
        "fingerprints",
        not mismatched,
        "model, robot, config all match" if not mismatched
        else "mismatch: " + ", ".join(mismatched),
    )

    # reconstruct numeric views once
    tasks = doc["tasks"]
    joints = {
        s["id"]: np.array(s["joints"], dtype=float)
        for t in tasks
        for s in t["subprocesses"]
    }

    # continuity: seams and the home start
    worst_gap = 0.0
    prev_end: np.ndarray | None = None
    for t in tasks:
        for s in t["subprocesses"]:
            rows = joints[s["id"]]
            if prev_end is not None:
                worst_gap = max(worst_gap, float(np.abs(rows[0] - prev_end).max()))
            prev_end = rows[-1]
    first = joints[tasks[0]["subprocesses"][0]["id"]][0]
    home_gap = float(np.abs(first - robot.home).max())
    ok = worst_gap <= SEAM_TOLERANCE and home_gap <= SEAM_TOLERANCE
    _check(
        report,
        "continuity",
        ok,
        f"worst seam {worst_gap:.2e}, home offset {home_gap:.2e}",
    )

    # joint validity: limits everywhere, jump limits inside tcp subprocesses
    limits = robot.jump_limits(config.jump_limit, config.prismatic_jump_limit)
    bad_limit = 0
    bad_jump = 0
    for t in tasks:
        for s in t["subprocesses"]:
            rows = joints[s["id"]]
            inside = (rows >= robot.lower - LIMIT_TOLERANCE) & (
                rows <= robot.upper + LIMIT_TOLERANCE
            )
            bad_limit += int(rows.shape[0] - inside.all(axis=1).sum())
            if s["data_kind"] == "tcp" and rows.shape[0] > 1:
                step = np.abs(np.diff(rows, axis=0))
                bad_jump += int((step > limits + LIMIT_TOLERANCE).any(axis=1).sum())
    _check(
        report,
        "joint validity",
        bad_limit == 0 and bad_jump == 0,
        f"{bad_limit} rows out of limits, {bad_jump} oversized steps",
    )

    # tool consistency: forward kinematics must reproduce the tcp data and
    # each extrusion must span exactly its element
    worst_tcp = 0.0
    coverage_errors = []
    for t in tasks:
        for s in t["subprocesses"]:
            if s["data_kind"] != "tcp":
                continue
            rows = joints[s["id"]]
            frames = fk_frames_batch(robot, rows)[:, -1]
            origins = np.array([e["origin"] for e in s["tcp"]])
            zaxes = np.array([e["zaxis"] for e in s["tcp"]])
            rots = np.array([e["rotation"] for e in s["tcp"]])
            worst_tcp = max(
                worst_tcp,
                float(np.abs(frames[:, :3, 3] - origins).max()),
                float(np.abs(frames[:, :3, 2] - zaxes).max()),
                float(np.abs(frames[:, :3, :3] - rots).max()),
            )
            if s["kind"] == "extrusion":
                elem = model.element(t["element_id"])
                a = model.node(elem.start).position
                b = model.node(elem.end).position
                length = float(np.linalg.norm(np.asarray(b) - np.asarray(a)))
                expect_rows = int(np.ceil(length / config.path_spacing)) + 1
                ends = origins[[0, -1]]
                fwd = max(
                    float(np.abs(ends[0] - a).max()), float(np.abs(ends[1] - b).max())
                )
                rev = max(
                    float(np.abs(ends[0] - b).max()), float(np.abs(ends[1] - a).max())
                )
                if min(fwd, rev) > TCP_TOLERANCE:
                    coverage_errors.append(
                        f"task {t['task_id']} does not span element {elem.id}"
                    )
                if origins.shape[0] != expect_rows:
                    coverage_errors.append(
                        f"task {t['task_id']} has {origins.shape[0]} waypoints, "
                        f"expected {expect_rows}"
                    )
    _check(
        report,
        "tool consistency",
        worst_tcp <= TCP_TOLERANCE and not coverage_errors,
        f"worst pose error {worst_tcp:.2e}"
        + ("" if not coverage_errors else "; " + "; ".join(coverage_errors)),
    )

    # clearance: rebuild each task's scene from the plan's own order
    radius = model.section.radius
    collision_errors = []
    ratio = config.prismatic_jump_limit / config.jump_limit
    fine_step = 0.5 * config.transition.step * robot.jump_limits(1.0, ratio)
    scene_caps: list[CapsuleShape] = list(robot.static_capsules)
    for t in tasks:
        elem = model.element(t["element_id"])
        seg = model.element_segment(elem.id)
        own = CapsuleShape(tuple(seg[0]), tuple(seg[1]), radius)
        scene = CapsuleSet(tuple(scene_caps))
        scene_after = CapsuleSet(tuple(scene_caps) + (own,))
        for s in t["subprocesses"]:
            rows = joints[s["id"]]
            if s["kind"] == "transition":
                probe = [rows[0]]
                for a, b in zip(rows[:-1], rows[1:]):
                    n = max(2, int(np.ceil((np.abs(b - a) / fine_step).max())) + 1)
                    probe.extend(np.linspace(a, b, n)[1:])
                hits = config_collides_batch(
                    robot, np.array(probe), scene, clearance=config.clearance
                )
            else:
                check_scene = scene_after if s["kind"] == "retraction-depart" else scene
                hits = config_collides_batch(
                    robot, rows, check_scene, clearance=config.clearance
                )
            if hits.any():
                collision_errors.append(
                    f"subprocess {s['id']} ({s['kind']}): "
                    f"{int(hits.sum())} colliding configs"
                )
            if s["kind"] == "extrusion":
                origins = np.array([e["origin"] for e in s["tcp"]])
                v = -np.array(s["tcp"][0]["zaxis"])
                if ee_self_collision(
                    origins, v, 0.0, radius, robot.ee, clearance=config.clearance
                ):
                    collision_errors.append(
                        f"subprocess {s['id']}: extruder body crosses its own bead"
                    )
                for prior in scene_caps[len(robot.static_capsules):]:
                    if ee_element_collision(
                        origins,
                        v,
                        0.0,
                        np.array([prior.a, prior.b]),
                        radius,
                        robot.ee,
                        clearance=config.clearance,
                    ):
                        collision_errors.append(
                            f"subprocess {s['id']}: extruder sweep hits a "
                            "placed element"
                        )
                        break
        scene_caps.append(own)
    _check(
        report,
        "clearance",
        not collision_errors,
        "all subprocesses clear the partial structure"
        if not collision_errors
        else "; ".join(collision_errors[:4]),
    )

    # structural admissibility of the element order
    built_nodes = {n.id for n in model.nodes if n.grounded}
    placed: list[int] = []
    structure_errors = []
    for t in tasks:
        elem = model.element(t["element_id"])
        if elem.start not in built_nodes and elem.end not in built_nodes:
            structure_errors.append(
                f"task {t['task_id']}: element {elem.id} touches no built node"
            )
        placed.append(elem.id)
        built_nodes.update((elem.start, elem.end))
        partial = PartialStructure(model, tuple(placed))
        result = analyze(partial)
        if not check_stiffness(partial, config.displacement_tolerance, result=result):
            structure_errors.append(
                f"task {t['task_id']}: prefix deflection exceeds "
                f"{config.displacement_tolerance} mm"
            )
        if not check_stability(partial, result=result):
            structure_errors.append(f"task {t['task_id']}: prefix is unstable")
    if len(placed) != len(set(placed)) or set(placed) != {
        e.id for e in model.elements
    }:
        structure_errors.append("plan does not cover every element exactly once")
    _check(
        report,
        "structure",
        not structure_errors,
        "every prefix connected, stiff, and stable"
        if not structure_errors
        else "; ".join(structure_errors[:4]),
    )

    return report
