"""Plan document assembly, serialization, and integrity fingerprints.

A finished plan is a list of per-element task entries, each holding exactly
four subprocesses in execution order: the free-space transition that brings
the robot in, the approach slide onto the start node, the extrusion pass
itself, and the depart slide away from the end node.  Transitions are pure
joint-space data; the other three carry tool poses alongside the joints so
downstream consumers (simulation, controller code generation) do not need a
kinematics model.

Documents embed SHA-256 fingerprints of the model, robot, and configuration
they were planned from, letting the validator refuse a plan replayed against
different inputs.  Serialization is canonical: sorted keys, no timestamps,
full float precision.  Planning twice from the same inputs and seed yields
byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from .kinematics import RobotModel, fk_frames_batch

PLAN_VERSION = "1"
SUBPROCESS_TYPES = (
    "transition",
    "retraction-approach",
    "extrusion",
    "retraction-depart",
)


class PlanFormatError(Exception):
    pass


@dataclass
class Subprocess:
    id: int
    kind: str  # one of SUBPROCESS_TYPES
    data_kind: str  # "joint" for transitions, "tcp" otherwise
    joints: np.ndarray  # (m, dof)
    tcp: list[dict] | None = None  # per waypoint: origin, zaxis, rotation
    io_anchors: dict | None = None  # extrusion only: extruder_on / extruder_off


@dataclass
class TaskPlan:
    task_id: int
    element_id: int
    subprocesses: list[Subprocess] = field(default_factory=list)


@dataclass
class TaggedPlan:
    version: str
    fingerprints: dict  # {"model": hex, "robot": hex, "config": hex}
    dof: int
    tasks: list[TaskPlan] = field(default_factory=list)


# ---------------------------------------------------------------------------
# fingerprints and canonical form


def canonical_json(payload) -> str:
    """Key-sorted, separator-normalized JSON; the fingerprint domain."""
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def fingerprint(payload) -> str:
    return hashlib.sha256(canonical_json(payload).encode("utf-8")).hexdigest()


def tcp_entries(robot: RobotModel, joints: np.ndarray) -> list[dict]:
    """Tool poses for each joint row: origin, tool z axis, full rotation."""
    frames = fk_frames_batch(robot, np.atleast_2d(joints))[:, -1]
    out = []
    for f in frames:
        out.append(
            {
                "origin": [float(v) for v in f[:3, 3]],
                "zaxis": [float(v) for v in f[:3, 2]],
                "rotation": [[float(v) for v in row] for row in f[:3, :3]],
            }
        )
    return out


# ---------------------------------------------------------------------------
# schema

_VEC3 = {
    "type": "array",
    "minItems": 3,
    "maxItems": 3,
    "items": {"type": "number"},
}

_SUBPROCESS_SCHEMA = {
    "type": "object",
    "required": ["id", "kind", "data_kind", "joints"],
    "additionalProperties": False,
    "properties": {
        "id": {"type": "integer", "minimum": 0},
        "kind": {"enum": list(SUBPROCESS_TYPES)},
        "data_kind": {"enum": ["joint", "tcp"]},
        "joints": {
            "type": "array",
            "minItems": 1,
            "items": {"type": "array", "minItems": 1, "items": {"type": "number"}},
        },
        "tcp": {
            "type": ["array", "null"],
            "items": {
                "type": "object",
                "required": ["origin", "zaxis", "rotation"],
                "additionalProperties": False,
                "properties": {
                    "origin": _VEC3,
                    "zaxis": _VEC3,
                    "rotation": {
                        "type": "array",
                        "minItems": 3,
                        "maxItems": 3,
                        "items": _VEC3,
                    },
                },
            },
        },
        "io_anchors": {
            "type": ["object", "null"],
            "required": ["extruder_on", "extruder_off"],
            "additionalProperties": False,
            "properties": {
                "extruder_on": {"type": "integer", "minimum": 0},
                "extruder_off": {"type": "integer", "minimum": 0},
            },
        },
    },
    "allOf": [
        {
            "if": {"properties": {"data_kind": {"const": "tcp"}}},
            "then": {"required": ["tcp"]},
        },
        {
            "if": {"properties": {"kind": {"const": "extrusion"}}},
            "then": {"required": ["io_anchors"]},
        },
    ],
}

PLAN_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["version", "fingerprints", "dof", "tasks"],
    "additionalProperties": False,
    "properties": {
        "version": {"const": PLAN_VERSION},
        "fingerprints": {
            "type": "object",
            "required": ["model", "robot", "config"],
            "additionalProperties": False,
            "properties": {
                key: {"type": "string", "pattern": "^[0-9a-f]{64}$"}
                for key in ("model", "robot", "config")
            },
        },
        "dof": {"type": "integer", "minimum": 1},
        "tasks": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["task_id", "element_id", "subprocesses"],
                "additionalProperties": False,
                "properties": {
                    "task_id": {"type": "integer", "minimum": 0},
                    "element_id": {"type": "integer", "minimum": 0},
                    "subprocesses": {
                        "type": "array",
                        "minItems": 4,
                        "maxItems": 4,
                        "items": _SUBPROCESS_SCHEMA,
                    },
                },
            },
        },
    },
}


def validate_plan_document(doc: dict) -> None:
    """Schema check plus the structural rules jsonschema cannot express."""
    try:
        jsonschema.validate(doc, PLAN_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise PlanFormatError(f"plan document rejected: {exc.message}") from exc
    for task in doc["tasks"]:
        kinds = [s["kind"] for s in task["subprocesses"]]
        if kinds != list(SUBPROCESS_TYPES):
            raise PlanFormatError(
                f"task {task['task_id']}: subprocess kinds {kinds} are not "
                f"the canonical order {list(SUBPROCESS_TYPES)}"
            )
        for sub in task["subprocesses"]:
            widths = {len(row) for row in sub["joints"]}
            if widths != {doc["dof"]}:
                raise PlanFormatError(
                    f"subprocess {sub['id']}: joint rows are not all "
                    f"{doc['dof']} wide"
                )
            expect_kind = "joint" if sub["kind"] == "transition" else "tcp"
            if sub["data_kind"] != expect_kind:
                raise PlanFormatError(
                    f"subprocess {sub['id']}: kind {sub['kind']} must carry "
                    f"{expect_kind} data"
                )
            if sub["data_kind"] == "tcp" and len(sub["tcp"]) != len(sub["joints"]):
                raise PlanFormatError(
                    f"subprocess {sub['id']}: {len(sub['tcp'])} tool poses for "
                    f"{len(sub['joints'])} joint rows"
                )
            if sub["kind"] == "extrusion":
                anchors = sub["io_anchors"]
                if anchors is None:
                    raise PlanFormatError(
                        f"subprocess {sub['id']}: extrusion requires io anchors"
                    )
                last = len(sub["joints"]) - 1
                if anchors["extruder_on"] != 0 or anchors["extruder_off"] != last:
                    raise PlanFormatError(
                        f"subprocess {sub['id']}: extruder anchors must span "
                        f"the whole pass (0 .. {last})"
                    )


# ---------------------------------------------------------------------------
# conversion and io


def plan_to_dict(plan: TaggedPlan) -> dict:
    return {
        "version": plan.version,
        "fingerprints": dict(plan.fingerprints),
        "dof": plan.dof,
        "tasks": [
            {
                "task_id": t.task_id,
                "element_id": t.element_id,
                "subprocesses": [
                    {
                        "id": s.id,
                        "kind": s.kind,
                        "data_kind": s.data_kind,
                        "joints": [[float(v) for v in row] for row in s.joints],
                        "tcp": s.tcp,
                        "io_anchors": s.io_anchors,
                    }
                    for s in t.subprocesses
                ],
            }
            for t in plan.tasks
        ],
    }


def plan_from_dict(doc: dict) -> TaggedPlan:
    validate_plan_document(doc)
    tasks = []
    for t in doc["tasks"]:
        subs = [
            Subprocess(
                id=s["id"],
                kind=s["kind"],
                data_kind=s["data_kind"],
                joints=np.array(s["joints"], dtype=float),
                tcp=s.get("tcp"),
                io_anchors=s.get("io_anchors"),
            )
            for s in t["subprocesses"]
        ]
        tasks.append(TaskPlan(t["task_id"], t["element_id"], subs))
    return TaggedPlan(doc["version"], dict(doc["fingerprints"]), doc["dof"], tasks)


def save_plan(plan: TaggedPlan, path: str | Path) -> None:
    doc = plan_to_dict(plan)
    validate_plan_document(doc)
    Path(path).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")


def load_plan(path: str | Path) -> TaggedPlan:
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise PlanFormatError(f"plan file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise PlanFormatError(f"plan file {path} is not valid JSON: {exc}") from exc
    return plan_from_dict(doc)


def seam_gaps(plan: TaggedPlan) -> list[tuple[int, int, float]]:
    """Largest joint discontinuity at every subprocess boundary.

    Returns (task_id, subprocess id of the later side, gap) triples covering
    both intra-task boundaries and the stitch between consecutive tasks.
    """
    gaps = []
    prev_end: np.ndarray | None = None
    for task in plan.tasks:
        for sub in task.subprocesses:
            if prev_end is not None:
                gap = float(np.abs(sub.joints[0] - prev_end).max())
                gaps.append((task.task_id, sub.id, gap))
            prev_end = sub.joints[-1]
    return gaps
