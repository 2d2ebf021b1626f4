"""Plan document format: schema, fingerprints, serialization, seam gaps."""

import hashlib
import json

import numpy as np
import pytest

from trusspath.fixtures import load_bundled_robot
from trusspath.kinematics import fk
from trusspath.postprocess import (
    PLAN_VERSION,
    PlanFormatError,
    canonical_json,
    fingerprint,
    load_plan,
    plan_from_dict,
    plan_to_dict,
    save_plan,
    seam_gaps,
    tcp_entries,
    validate_plan_document,
)

IDENTITY = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]


def tcp_stub(n):
    return [
        {"origin": [float(i), 0.0, 0.0], "zaxis": [0.0, 0.0, 1.0], "rotation": IDENTITY}
        for i in range(n)
    ]


def subprocess_doc(sid, kind, joints, io_anchors=None):
    data_kind = "joint" if kind == "transition" else "tcp"
    return {
        "id": sid,
        "kind": kind,
        "data_kind": data_kind,
        "joints": [[float(v) for v in row] for row in joints],
        "tcp": None if data_kind == "joint" else tcp_stub(len(joints)),
        "io_anchors": io_anchors,
    }


def toy_doc():
    """Minimal two-task plan document that satisfies every format rule."""
    fps = {
        "model": fingerprint({"m": 1}),
        "robot": fingerprint({"r": 1}),
        "config": fingerprint({"c": 1}),
    }
    tasks = []
    for tid, base in ((0, 0.0), (1, 1.0)):
        subs = [
            subprocess_doc(tid * 4 + 0, "transition", [[base, 0.0], [base + 0.1, 0.0]]),
            subprocess_doc(tid * 4 + 1, "retraction-approach", [[base + 0.1, 0.0], [base + 0.2, 0.0]]),
            subprocess_doc(
                tid * 4 + 2,
                "extrusion",
                [[base + 0.2, 0.0], [base + 0.3, 0.0], [base + 0.4, 0.0]],
                io_anchors={"extruder_on": 0, "extruder_off": 2},
            ),
            subprocess_doc(tid * 4 + 3, "retraction-depart", [[base + 0.4, 0.0], [base + 0.5, 0.0]]),
        ]
        tasks.append({"task_id": tid, "element_id": tid + 10, "subprocesses": subs})
    return {
        "version": PLAN_VERSION,
        "fingerprints": fps,
        "dof": 2,
        "tasks": tasks,
    }


def test_canonical_json_and_fingerprint():
    assert canonical_json({"b": 1, "a": [1.5, 2]}) == '{"a":[1.5,2],"b":1}'
    payload = {"a": 1, "b": [2, 3]}
    expected = hashlib.sha256(canonical_json(payload).encode()).hexdigest()
    assert fingerprint(payload) == expected
    assert fingerprint({"b": [2, 3], "a": 1}) == expected
    assert fingerprint({"a": 1, "b": [2, 4]}) != expected


def test_tcp_entries_match_forward_kinematics():
    robot = load_bundled_robot("arm")
    qs = np.array([robot.home, robot.home + 0.05])
    entries = tcp_entries(robot, qs)
    assert len(entries) == 2
    for q, entry in zip(qs, entries):
        pose = fk(robot, q)
        assert np.allclose(entry["origin"], pose.position, atol=1e-9)
        rot = np.array(entry["rotation"])
        assert np.allclose(rot[:, 2], entry["zaxis"], atol=1e-12)
        assert np.allclose(pose.direction, -rot[:, 2], atol=1e-9)


def test_valid_document_round_trips():
    doc = toy_doc()
    validate_plan_document(doc)
    plan = plan_from_dict(doc)
    assert plan.dof == 2
    assert [t.element_id for t in plan.tasks] == [10, 11]
    assert plan_to_dict(plan) == doc


def test_document_rejections():
    cases = []

    d = toy_doc(); d["version"] = "999"
    cases.append((d, "rejected"))

    d = toy_doc(); del d["fingerprints"]["robot"]
    cases.append((d, "rejected"))

    d = toy_doc(); d["fingerprints"]["model"] = "zz"
    cases.append((d, "rejected"))

    d = toy_doc()
    subs = d["tasks"][0]["subprocesses"]
    subs[1], subs[2] = subs[2], subs[1]
    cases.append((d, "canonical order"))

    d = toy_doc(); d["tasks"][0]["subprocesses"].pop()
    cases.append((d, "rejected"))

    d = toy_doc(); d["tasks"][0]["subprocesses"][0]["joints"][0] = [0.0, 0.0, 0.0]
    cases.append((d, "not all 2 wide"))

    d = toy_doc(); d["tasks"][0]["subprocesses"][2]["data_kind"] = "joint"
    cases.append((d, "must carry tcp data"))

    d = toy_doc()
    d["tasks"][0]["subprocesses"][1]["tcp"] = tcp_stub(5)
    cases.append((d, "tool poses for"))

    d = toy_doc()
    d["tasks"][0]["subprocesses"][2]["io_anchors"] = {"extruder_on": 0, "extruder_off": 1}
    cases.append((d, "span the whole pass"))

    d = toy_doc(); d["tasks"][0]["subprocesses"][2]["io_anchors"] = None
    cases.append((d, "requires io anchors"))

    for doc, frag in cases:
        with pytest.raises(PlanFormatError, match=frag):
            validate_plan_document(doc)
    # plan_from_dict goes through the same gate
    bad = toy_doc(); bad["version"] = "999"
    with pytest.raises(PlanFormatError):
        plan_from_dict(bad)


def test_save_load_byte_stable(tmp_path):
    doc = toy_doc()
    plan = plan_from_dict(doc)
    p1 = tmp_path / "plan.json"
    p2 = tmp_path / "plan2.json"
    save_plan(plan, p1)
    reloaded = load_plan(p1)
    save_plan(reloaded, p2)
    assert p1.read_bytes() == p2.read_bytes()
    assert plan_to_dict(reloaded) == doc


def test_load_plan_errors(tmp_path):
    with pytest.raises(PlanFormatError, match="not found"):
        load_plan(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    with pytest.raises(PlanFormatError, match="not valid JSON"):
        load_plan(bad)
    tampered = toy_doc()
    tampered["tasks"][0]["subprocesses"][0]["kind"] = "extrusion"
    f = tmp_path / "tampered.json"
    f.write_text(json.dumps(tampered))
    with pytest.raises(PlanFormatError):
        load_plan(f)


def test_seam_gaps_cover_every_boundary():
    doc = toy_doc()
    # introduce one known discontinuity: task 1 transition starts at 1.0
    # while task 0 depart ends at 0.5
    plan = plan_from_dict(doc)
    gaps = seam_gaps(plan)
    assert len(gaps) == 7  # 8 subprocesses, every boundary but the first
    by_id = {sid: gap for _, sid, gap in gaps}
    assert by_id[1] == pytest.approx(0.0)
    assert by_id[2] == pytest.approx(0.0)
    assert by_id[3] == pytest.approx(0.0)
    assert by_id[4] == pytest.approx(0.5)  # the inter-task stitch
    assert gaps[3][0] == 1  # reported against the later task
