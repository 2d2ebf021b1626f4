"""Extrusion sequence search.

The planner assigns one truss element to each build slot so that every prefix
of the sequence is printable: the new element touches the structure built so
far (or the ground), the partial structure stays stiff and stable under its
own weight, and at least one end-effector direction with a reachable,
collision-free tool orientation survives for the element.

Feasible tool directions are tracked per element as bitsets over a fixed
direction set.  Placing an element prunes the bitsets of its unassigned
peers (two elements close to each other shadow each other's approach cones),
which both detects dead ends early and feeds the optional look-ahead value
ordering.  With layer decomposition enabled, the search runs layer by layer
and never backtracks across a finished layer; a layer that cannot be
completed aborts the whole search, which keeps worst-case behaviour bounded
at the cost of completeness across layers.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .config import PlannerConfig
from .geometry import (
    CapsuleShape,
    DirectionSet,
    ee_element_collision,
    ee_self_collision,
    pose_from_direction,
    sample_directions,
)
from .kinematics import (
    CapsuleSet,
    RobotModel,
    config_collides_batch,
    ik_sweep,
)
from .structural import PartialStructure, analyze, check_stability, check_stiffness
from .truss import TrussModel, discretize_element

GOLDEN_FRACTION = (math.sqrt(5.0) - 1.0) / 2.0


class SequencePlanningError(Exception):
    """No printable ordering was found within the search rules.

    Carries the search counters accumulated up to the failure so callers can
    still report how much work was done (`stats` attribute, may be None).
    """

    def __init__(self, message: str, stats: "SearchStats | None" = None):
        super().__init__(message)
        self.stats = stats


@dataclass(frozen=True)
class SequenceTask:
    position: int
    element: int
    direction_index: int
    direction: tuple[float, float, float]
    rotation: float
    start_node: int


@dataclass
class SearchStats:
    """Accounting for one sequence search, one row of the summary table."""

    total_time: float = 0.0
    partial_states: int = 0
    backtracks: int = 0
    stiffness_time: float = 0.0
    stiffness_checks: int = 0
    kinematics_time: float = 0.0
    kinematics_checks: int = 0
    ee_update_time: float = 0.0
    ee_update_checks: int = 0
    ee_update_pair_checks: int = 0
    collision_cost_time: float = 0.0
    collision_cost_checks: int = 0

    def as_dict(self) -> dict:
        return {
            "total_time": self.total_time,
            "partial_states": self.partial_states,
            "backtracks": self.backtracks,
            "stiffness_time": self.stiffness_time,
            "stiffness_checks": self.stiffness_checks,
            "kinematics_time": self.kinematics_time,
            "kinematics_checks": self.kinematics_checks,
            "ee_update_time": self.ee_update_time,
            "ee_update_checks": self.ee_update_checks,
            "ee_update_pair_checks": self.ee_update_pair_checks,
            "collision_cost_time": self.collision_cost_time,
            "collision_cost_checks": self.collision_cost_checks,
        }


_TABLE_COLUMNS = (
    "total [s]",
    "states",
    "stiff+stab [s|n]",
    "kinematics [s|n]",
    "ee-update [s|n]",
    "coll-cost [s|n]",
)


def render_stats_table(rows: list[tuple[str, SearchStats]]) -> str:
    """Fixed six-column summary, one line per labelled run."""
    label_w = max([len(r[0]) for r in rows] + [4])
    header = " | ".join([f"{'run':<{label_w}}"] + [f"{c:>18}" for c in _TABLE_COLUMNS])
    sep = "-" * len(header)
    lines = [header, sep]
    for label, s in rows:
        cells = [
            f"{s.total_time:18.2f}",
            f"{s.partial_states:18d}",
            f"{s.stiffness_time:10.2f}|{s.stiffness_checks:7d}",
            f"{s.kinematics_time:10.2f}|{s.kinematics_checks:7d}",
            f"{s.ee_update_time:10.2f}|{s.ee_update_checks:7d}",
            f"{s.collision_cost_time:10.2f}|{s.collision_cost_checks:7d}",
        ]
        lines.append(" | ".join([f"{label:<{label_w}}"] + cells))
    return "\n".join(lines)


@dataclass
class SequenceResult:
    tasks: list[SequenceTask]
    stats: SearchStats
    directions: DirectionSet


def sequence_to_dict(result: SequenceResult) -> dict:
    return {
        "direction_count": result.directions.count,
        "tasks": [
            {
                "position": t.position,
                "element": t.element,
                "direction_index": t.direction_index,
                "direction": [float(v) for v in t.direction],
                "rotation": t.rotation,
                "start_node": t.start_node,
            }
            for t in result.tasks
        ],
        "stats": result.stats.as_dict(),
    }


def sequence_from_dict(doc: dict) -> SequenceResult:
    """Rebuild a sequence result; direction indices are re-resolved against
    the deterministic direction lattice and must agree with the stored
    vectors."""
    directions = sample_directions(int(doc["direction_count"]))
    tasks = []
    for t in doc["tasks"]:
        vec = directions[int(t["direction_index"])]
        stored = np.array(t["direction"], dtype=float)
        if np.abs(vec - stored).max() > 1e-9:
            raise SequencePlanningError(
                f"task {t['position']}: stored direction does not match "
                f"index {t['direction_index']} of a "
                f"{doc['direction_count']}-direction lattice"
            )
        tasks.append(
            SequenceTask(
                position=int(t["position"]),
                element=int(t["element"]),
                direction_index=int(t["direction_index"]),
                direction=tuple(float(v) for v in t["direction"]),
                rotation=float(t["rotation"]),
                start_node=int(t["start_node"]),
            )
        )
    stats = SearchStats(**doc.get("stats", {}))
    return SequenceResult(tasks, stats, directions)


def rotation_sequence(count: int) -> np.ndarray:
    """Low-discrepancy roll angles: 0 first, then golden-ratio steps."""
    k = np.arange(count)
    return 2.0 * math.pi * np.mod(k * GOLDEN_FRACTION, 1.0)


def route_start_node(model: TrussModel, element_id: int, placed: list[int]) -> int:
    """Which endpoint the nozzle starts from.

    A node already part of the built structure (grounded counts) must anchor
    the pass so fresh material always bonds to something.  When both ends
    exist, start from the better-connected one; ties go to the lower id.
    """
    elem = model.element(element_id)
    degree = {elem.start: 0, elem.end: 0}
    exists = {n: model.node(n).grounded for n in (elem.start, elem.end)}
    for pid in placed:
        other = model.element(pid)
        for n in (other.start, other.end):
            if n in degree:
                degree[n] += 1
                exists[n] = True
    a, b = elem.start, elem.end
    if exists[a] != exists[b]:
        return a if exists[a] else b
    if degree[a] != degree[b]:
        return a if degree[a] > degree[b] else b
    return min(a, b)


class SequencePlanner:
    def __init__(self, model: TrussModel, robot: RobotModel, config: PlannerConfig):
        self.model = model
        self.robot = robot
        self.config = config
        self.directions = sample_directions(config.direction_count)
        self.stats = SearchStats()
        self._ids = [e.id for e in model.elements]
        self._index = {eid: k for k, eid in enumerate(self._ids)}
        self._segments = {eid: model.element_segment(eid) for eid in self._ids}
        self._capsules = {
            eid: CapsuleShape(
                tuple(self._segments[eid][0]),
                tuple(self._segments[eid][1]),
                model.section.radius,
            )
            for eid in self._ids
        }
        self._pair_cache: dict[tuple[int, int], np.ndarray] = {}
        self._path_cache: dict[tuple[int, int], np.ndarray] = {}
        self._self_cache: dict[tuple[int, int], np.ndarray] = {}
        self._rotations = rotation_sequence(config.rotation_samples)
        m = len(self.directions)
        self._domain = np.ones((len(self._ids), m), dtype=bool)
        self._placed: list[int] = []
        self._placed_nodes: set[int] = {n.id for n in model.nodes if n.grounded}
        self._scene = CapsuleSet(robot.static_capsules)
        self._tasks: list[SequenceTask] = []
        self._deadline = 0.0

    # -- caches ------------------------------------------------------------

    def _waypoints(self, element_id: int, start_node: int) -> np.ndarray:
        key = (element_id, start_node)
        if key not in self._path_cache:
            path = discretize_element(
                self.model, element_id, self.config.path_spacing, start_node=start_node
            )
            self._path_cache[key] = path.points
        return self._path_cache[key]

    def _pair_block(self, element_id: int, placed_id: int) -> np.ndarray:
        """Directions of `element_id` whose sweep hits placed `placed_id`."""
        key = (element_id, placed_id)
        cached = self._pair_cache.get(key)
        if cached is not None:
            return cached
        pts = self._waypoints(element_id, min(*self._element_nodes(element_id)))
        seg = self._segments[placed_id]
        block = np.zeros(len(self.directions), dtype=bool)
        for a in range(len(self.directions)):
            block[a] = ee_element_collision(
                pts,
                self.directions[a],
                0.0,
                seg,
                self.model.section.radius,
                self.robot.ee,
                clearance=self.config.clearance,
            )
        self._pair_cache[key] = block
        return block

    def _self_mask(self, element_id: int, start_node: int) -> np.ndarray:
        """Directions whose extruder body clears the element's own fresh bead.

        Unlike sweeps against other elements this depends on the travel
        direction, so the mask is cached per route.
        """
        key = (element_id, start_node)
        cached = self._self_cache.get(key)
        if cached is not None:
            return cached
        pts = self._waypoints(element_id, start_node)
        mask = np.zeros(len(self.directions), dtype=bool)
        for a in range(len(self.directions)):
            mask[a] = not ee_self_collision(
                pts,
                self.directions[a],
                0.0,
                self.model.section.radius,
                self.robot.ee,
                clearance=self.config.clearance,
            )
        self._self_cache[key] = mask
        return mask

    def _element_nodes(self, element_id: int) -> tuple[int, int]:
        e = self.model.element(element_id)
        return e.start, e.end

    # -- constraint stages ---------------------------------------------------

    def _connect_ok(self, element_id: int) -> bool:
        a, b = self._element_nodes(element_id)
        return a in self._placed_nodes or b in self._placed_nodes

    def _structural_ok(self, element_id: int) -> bool:
        t0 = time.monotonic()
        partial = PartialStructure(self.model, tuple(self._placed + [element_id]))
        result = analyze(partial)
        ok = check_stiffness(
            partial, self.config.displacement_tolerance, result=result
        ) and check_stability(partial, result=result)
        self.stats.stiffness_time += time.monotonic() - t0
        self.stats.stiffness_checks += 1
        return ok

    def _ee_pose_exists(self, element_id: int) -> tuple[int, float] | None:
        """First (direction index, roll) with reachable waypoints, or None.

        Directions come from the element's maintained bitset, which already
        encodes sweep collisions against everything placed.  Rolls follow the
        low-discrepancy sequence; the probe gives up at the kinematics
        timeout so one impossible element cannot stall the search.
        """
        t0 = time.monotonic()
        self.stats.kinematics_checks += 1
        start = route_start_node(self.model, element_id, self._placed)
        row = self._domain[self._index[element_id]] & self._self_mask(element_id, start)
        pts = self._waypoints(element_id, start)
        found = None
        for a in np.flatnonzero(row):
            for rot in self._rotations:
                if time.monotonic() - t0 > self.config.kinematics_timeout:
                    self.stats.kinematics_time += time.monotonic() - t0
                    return None
                frame = pose_from_direction(pts[0], self.directions[a], float(rot))
                families = ik_sweep(self.robot, frame[:3, :3], pts)
                if any(len(f) == 0 for f in families):
                    continue
                ok = True
                for fam in families:
                    hits = config_collides_batch(
                        self.robot,
                        np.array(fam),
                        self._scene,
                        clearance=self.config.clearance,
                    )
                    if hits.all():
                        ok = False
                        break
                if ok:
                    found = (int(a), float(rot))
                    break
            if found:
                break
        self.stats.kinematics_time += time.monotonic() - t0
        return found

    # -- domain maintenance ---------------------------------------------------

    def _prune_against(self, element_ids: list[int], placed_id: int) -> list[tuple[int, np.ndarray]]:
        """Clear directions of `element_ids` blocked by `placed_id`; return undo."""
        t0 = time.monotonic()
        self.stats.ee_update_checks += 1
        undo = []
        for eid in element_ids:
            row = self._domain[self._index[eid]]
            block = self._pair_block(eid, placed_id)
            self.stats.ee_update_pair_checks += 1
            cleared = np.flatnonzero(row & block)
            if cleared.size:
                row[cleared] = False
                undo.append((self._index[eid], cleared))
        self.stats.ee_update_time += time.monotonic() - t0
        return undo

    def _undo(self, undo: list[tuple[int, np.ndarray]]) -> None:
        for idx, cols in undo:
            self._domain[idx, cols] = True

    # -- value ordering ---------------------------------------------------------

    def _order_values(self, candidates: list[int], peers: list[int]) -> list[int]:
        if not self.config.collision_cost_ordering:
            return sorted(candidates)
        t0 = time.monotonic()
        scored = []
        for eid in candidates:
            self.stats.collision_cost_checks += 1
            others = [p for p in peers if p != eid]
            survive = 0
            for oid in others:
                row = self._domain[self._index[oid]]
                block = self._pair_block(oid, eid)
                survive += int(np.count_nonzero(row & ~block))
            scored.append((-survive, eid))
        scored.sort()
        self.stats.collision_cost_time += time.monotonic() - t0
        return [eid for _, eid in scored]

    # -- search -------------------------------------------------------------------

    def plan(self) -> SequenceResult:
        t_start = time.monotonic()
        self._t_start = t_start
        self._deadline = t_start + self.config.search_timeout

        # an element's printable directions can never leave the union of its
        # two routes' self-clear sets, so start the bitsets there
        for eid in self._ids:
            a, b = self._element_nodes(eid)
            union = self._self_mask(eid, a) | self._self_mask(eid, b)
            self._domain[self._index[eid]] &= union
            if not union.any():
                self.stats.total_time = time.monotonic() - t_start
                raise SequencePlanningError(
                    f"element {eid} has no extrusion direction clear of its "
                    "own bead",
                    stats=self.stats,
                )

        if self.config.use_decomposition:
            groups = [
                sorted(e.id for e in self.model.elements if e.layer == layer)
                for layer in self.model.layers()
            ]
        else:
            groups = [sorted(self._ids)]

        for gi, group in enumerate(groups):
            for pid in self._placed:  # committed layers are never undone
                self._prune_against(group, pid)
            if not self._solve_group(group):
                self.stats.total_time = time.monotonic() - t_start
                raise SequencePlanningError(
                    f"no printable ordering for element group {gi} "
                    f"({len(group)} elements, {self.stats.backtracks} backtracks)",
                    stats=self.stats,
                )
        self.stats.total_time = time.monotonic() - t_start
        return SequenceResult(list(self._tasks), self.stats, self.directions)

    def _solve_group(self, group: list[int]) -> bool:
        remaining = set(group)
        return self._extend(group, remaining)

    def _extend(self, group: list[int], remaining: set[int]) -> bool:
        if not remaining:
            return True
        if time.monotonic() > self._deadline:
            self.stats.total_time = time.monotonic() - self._t_start
            raise SequencePlanningError(
                f"sequence search exceeded {self.config.search_timeout:.0f}s",
                stats=self.stats,
            )
        peers = sorted(remaining)
        for eid in self._order_values(peers, peers):
            if not self._connect_ok(eid):
                continue
            if not self._structural_ok(eid):
                continue
            witness = self._ee_pose_exists(eid)
            if witness is None:
                continue
            undo = self._place(eid, witness, remaining)
            if undo is None:  # a peer lost its last direction
                continue
            if self._extend(group, remaining):
                return True
            self._unplace(eid, undo, remaining)
            self.stats.backtracks += 1
        return False

    def _place(self, eid, witness, remaining):
        direction_index, rotation = witness
        start = route_start_node(self.model, eid, self._placed)
        self._placed.append(eid)
        remaining.discard(eid)
        a, b = self._element_nodes(eid)
        added_nodes = [n for n in (a, b) if n not in self._placed_nodes]
        self._placed_nodes.update(added_nodes)
        self._scene = CapsuleSet(self._scene.capsules + (self._capsules[eid],))
        undo = self._prune_against(sorted(remaining), eid)
        task = SequenceTask(
            position=len(self._tasks),
            element=eid,
            direction_index=direction_index,
            direction=tuple(float(v) for v in self.directions[direction_index]),
            rotation=rotation,
            start_node=start,
        )
        self._tasks.append(task)
        self.stats.partial_states += 1
        for oid in remaining:
            if not self._domain[self._index[oid]].any():
                self._unplace(eid, undo, remaining, nodes_added=added_nodes)
                return None
        return (undo, added_nodes)

    def _unplace(self, eid, undo, remaining, nodes_added=None):
        if isinstance(undo, tuple):
            undo, nodes_added = undo
        self._undo(undo)
        self._placed.pop()
        remaining.add(eid)
        self._tasks.pop()
        self._scene = CapsuleSet(self._scene.capsules[:-1])
        for n in nodes_added or []:
            self._placed_nodes.discard(n)


def plan_sequence(
    model: TrussModel, robot: RobotModel, config: PlannerConfig | None = None
) -> SequenceResult:
    cfg = config or PlannerConfig()
    return SequencePlanner(model, robot, cfg).plan()
