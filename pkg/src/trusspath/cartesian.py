"""Joint trajectories for the extrusion passes.

Every task (one element, in build order) needs a joint path visiting its
waypoints under a constant tool orientation.  The search space is organised
as a ladder: waypoints are rungs, IK solutions are the rung vertices, and
jump-limited joint moves connect consecutive rungs.  Orientations cannot
change mid-pass, so each feasible (direction, roll) pair forms its own
independent block of the ladder.

Materialising the full ladder for every orientation of every task is the
baseline ("full graph") and it is enormous; `estimate_full_graph_size` puts
numbers on that.  The production path instead summarises each block as a
*capsule*: its first-rung configs, last-rung configs, and the matrix of
optimal interior costs between them (computed while the rungs are in memory,
then discarded).  A chain search over capsules with boundary joint-distance
edges then finds the same optimum the full ladder would, at a tiny fraction
of the memory, and an incremental sampler (`expand_and_search`) makes the
capsule set anytime: more samples never make the answer worse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import PlannerConfig
from .geometry import (
    CapsuleShape,
    ee_element_collision,
    ee_self_collision,
    pose_from_direction,
    sample_directions,
)
from .kinematics import CapsuleSet, RobotModel, config_collides_batch, ik_sweep
from .sequence import SequenceResult, rotation_sequence, route_start_node
from .truss import TrussModel, discretize_element

_INF = float("inf")


class CartesianPlanningError(Exception):
    pass


class MemoryBudgetError(CartesianPlanningError):
    """Full ladder graph would not fit the configured vertex budget."""


# ---------------------------------------------------------------------------
# task preparation


@dataclass
class TaskSpec:
    """Everything the Cartesian stage needs to know about one extrusion pass."""

    index: int
    element: int
    waypoints: np.ndarray  # (k, 3), routed start first
    direction_indices: list[int]  # sweep-feasible against the placed prefix
    preferred_direction: int
    preferred_rotation: float
    scene: CapsuleSet  # placed prefix plus workcell statics
    scene_after: CapsuleSet  # same plus this task's own element


def prepare_tasks(
    model: TrussModel,
    robot: RobotModel,
    sequence: SequenceResult,
    config: PlannerConfig,
) -> list[TaskSpec]:
    """Recreate per-task scenes and feasible direction sets from a sequence."""
    directions = sequence.directions
    placed: list[int] = []
    scene_caps: list[CapsuleShape] = list(robot.static_capsules)
    tasks: list[TaskSpec] = []
    for t in sequence.tasks:
        pts = discretize_element(
            model, t.element, config.path_spacing, start_node=t.start_node
        ).points
        feasible = []
        for a in range(len(directions)):
            if ee_self_collision(
                pts,
                directions[a],
                0.0,
                model.section.radius,
                robot.ee,
                clearance=config.clearance,
            ):
                continue
            ok = True
            for pid in placed:
                seg = model.element_segment(pid)
                if ee_element_collision(
                    pts,
                    directions[a],
                    0.0,
                    seg,
                    model.section.radius,
                    robot.ee,
                    clearance=config.clearance,
                ):
                    ok = False
                    break
            if ok:
                feasible.append(a)
        if t.direction_index not in feasible:
            # the sequence stage applies identical gates, so its witness
            # direction must survive; anything else is an internal bug
            raise CartesianPlanningError(
                f"task {t.position}: sequence witness direction "
                f"{t.direction_index} is not sweep-feasible here"
            )
        scene = CapsuleSet(tuple(scene_caps))
        own = CapsuleShape(
            tuple(model.element_segment(t.element)[0]),
            tuple(model.element_segment(t.element)[1]),
            model.section.radius,
        )
        tasks.append(
            TaskSpec(
                index=t.position,
                element=t.element,
                waypoints=pts,
                direction_indices=feasible,
                preferred_direction=t.direction_index,
                preferred_rotation=t.rotation,
                scene=scene,
                scene_after=CapsuleSet(tuple(scene_caps) + (own,)),
            )
        )
        placed.append(t.element)
        scene_caps.append(own)
    return tasks


# ---------------------------------------------------------------------------
# capsules


@dataclass
class Capsule:
    """Summary of one orientation block of one task's ladder.

    `inner_cost[i, j]` is the cheapest jump-limited interior path from
    first-rung config i to last-rung config j; infinity marks pairs the
    ladder cannot join.  The interior rungs themselves are rebuilt on demand
    (`extract_block_path`) instead of being stored.
    """

    task: int
    direction_index: int
    rotation: float
    entry: np.ndarray  # (k0, dof)
    exit: np.ndarray  # (k1, dof)
    inner_cost: np.ndarray  # (k0, k1)
    waypoints: int

    @property
    def feasible(self) -> bool:
        return bool(np.isfinite(self.inner_cost).any())


def _pair_costs(a: np.ndarray, b: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Weighted L1 distances between config rows of a (n,dof) and b (m,dof)."""
    diff = np.abs(a[:, None, :] - b[None, :, :]) * weights[None, None, :]
    return diff.sum(axis=2)


def _pair_allowed(a: np.ndarray, b: np.ndarray, limits: np.ndarray) -> np.ndarray:
    diff = np.abs(a[:, None, :] - b[None, :, :]) <= limits[None, None, :]
    return diff.all(axis=2)


def build_rungs(
    robot: RobotModel,
    waypoints: np.ndarray,
    direction: np.ndarray,
    rotation: float,
    scene: CapsuleSet,
    clearance: float | None = None,
) -> list[np.ndarray] | None:
    """Collision-free IK configs per waypoint, or None if any rung is empty."""
    frame = pose_from_direction(waypoints[0], direction, rotation)
    families = ik_sweep(robot, frame[:3, :3], waypoints)
    rungs = []
    for fam in families:
        if not fam:
            return None
        qs = np.array(fam)
        free = ~config_collides_batch(robot, qs, scene, clearance=clearance)
        if not free.any():
            return None
        rungs.append(qs[free])
    return rungs


def _inner_cost_matrix(
    rungs: list[np.ndarray], weights: np.ndarray, limits: np.ndarray
) -> np.ndarray:
    k0 = rungs[0].shape[0]
    cost = np.full((k0, k0), _INF)
    np.fill_diagonal(cost, 0.0)
    for r in range(1, len(rungs)):
        step = _pair_costs(rungs[r - 1], rungs[r], weights)
        step[~_pair_allowed(rungs[r - 1], rungs[r], limits)] = _INF
        # cost[i, m] + step[m, j], minimised over m
        cost = np.min(cost[:, :, None] + step[None, :, :], axis=1)
    return cost


def build_capsule(
    robot: RobotModel,
    task: TaskSpec,
    direction: np.ndarray,
    direction_index: int,
    rotation: float,
    config: PlannerConfig,
) -> Capsule | None:
    rungs = build_rungs(
        robot, task.waypoints, direction, rotation, task.scene,
        clearance=config.clearance,
    )
    if rungs is None:
        return None
    weights = robot.weights
    limits = robot.jump_limits(config.jump_limit, config.prismatic_jump_limit)
    inner = _inner_cost_matrix(rungs, weights, limits)
    capsule = Capsule(
        task=task.index,
        direction_index=direction_index,
        rotation=rotation,
        entry=rungs[0].copy(),
        exit=rungs[-1].copy(),
        inner_cost=inner,
        waypoints=len(rungs),
    )
    return capsule if capsule.feasible else None


def extract_block_path(
    robot: RobotModel,
    task: TaskSpec,
    capsule: Capsule,
    directions,
    entry_index: int,
    exit_index: int,
    config: PlannerConfig,
) -> np.ndarray:
    """Rebuild the chosen block's rungs and recover the optimal interior path.

    Ties are broken towards the lowest rung index so extraction is
    deterministic and always reproduces `inner_cost[entry, exit]`.
    """
    rungs = build_rungs(
        robot,
        task.waypoints,
        directions[capsule.direction_index],
        capsule.rotation,
        task.scene,
        clearance=config.clearance,
    )
    if rungs is None:
        raise CartesianPlanningError(
            f"task {task.index}: chosen orientation block vanished on rebuild"
        )
    weights = robot.weights
    limits = robot.jump_limits(config.jump_limit, config.prismatic_jump_limit)

    n = len(rungs)
    best = [np.full(r.shape[0], _INF) for r in rungs]
    back = [np.full(r.shape[0], -1, dtype=int) for r in rungs]
    best[0][entry_index] = 0.0
    for r in range(1, n):
        step = _pair_costs(rungs[r - 1], rungs[r], weights)
        step[~_pair_allowed(rungs[r - 1], rungs[r], limits)] = _INF
        total = best[r - 1][:, None] + step
        back[r] = np.argmin(total, axis=0)
        best[r] = total[back[r], np.arange(total.shape[1])]
    if not np.isfinite(best[-1][exit_index]):
        raise CartesianPlanningError(
            f"task {task.index}: interior path unreachable on rebuild"
        )
    idx = exit_index
    path = [rungs[-1][idx]]
    for r in range(n - 1, 0, -1):
        idx = int(back[r][idx])
        path.append(rungs[r - 1][idx])
    path.reverse()
    return np.array(path)


# ---------------------------------------------------------------------------
# chain search over capsule columns


def chain_search(
    columns: list[list[Capsule]],
    weights: np.ndarray,
    home: np.ndarray,
) -> tuple[float, list[tuple[Capsule, int, int]]]:
    """Exact optimum over the explored capsules of a task chain.

    State: (capsule, exit config).  Entering a capsule costs the boundary
    joint distance from the previous exit (home starts the chain), then the
    capsule's own interior matrix.  Returns the total cost and per-task
    (capsule, entry index, exit index) picks.
    """
    if any(len(col) == 0 for col in columns):
        raise CartesianPlanningError("a task has no feasible orientation block")

    arrive: list[dict] = []  # per capsule: costs (k1,), backpointers
    prev_exits: list[tuple[np.ndarray, tuple[int, int]]] = [(home[None, :], (-1, -1))]
    # prev_exits holds (configs, (capsule index in previous column, exit idx))
    per_column: list[list[dict]] = []

    prev_cost = [np.zeros(1)]
    for col in columns:
        col_states = []
        for ci, cap in enumerate(col):
            best_entry_cost = np.full(cap.entry.shape[0], _INF)
            best_entry_from = np.full((cap.entry.shape[0], 2), -1, dtype=int)
            for pi, (configs, _) in enumerate(prev_exits):
                bound = _pair_costs(configs, cap.entry, weights)
                total = prev_cost[pi][:, None] + bound
                src = np.argmin(total, axis=0)
                val = total[src, np.arange(total.shape[1])]
                better = val < best_entry_cost
                best_entry_cost[better] = val[better]
                best_entry_from[better] = np.stack(
                    [np.full(better.sum(), pi), src[better]], axis=1
                )
            through = best_entry_cost[:, None] + cap.inner_cost
            entry_pick = np.argmin(through, axis=0)
            exit_cost = through[entry_pick, np.arange(through.shape[1])]
            col_states.append(
                {
                    "capsule": cap,
                    "exit_cost": exit_cost,
                    "entry_pick": entry_pick,
                    "entry_from": best_entry_from,
                }
            )
        per_column.append(col_states)
        prev_exits = [(st["capsule"].exit, (i, -1)) for i, st in enumerate(col_states)]
        prev_cost = [st["exit_cost"] for st in col_states]

    # best terminal state
    best = (_INF, -1, -1)
    for ci, st in enumerate(per_column[-1]):
        j = int(np.argmin(st["exit_cost"]))
        v = float(st["exit_cost"][j])
        if v < best[0]:
            best = (v, ci, j)
    if not math.isfinite(best[0]):
        raise CartesianPlanningError("no jump-feasible path through the task chain")

    picks: list[tuple[Capsule, int, int]] = []
    ci, exit_idx = best[1], best[2]
    for col_states in reversed(per_column):
        st = col_states[ci]
        entry_idx = int(st["entry_pick"][exit_idx])
        picks.append((st["capsule"], entry_idx, exit_idx))
        pi, src = st["entry_from"][entry_idx]
        ci, exit_idx = int(pi), int(src)
    picks.reverse()
    return best[0], picks


@dataclass
class SparseSearchResult:
    cost: float
    picks: list[tuple[Capsule, int, int]]
    columns: list[list[Capsule]]
    built_capsules: int
    attempted: int


def _candidate_grid(task: TaskSpec, rotations: np.ndarray) -> list[tuple[int, float]]:
    cands = [(task.preferred_direction, float(task.preferred_rotation))]
    for a in task.direction_indices:
        for r in rotations:
            pair = (a, float(r))
            if pair != cands[0]:
                cands.append(pair)
    return cands


def expand_and_search(
    robot: RobotModel,
    tasks: list[TaskSpec],
    config: PlannerConfig,
    rng: np.random.Generator | None = None,
    max_capsules: int | None = None,
) -> SparseSearchResult:
    """Anytime capsule exploration followed by the exact chain search.

    Candidates are visited in a seeded random interleaving across tasks until
    the per-task budget is spent (default: everything, which makes the result
    exact over all feasible orientation blocks).  Growing the budget can only
    add capsules, so reported cost is monotone non-increasing in the budget.
    """
    rng = rng or np.random.default_rng(config.seed)
    directions = sample_directions(config.direction_count)
    rotations = rotation_sequence(config.rotation_samples)

    queues = [list(_candidate_grid(t, rotations)) for t in tasks]
    for q in queues:
        rng.shuffle(q)
    # the sequence witness must be attempted first so a plan always exists
    for q, t in zip(queues, tasks):
        w = (t.preferred_direction, float(t.preferred_rotation))
        q.remove(w)
        q.insert(0, w)

    columns: list[list[Capsule]] = [[] for _ in tasks]
    built = 0
    attempted = 0
    budget = [max_capsules if max_capsules is not None else len(q) for q in queues]
    active = [i for i in range(len(tasks)) if budget[i] > 0]
    while active:
        k = int(rng.integers(len(active)))
        ti = active[k]
        a, rot = queues[ti].pop(0)
        attempted += 1
        cap = build_capsule(robot, tasks[ti], directions[a], a, rot, config)
        if cap is not None:
            columns[ti].append(cap)
            built += 1
        if not queues[ti] or len(columns[ti]) >= budget[ti]:
            active.pop(k)

    cost, picks = chain_search(columns, robot.weights, robot.home)
    return SparseSearchResult(cost, picks, columns, built, attempted)


def exhaustive_sparse_graph(
    robot: RobotModel, tasks: list[TaskSpec], config: PlannerConfig
) -> list[list[Capsule]]:
    """Every feasible capsule of every task, deterministic order."""
    directions = sample_directions(config.direction_count)
    rotations = rotation_sequence(config.rotation_samples)
    columns = []
    for t in tasks:
        col = []
        for a, rot in _candidate_grid(t, rotations):
            cap = build_capsule(robot, t, directions[a], a, rot, config)
            if cap is not None:
                col.append(cap)
        columns.append(col)
    return columns


# ---------------------------------------------------------------------------
# full ladder graph baseline


def estimate_full_graph_size(
    n_tasks: int,
    waypoints_per_task: int,
    orientation_blocks: int,
    configs_per_rung: int,
    vertex_bytes: int = 64,
    edge_bytes: int = 16,
) -> dict:
    """Memory footprint of the materialised full ladder graph.

    Vertices: every IK config of every rung of every orientation block.
    Intra edges: consecutive-rung pairs inside a block.  Boundary edges:
    full bipartite between consecutive tasks' boundary rungs across all
    blocks.  Returns counts and bytes.
    """
    f = configs_per_rung
    verts = n_tasks * waypoints_per_task * orientation_blocks * f
    intra = n_tasks * (waypoints_per_task - 1) * orientation_blocks * f * f
    boundary = (n_tasks - 1) * (orientation_blocks * f) ** 2
    total = verts * vertex_bytes + (intra + boundary) * edge_bytes
    return {
        "vertices": verts,
        "intra_edges": intra,
        "boundary_edges": boundary,
        "bytes": total,
        "gigabytes": total / 1e9,
    }


def full_ladder_graph(
    robot: RobotModel,
    tasks: list[TaskSpec],
    config: PlannerConfig,
) -> tuple[float, list[np.ndarray]]:
    """Materialised-ladder optimum; only viable for small test problems.

    Builds every orientation block's rungs for every task and runs one DP
    over the whole structure.  Raises MemoryBudgetError when the vertex
    count would exceed `config.full_graph_vertex_cap`.
    """
    directions = sample_directions(config.direction_count)
    rotations = rotation_sequence(config.rotation_samples)
    weights = robot.weights
    limits = robot.jump_limits(config.jump_limit, config.prismatic_jump_limit)

    ladders: list[list[list[np.ndarray]]] = []  # task -> block -> rungs
    n_vertices = 0
    for t in tasks:
        blocks = []
        for a, rot in _candidate_grid(t, rotations):
            rungs = build_rungs(
                robot, t.waypoints, directions[a], rot, t.scene,
                clearance=config.clearance,
            )
            if rungs is None:
                continue
            n_vertices += sum(r.shape[0] for r in rungs)
            if n_vertices > config.full_graph_vertex_cap:
                est = estimate_full_graph_size(
                    len(tasks),
                    tasks[0].waypoints.shape[0],
                    len(_candidate_grid(t, rotations)),
                    max(r.shape[0] for r in rungs),
                )
                raise MemoryBudgetError(
                    f"full ladder graph needs more than "
                    f"{config.full_graph_vertex_cap} vertices "
                    f"(estimated {est['gigabytes']:.1f} GB)"
                )
            blocks.append(rungs)
        if not blocks:
            raise CartesianPlanningError(
                f"task {t.index}: no feasible orientation block for the full graph"
            )
        ladders.append(blocks)

    # DP: per task, per block, per rung
    prev_exit_configs = robot.home[None, :]
    prev_exit_cost = np.zeros(1)
    chosen: list[list[tuple]] = []  # backpointers per task
    for blocks in ladders:
        task_states = []
        for rungs in blocks:
            entry_cost = (
                prev_exit_cost[:, None] + _pair_costs(prev_exit_configs, rungs[0], weights)
            )
            src = np.argmin(entry_cost, axis=0)
            cost = entry_cost[src, np.arange(entry_cost.shape[1])]
            backs = [src]
            costs = [cost]
            for r in range(1, len(rungs)):
                step = _pair_costs(rungs[r - 1], rungs[r], weights)
                step[~_pair_allowed(rungs[r - 1], rungs[r], limits)] = _INF
                total = costs[-1][:, None] + step
                back = np.argmin(total, axis=0)
                costs.append(total[back, np.arange(total.shape[1])])
                backs.append(back)
            task_states.append((rungs, costs, backs))
        chosen.append(task_states)
        prev_exit_configs = np.concatenate([st[0][-1] for st in task_states], axis=0)
        prev_exit_cost = np.concatenate([st[1][-1] for st in task_states])

    total_cost = float(prev_exit_cost.min())
    if not math.isfinite(total_cost):
        raise CartesianPlanningError("full ladder graph has no jump-feasible path")

    # walk backpointers to recover per-task joint paths
    flat_idx = int(np.argmin(prev_exit_cost))
    paths: list[np.ndarray] = []
    for task_states in reversed(chosen):
        sizes = [st[0][-1].shape[0] for st in task_states]
        bi = 0
        while flat_idx >= sizes[bi]:
            flat_idx -= sizes[bi]
            bi += 1
        rungs, _, backs = task_states[bi]
        idx = flat_idx
        path = [rungs[-1][idx]]
        for r in range(len(rungs) - 1, 0, -1):
            idx = int(backs[r][idx])
            path.append(rungs[r - 1][idx])
        path.reverse()
        paths.append(np.array(path))
        # entry backpointer: index into the previous task's stacked exits
        flat_idx = int(backs[0][idx])
    paths.reverse()
    return total_cost, paths


# ---------------------------------------------------------------------------
# retraction segments


def plan_retraction(
    robot: RobotModel,
    node: np.ndarray,
    orientation_direction: np.ndarray,
    rotation: float,
    anchor: np.ndarray,
    scene: CapsuleSet,
    config: PlannerConfig,
    directions: np.ndarray,
    preferred: int,
) -> np.ndarray | None:
    """Straight tip slide away from a node with the tool orientation frozen.

    The returned path starts exactly at `anchor` (the extrusion boundary
    config, so the seam is continuous by construction) and steps outward
    along a candidate direction, greedily chaining the nearest jump-feasible
    collision-free IK solution at each waypoint.  The pass direction is
    tried first, then the remaining directions by index; None means no
    candidate admits a full chain and the caller should fall back to a
    degenerate single-config segment.
    """
    length = config.retraction_length
    k = max(1, math.ceil(length / config.path_spacing))
    frame = pose_from_direction(node, orientation_direction, rotation)
    rot = frame[:3, :3]
    weights = robot.weights
    limits = robot.jump_limits(config.jump_limit, config.prismatic_jump_limit)

    order = [preferred] + [i for i in range(len(directions)) if i != preferred]
    offsets = np.linspace(length / k, length, k)
    for a in order:
        pts = node[None, :] + directions[a][None, :] * offsets[:, None]
        families = ik_sweep(robot, rot, pts)
        path = [anchor]
        ok = True
        for fam in families:
            if not fam:
                ok = False
                break
            qs = np.array(fam)
            qs = qs[~config_collides_batch(robot, qs, scene, clearance=config.clearance)]
            if qs.shape[0] == 0:
                ok = False
                break
            step = np.abs(qs - path[-1][None, :])
            qs = qs[(step <= limits[None, :]).all(axis=1)]
            if qs.shape[0] == 0:
                ok = False
                break
            costs = (np.abs(qs - path[-1][None, :]) * weights).sum(axis=1)
            path.append(qs[int(np.argmin(costs))])
        if ok:
            return np.array(path)
    return None
