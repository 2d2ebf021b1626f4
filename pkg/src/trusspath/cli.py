"""Command line front end.

Subcommands mirror the pipeline stages so each piece can be run and
inspected on its own:

  plan             full pipeline: sequence + trajectories + plan file
  sequence         element ordering only, written as JSON
  motion           trajectories for an existing sequence file
  validate         independent re-check of a plan file against its inputs
  stats            sequence search accounting, one table row per run
  export-geometry  model waypoints and robot collision shapes as JSON

Exit codes: 0 success, 2 planning failed, 3 validation failed, 4 bad
inputs or configuration.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .cartesian import CartesianPlanningError, MemoryBudgetError
from .config import PlannerConfig, PlannerConfigError, load_config
from .fixtures import MODEL_FILES, ROBOT_FILES, resolve_model, resolve_robot
from .kinematics import RobotConfigError
from .pipeline import PipelineError, run_pipeline, validate_plan
from .postprocess import PlanFormatError, load_plan, save_plan
from .sequence import (
    SequencePlanningError,
    plan_sequence,
    render_stats_table,
    sequence_from_dict,
    sequence_to_dict,
)
from .transition import TransitionPlanningError
from .truss import ModelError, discretize_element, serialize_model

EXIT_OK = 0
EXIT_PLANNING = 2
EXIT_VALIDATION = 3
EXIT_CONFIG = 4

_PLANNING_ERRORS = (
    SequencePlanningError,
    CartesianPlanningError,
    MemoryBudgetError,
    TransitionPlanningError,
    PipelineError,
)
_INPUT_ERRORS = (
    PlannerConfigError,
    ModelError,
    RobotConfigError,
    KeyError,
    FileNotFoundError,
)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--model",
        required=True,
        help=f"truss JSON path or bundled name ({', '.join(sorted(MODEL_FILES))})",
    )
    parser.add_argument(
        "--robot",
        required=True,
        help=f"robot JSON path or bundled name ({', '.join(sorted(ROBOT_FILES))})",
    )
    parser.add_argument("--config", help="planner configuration JSON")
    parser.add_argument("--seed", type=int, help="override the configured seed")
    parser.add_argument(
        "--timeout", type=float, help="override the sequence search timeout [s]"
    )
    parser.add_argument(
        "--no-decomposition",
        action="store_true",
        help="search the whole element set as one group",
    )
    parser.add_argument(
        "--collision-cost",
        action="store_true",
        help="order candidate elements by surviving peer directions",
    )


def _build_config(args: argparse.Namespace) -> PlannerConfig:
    cfg = load_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.timeout is not None:
        overrides["search_timeout"] = args.timeout
    if args.no_decomposition:
        overrides["use_decomposition"] = False
    if args.collision_cost:
        overrides["collision_cost_ordering"] = True
    return cfg.replace(**overrides) if overrides else cfg


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trusspath",
        description="Plan robot extrusion of spatial trusses.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="run the full pipeline and write a plan file")
    _add_common(p)
    p.add_argument("--out", default="plan.json", help="plan output path")

    p = sub.add_parser("sequence", help="plan the element ordering only")
    _add_common(p)
    p.add_argument("--out", default="sequence.json", help="sequence output path")

    p = sub.add_parser("motion", help="plan trajectories for a stored sequence")
    _add_common(p)
    p.add_argument(
        "--from-sequence", required=True, dest="from_sequence",
        help="sequence JSON produced by the sequence subcommand",
    )
    p.add_argument("--out", default="plan.json", help="plan output path")

    p = sub.add_parser("validate", help="re-check a plan against its inputs")
    _add_common(p)
    p.add_argument("--plan", required=True, help="plan JSON to validate")

    p = sub.add_parser("stats", help="print sequence search accounting")
    _add_common(p)

    p = sub.add_parser(
        "export-geometry", help="dump waypoints and collision shapes as JSON"
    )
    _add_common(p)
    p.add_argument("--out", default="geometry.json", help="geometry output path")
    return parser


def _cmd_plan(args: argparse.Namespace) -> int:
    model = resolve_model(args.model)
    robot = resolve_robot(args.robot)
    config = _build_config(args)
    plan, report = run_pipeline(model, robot, config)
    save_plan(plan, args.out)
    print(report.table())
    print(f"plan written to {args.out}")
    return EXIT_OK


def _cmd_sequence(args: argparse.Namespace) -> int:
    model = resolve_model(args.model)
    robot = resolve_robot(args.robot)
    config = _build_config(args)
    result = plan_sequence(model, robot, config)
    Path(args.out).write_text(
        json.dumps(sequence_to_dict(result), sort_keys=True, indent=2) + "\n"
    )
    label = "layered" if config.use_decomposition else "flat"
    print(render_stats_table([(label, result.stats)]))
    print(f"sequence written to {args.out}")
    return EXIT_OK


def _cmd_motion(args: argparse.Namespace) -> int:
    model = resolve_model(args.model)
    robot = resolve_robot(args.robot)
    config = _build_config(args)
    try:
        doc = json.loads(Path(args.from_sequence).read_text())
    except json.JSONDecodeError as exc:
        print(f"error: sequence file is not valid JSON: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    sequence = sequence_from_dict(doc)
    plan, report = run_pipeline(model, robot, config, sequence=sequence)
    save_plan(plan, args.out)
    print(report.table())
    print(f"plan written to {args.out}")
    return EXIT_OK


def _cmd_validate(args: argparse.Namespace) -> int:
    model = resolve_model(args.model)
    robot = resolve_robot(args.robot)
    config = _build_config(args)
    try:
        plan = load_plan(args.plan)
    except PlanFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    report = validate_plan(plan, model, robot, config)
    print(report.table())
    if not report.passed:
        return EXIT_VALIDATION
    return EXIT_OK


def _cmd_stats(args: argparse.Namespace) -> int:
    model = resolve_model(args.model)
    robot = resolve_robot(args.robot)
    config = _build_config(args)
    label = "layered" if config.use_decomposition else "flat"
    if config.collision_cost_ordering:
        label += "+coll-cost"
    try:
        result = plan_sequence(model, robot, config)
    except SequencePlanningError as exc:
        if exc.stats is not None:
            print(render_stats_table([(label + " (aborted)", exc.stats)]))
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PLANNING
    print(render_stats_table([(label, result.stats)]))
    return EXIT_OK


def _cmd_export_geometry(args: argparse.Namespace) -> int:
    model = resolve_model(args.model)
    robot = resolve_robot(args.robot)
    config = _build_config(args)
    waypoints = {}
    for e in model.elements:
        pts = discretize_element(model, e.id, config.path_spacing).points
        waypoints[str(e.id)] = [[float(v) for v in row] for row in pts]
    doc = {
        "model": serialize_model(model),
        "waypoints": waypoints,
        "robot": {
            "name": robot.name,
            "dof": robot.dof,
            "link_capsules": [
                {
                    "frame": lc.frame,
                    "a": [float(v) for v in lc.shape.a],
                    "b": [float(v) for v in lc.shape.b],
                    "radius": float(lc.shape.radius),
                }
                for lc in robot.link_capsules
            ],
            "ee_capsules": [
                {
                    "a": [float(v) for v in c.a],
                    "b": [float(v) for v in c.b],
                    "radius": float(c.radius),
                }
                for c in robot.ee.capsules
            ],
        },
    }
    Path(args.out).write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    print(f"geometry written to {args.out}")
    return EXIT_OK


_COMMANDS = {
    "plan": _cmd_plan,
    "sequence": _cmd_sequence,
    "motion": _cmd_motion,
    "validate": _cmd_validate,
    "stats": _cmd_stats,
    "export-geometry": _cmd_export_geometry,
}


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except _PLANNING_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PLANNING
    except PlanFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
