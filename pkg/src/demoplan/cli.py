"""Command line interface.

Subcommands cover the full loop: gen-traces writes a demonstration corpus,
learn turns traces into an operator library, plan searches over a library or
over PDDL files, execute runs a plan against a simulated world with optional
scripted faults, and pipeline chains all of it and writes every artifact.

Exit codes: 0 done/solved, 2 goal unsolvable, 3 invalid input, 4 resource
limit hit, 5 execution failed. All file outputs are deterministic: JSON is
sorted and the PDDL renderer is byte-stable.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from pathlib import Path
from typing import Optional, Sequence

from .errors import (
    EmptyDomain,
    InvalidEffect,
    NoActorError,
    ParseError,
    PddlSyntaxError,
    SchemaError,
    SearchLimitExceeded,
    UnsupportedFeature,
    ValidationError,
)
from .learning import (
    OperatorLibrary,
    learn_from_trace,
    load_library,
    save_library,
)
from .model import (
    Literal,
    ObjectInstance,
    State,
    Vocabulary,
    atom_from_list,
    check_atom_types,
    literal_to_list,
)
from .monitor import MonitorConfig, WorldSim, execute, format_transcript, load_faults, log_to_dict
from .pddl import emit_domain, emit_problem, parse_domain, parse_problem
from .planner import (
    DEFAULT_NODE_LIMIT,
    Plan,
    derive_costs,
    ground,
    plan,
    task_from_docs,
)
from .segmentation import DEFAULT_RULES, load_rules
from .synth import corpus, corpus_goals, initial_state, inject_flicker, planning_objects
from .traces import DebounceConfig, load_trace, save_trace

EXIT_OK = 0
EXIT_UNSOLVABLE = 2
EXIT_INVALID = 3
EXIT_LIMIT = 4
EXIT_EXECUTION = 5

_USER_ERRORS = (
    ParseError,
    ValidationError,
    SchemaError,
    NoActorError,
    EmptyDomain,
    PddlSyntaxError,
    UnsupportedFeature,
    InvalidEffect,
    TypeError,
    FileNotFoundError,
)

_LITERAL_RE = re.compile(r"^\s*(!?)\s*([A-Za-z][\w-]*)\s*(?:\(\s*(.*?)\s*\))?\s*$")


def parse_literal_text(text: str, vocabulary: Vocabulary) -> Literal:
    """Parse goal syntax like ``onTop(Cube_red1,Table_1)`` or ``!handOpen(h)``."""
    match = _LITERAL_RE.match(text)
    if match is None:
        raise ParseError(f"cannot parse literal {text!r}")
    negated, name, arg_text = match.groups()
    args = []
    if arg_text:
        args = [a.strip() for a in arg_text.split(",")]
        if any(not a for a in args):
            raise ParseError(f"empty argument in literal {text!r}")
    return Literal(vocabulary.atom(name, *args), positive=not negated)


def load_init(path, vocabulary: Vocabulary, types) -> tuple[list[ObjectInstance], State]:
    """Read an initial-state file: {"objects": [{id,type}...], "atoms": [[...]...]}."""
    try:
        payload = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(payload, dict) or "objects" not in payload or "atoms" not in payload:
        raise ParseError(f"{path}: expected top-level keys 'objects' and 'atoms'")
    objects = []
    for entry in payload["objects"]:
        try:
            objects.append(ObjectInstance(entry["id"], entry["type"]))
        except (KeyError, TypeError) as exc:
            raise ParseError(f"{path}: bad object entry {entry!r}: {exc}") from exc
    table = types.with_instances(objects)
    atoms = [atom_from_list(entry, vocabulary) for entry in payload["atoms"]]
    for atom in atoms:
        check_atom_types(atom, table)
    return objects, State.of(atoms)


def _out_dir(value: Optional[str]) -> Path:
    return Path(value or os.environ.get("DEMOPLAN_OUT", "."))


def _plan_payload(plan_: Optional[Plan]) -> dict:
    if plan_ is None:
        return {"solvable": False}
    return {
        "solvable": True,
        "cost": plan_.total_cost,
        "actions": [
            {"name": a.name, "objects": list(a.objects), "cost": a.cost}
            for a in plan_.actions
        ],
    }


def _dump(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# learn


def cmd_learn(args) -> int:
    rules = load_rules(args.rules) if args.rules else DEFAULT_RULES
    config = DebounceConfig(window=args.debounce)
    lib_path = Path(args.library)
    library = load_library(lib_path) if lib_path.exists() else None
    for trace_path in args.traces:
        trace = load_trace(trace_path)
        if library is None:
            library = OperatorLibrary.empty(trace.vocabulary, trace.types)
        report = learn_from_trace(library, trace, rules, config, source=str(trace_path))
        line = (
            f"{report.source}: {len(report.segments)} segments, "
            f"{len(report.added)} new, {len(report.incremented)} reobserved"
        )
        if report.dropped_no_effect:
            line += f", {report.dropped_no_effect} dropped (no effect)"
        print(line)
    if library is None:
        raise ValidationError("no traces supplied")
    save_library(library, lib_path)
    names = library.variant_names()
    costs = derive_costs(library).costs
    for key, op in library.sorted_items():
        print(f"  {names[key]}: observed {op.count}x, cost {costs[key]}")
    print(f"library: {len(library.operators)} operators -> {lib_path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# plan


def _library_task(args):
    """Objects, initial state, goal, and grounded actions from --library/--init/--goal."""
    library = load_library(args.library)
    objects, init = load_init(args.init, library.vocabulary, library.types)
    if not args.goal:
        raise ValidationError("at least one --goal literal is required")
    goal = [parse_literal_text(text, library.vocabulary) for text in args.goal]
    table = library.types.with_instances(objects)
    for literal in goal:
        check_atom_types(literal.atom, table)
    cost_model = None if args.unit_costs else derive_costs(library)
    actions = ground(library, objects, cost_model, args.allow_repeated_bindings)
    return library, objects, init, goal, actions


def cmd_plan(args) -> int:
    if args.domain or args.problem:
        if not (args.domain and args.problem):
            raise ValidationError("--domain and --problem must be given together")
        if args.library or args.init or args.goal:
            raise ValidationError("PDDL planning takes its task from the problem file")
        if args.unit_costs:
            raise ValidationError("--unit-costs only applies to --library planning")
        domain = parse_domain(Path(args.domain).read_text())
        problem = parse_problem(Path(args.problem).read_text(), domain)
        actions, init, goal = task_from_docs(domain, problem, args.allow_repeated_bindings)
    else:
        if not args.library:
            raise ValidationError("either --library or --domain/--problem is required")
        _, _, init, goal, actions = _library_task(args)
    plan_ = plan(actions, init, goal, node_limit=args.node_limit, heuristic=args.heuristic)
    text = _dump(_plan_payload(plan_))
    sys.stdout.write(text)
    if args.out:
        Path(args.out).write_text(text)
    return EXIT_OK if plan_ is not None else EXIT_UNSOLVABLE


# ---------------------------------------------------------------------------
# execute


def cmd_execute(args) -> int:
    library, objects, init, goal, actions = _library_task(args)
    plan_ = plan(actions, init, goal, node_limit=args.node_limit, heuristic=args.heuristic)
    if plan_ is None:
        print("no plan reaches the goal from the initial state")
        return EXIT_UNSOLVABLE
    faults = []
    if args.faults:
        table = library.types.with_instances(objects)
        faults = load_faults(args.faults, library.vocabulary, table)
    sim = WorldSim(init, faults)
    config = MonitorConfig(
        max_replans=args.max_replans,
        node_limit=args.node_limit,
        heuristic=args.heuristic,
    )
    log = execute(plan_, sim, goal, actions, config)
    sys.stdout.write(format_transcript(log))
    if args.out:
        Path(args.out).write_text(_dump(log_to_dict(log)))
    return EXIT_OK if log.succeeded else EXIT_EXECUTION


# ---------------------------------------------------------------------------
# pipeline


def cmd_pipeline(args) -> int:
    out = _out_dir(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rules = load_rules(args.rules) if args.rules else DEFAULT_RULES
    config = DebounceConfig(window=args.debounce)

    library: Optional[OperatorLibrary] = None
    for trace_path in args.traces:
        trace = load_trace(trace_path)
        if library is None:
            library = OperatorLibrary.empty(trace.vocabulary, trace.types)
        learn_from_trace(library, trace, rules, config, source=str(trace_path))
    if library is None:
        raise ValidationError("no traces supplied")
    save_library(library, out / "library.json")
    print(f"library: {len(library.operators)} operators -> {out / 'library.json'}")

    costs = derive_costs(library)
    (out / "domain.pddl").write_text(emit_domain(library, costs.costs))
    objects, init = load_init(args.init, library.vocabulary, library.types)
    if not args.goal:
        raise ValidationError("at least one --goal literal is required")
    goal = [parse_literal_text(text, library.vocabulary) for text in args.goal]
    table = library.types.with_instances(objects)
    for literal in goal:
        check_atom_types(literal.atom, table)
    (out / "problem.pddl").write_text(emit_problem(library, objects, init, goal))
    print(f"pddl: {out / 'domain.pddl'}, {out / 'problem.pddl'}")

    cost_model = None if args.unit_costs else costs
    actions = ground(library, objects, cost_model, args.allow_repeated_bindings)
    plan_ = plan(actions, init, goal, node_limit=args.node_limit, heuristic=args.heuristic)
    (out / "plan.json").write_text(_dump(_plan_payload(plan_)))
    if plan_ is None:
        print("plan: goal is unsolvable")
        return EXIT_UNSOLVABLE
    print(f"plan: {len(plan_.actions)} steps, cost {plan_.total_cost} -> {out / 'plan.json'}")

    faults = load_faults(args.faults, library.vocabulary, table) if args.faults else []
    sim = WorldSim(init, faults)
    monitor_config = MonitorConfig(
        max_replans=args.max_replans,
        node_limit=args.node_limit,
        heuristic=args.heuristic,
    )
    log = execute(plan_, sim, goal, actions, monitor_config)
    (out / "execution.json").write_text(_dump(log_to_dict(log)))
    (out / "transcript.txt").write_text(format_transcript(log))
    print(f"execution: {log.outcome}" + (f" ({log.reason})" if log.reason else ""))
    return EXIT_OK if log.succeeded else EXIT_EXECUTION


# ---------------------------------------------------------------------------
# gen-traces


def cmd_gen_traces(args) -> int:
    out = _out_dir(args.out)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, demo in enumerate(corpus()):
        trace = demo.trace
        name = f"{trace.demonstrator}_{trace.scenario}.json"
        if args.flicker is not None:
            trace = inject_flicker(trace, seed=args.flicker + i)
            name = f"{trace.demonstrator}_{trace.scenario}_noisy.json"
        path = out / name
        save_trace(trace, path)
        paths.append(path)
    init_payload = {
        "objects": [{"id": o.id, "type": o.type_id} for o in planning_objects()],
        "atoms": [[a.name, *a.args] for a in initial_state().sorted_atoms()],
    }
    (out / "init.json").write_text(_dump(init_payload))
    goals_payload = {
        name: [literal_to_list(l) for l in literals]
        for name, literals in corpus_goals().items()
    }
    (out / "goals.json").write_text(_dump(goals_payload))
    for path in paths:
        print(path)
    print(out / "init.json")
    print(out / "goals.json")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _add_planning_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--node-limit", type=int, default=DEFAULT_NODE_LIMIT,
                   help="abort search after this many expanded states")
    p.add_argument("--heuristic", choices=("none", "hmax"), default="none",
                   help="optional admissible heuristic (same optimum, fewer expansions)")
    p.add_argument("--allow-repeated-bindings", action="store_true",
                   help="let one object fill several parameters of an action")
    p.add_argument("--unit-costs", action="store_true",
                   help="ignore observation counts and give every action cost 1")


def _add_task_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--library", help="operator library JSON")
    p.add_argument("--init", help="initial state JSON (objects + atoms)")
    p.add_argument("--goal", action="append", default=[],
                   help="goal literal like 'onTop(Cube_red1,Cube_green1)'; repeatable")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="demoplan",
        description="Learn planning operators from demonstration traces, then plan and execute.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("learn", help="learn or update an operator library from traces")
    p.add_argument("traces", nargs="+", help="demonstration trace JSON files")
    p.add_argument("--library", required=True, help="library file to create or update")
    p.add_argument("--rules", help="segmentation rule JSON (default: built-in rules)")
    p.add_argument("--debounce", type=int, default=2, help="debounce window in frames")
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("plan", help="find a minimum-cost plan")
    _add_task_options(p)
    p.add_argument("--domain", help="PDDL domain file (with --problem)")
    p.add_argument("--problem", help="PDDL problem file (with --domain)")
    p.add_argument("--out", help="also write the plan JSON here")
    _add_planning_options(p)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("execute", help="execute a plan in a simulated world")
    _add_task_options(p)
    p.add_argument("--faults", help="scripted fault JSON file")
    p.add_argument("--max-replans", type=int, default=5, help="replanning budget")
    p.add_argument("--out", help="also write the execution log JSON here")
    _add_planning_options(p)
    p.set_defaults(func=cmd_execute)

    p = sub.add_parser("pipeline", help="learn, emit PDDL, plan, and execute in one go")
    p.add_argument("traces", nargs="+", help="demonstration trace JSON files")
    p.add_argument("--rules", help="segmentation rule JSON (default: built-in rules)")
    p.add_argument("--debounce", type=int, default=2, help="debounce window in frames")
    p.add_argument("--init", required=True, help="initial state JSON (objects + atoms)")
    p.add_argument("--goal", action="append", default=[], required=True,
                   help="goal literal; repeatable")
    p.add_argument("--faults", help="scripted fault JSON file")
    p.add_argument("--max-replans", type=int, default=5, help="replanning budget")
    p.add_argument("--out", help="artifact directory (default: $DEMOPLAN_OUT or .)")
    _add_planning_options(p)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("gen-traces", help="write the scripted demonstration corpus")
    p.add_argument("--out", help="output directory (default: $DEMOPLAN_OUT or .)")
    p.add_argument("--flicker", type=int, default=None, metavar="SEED",
                   help="inject recoverable sensor flicker with this seed")
    p.set_defaults(func=cmd_gen_traces)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SearchLimitExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_LIMIT
    except _USER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
