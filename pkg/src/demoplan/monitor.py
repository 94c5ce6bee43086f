"""Closed-loop plan execution against a simulated world.

Before each action the monitor checks preconditions against the sensed state;
after each action it compares the sensed state with the predicted one. Any
mismatch triggers replanning from the sensed state, up to a configurable
budget. Faults are scripted per global step index so failures are repeatable:
``drop_effects`` leaves the world untouched, ``perturb`` applies scripted
effects in place of the action's own.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .errors import ParseError, ValidationError
from .model import (
    GroundAtom,
    Literal,
    State,
    TypeTable,
    Vocabulary,
    apply,
    atom_from_list,
    atom_to_list,
    check_atom_types,
    holds,
)
from .planner import DEFAULT_NODE_LIMIT, GroundedAction, Plan, plan

DROP_EFFECTS = "drop_effects"
PERTURB = "perturb"


@dataclass(frozen=True)
class Fault:
    """A scripted malfunction at one execution step (0-based, global)."""

    step: int
    mode: str
    adds: frozenset[GroundAtom] = frozenset()
    dels: frozenset[GroundAtom] = frozenset()

    def __post_init__(self):
        if self.step < 0:
            raise ValidationError(f"fault step must be >= 0, got {self.step}")
        if self.mode not in (DROP_EFFECTS, PERTURB):
            raise ValidationError(f"unknown fault mode {self.mode!r}")
        object.__setattr__(self, "adds", frozenset(self.adds))
        object.__setattr__(self, "dels", frozenset(self.dels))
        if self.mode == DROP_EFFECTS and (self.adds or self.dels):
            raise ValidationError("drop_effects faults take no adds or dels")
        if self.adds & self.dels:
            raise ValidationError("fault adds and deletes the same atom")


def faults_from_list(
    raw: object,
    vocabulary: Vocabulary,
    types: Optional[TypeTable] = None,
) -> list[Fault]:
    if isinstance(raw, dict):
        raw = raw.get("faults", [])
    if not isinstance(raw, list):
        raise ParseError("fault file must hold a list of fault records")
    faults = []
    for entry in raw:
        if not isinstance(entry, dict) or "step" not in entry or "mode" not in entry:
            raise ParseError(f"malformed fault record: {entry!r}")
        adds = [atom_from_list(a, vocabulary) for a in entry.get("adds", [])]
        dels = [atom_from_list(a, vocabulary) for a in entry.get("dels", [])]
        if types is not None:
            for atom in adds + dels:
                check_atom_types(atom, types)
        faults.append(Fault(entry["step"], entry["mode"], frozenset(adds), frozenset(dels)))
    steps = [f.step for f in faults]
    if len(set(steps)) != len(steps):
        raise ValidationError("multiple faults scripted for the same step")
    return faults


def load_faults(
    path, vocabulary: Vocabulary, types: Optional[TypeTable] = None
) -> list[Fault]:
    with open(Path(path), "r", encoding="utf-8") as fh:
        return faults_from_list(json.load(fh), vocabulary, types)


class WorldSim:
    """Holds the true world state and applies effects, faults included."""

    def __init__(self, initial: State, faults: Iterable[Fault] = ()):
        self.current = initial
        self.faults = {f.step: f for f in faults}

    def step(self, action: GroundedAction, step_index: int) -> State:
        fault = self.faults.get(step_index)
        if fault is None:
            self.current = apply(self.current, action.adds, action.dels)
        elif fault.mode == DROP_EFFECTS:
            pass
        else:
            self.current = apply(self.current, fault.adds, fault.dels)
        return self.current


@dataclass(frozen=True)
class MonitorConfig:
    max_replans: int = 5
    node_limit: int = DEFAULT_NODE_LIMIT
    heuristic: str = "none"

    def __post_init__(self):
        if self.max_replans < 0:
            raise ValidationError("max_replans must be >= 0")


@dataclass(frozen=True)
class StepRecord:
    step: int
    action: GroundedAction
    expected: State
    sensed: State
    discrepancy: tuple[GroundAtom, ...]


@dataclass(frozen=True)
class ReplanEvent:
    step: int
    reason: str
    plan: Plan


@dataclass(frozen=True)
class ExecutionLog:
    outcome: str
    reason: str = ""
    steps: tuple[StepRecord, ...] = ()
    replans: tuple[ReplanEvent, ...] = ()
    final_state: State = State()

    @property
    def succeeded(self) -> bool:
        return self.outcome == "success"


def _diff(expected: State, sensed: State) -> tuple[GroundAtom, ...]:
    return tuple(sorted(expected.true_atoms ^ sensed.true_atoms, key=GroundAtom.sort_key))


def execute(
    initial_plan: Plan,
    sim: WorldSim,
    goal: Sequence[Literal],
    actions: Sequence[GroundedAction],
    config: MonitorConfig = MonitorConfig(),
) -> ExecutionLog:
    """Run a plan to completion, replanning over ``actions`` on any surprise."""
    goal = sorted(goal, key=Literal.sort_key)
    queue = list(initial_plan.actions)
    steps: list[StepRecord] = []
    replans: list[ReplanEvent] = []
    step_index = 0
    replans_used = 0

    def replan(reason: str) -> Optional[str]:
        """Returns a failure reason, or None when a new plan was installed."""
        nonlocal replans_used, queue
        replans_used += 1
        if replans_used > config.max_replans:
            return "replan budget exhausted"
        new_plan = plan(
            actions,
            sim.current,
            goal,
            node_limit=config.node_limit,
            heuristic=config.heuristic,
        )
        if new_plan is None:
            return "no plan reaches the goal from the sensed state"
        replans.append(ReplanEvent(step_index, reason, new_plan))
        queue = list(new_plan.actions)
        return None

    while True:
        if not queue:
            if all(holds(sim.current, l) for l in goal):
                return ExecutionLog(
                    "success", "", tuple(steps), tuple(replans), sim.current
                )
            failure = replan("plan exhausted without reaching the goal")
            if failure is not None:
                return ExecutionLog(
                    "failure", failure, tuple(steps), tuple(replans), sim.current
                )
            continue
        action = queue[0]
        unmet = [l for l in sorted(action.pre, key=Literal.sort_key) if not holds(sim.current, l)]
        if unmet:
            failure = replan(f"preconditions of {action!r} unmet: {unmet}")
            if failure is not None:
                return ExecutionLog(
                    "failure", failure, tuple(steps), tuple(replans), sim.current
                )
            continue
        expected = apply(sim.current, action.adds, action.dels)
        sensed = sim.step(action, step_index)
        discrepancy = _diff(expected, sensed)
        steps.append(StepRecord(step_index, action, expected, sensed, discrepancy))
        step_index += 1
        if discrepancy:
            failure = replan(f"state after {action!r} diverged on {list(discrepancy)}")
            if failure is not None:
                return ExecutionLog(
                    "failure", failure, tuple(steps), tuple(replans), sim.current
                )
            continue
        queue.pop(0)


def log_to_dict(log: ExecutionLog) -> dict:
    return {
        "outcome": log.outcome,
        "reason": log.reason,
        "replans": [
            {
                "step": ev.step,
                "reason": ev.reason,
                "plan": [repr(a) for a in ev.plan.actions],
                "cost": ev.plan.total_cost,
            }
            for ev in log.replans
        ],
        "steps": [
            {
                "step": rec.step,
                "action": repr(rec.action),
                "discrepancy": [atom_to_list(a) for a in rec.discrepancy],
            }
            for rec in log.steps
        ],
        "final_state": [atom_to_list(a) for a in log.final_state.sorted_atoms()],
    }


def format_transcript(log: ExecutionLog) -> str:
    """Human-readable, one line per event, replans interleaved in step order."""
    lines = []
    by_step: dict[int, list[str]] = {}
    for ev in log.replans:
        by_step.setdefault(ev.step, []).append(
            f"replan at step {ev.step}: {ev.reason} -> {len(ev.plan.actions)} actions, cost {ev.plan.total_cost}"
        )
    for rec in log.steps:
        for note in by_step.pop(rec.step, []):
            lines.append(note)
        status = "ok" if not rec.discrepancy else f"diverged on {[repr(a) for a in rec.discrepancy]}"
        lines.append(f"step {rec.step}: {rec.action!r} ... {status}")
    for step in sorted(by_step):
        lines.extend(by_step[step])
    lines.append(f"outcome: {log.outcome}" + (f" ({log.reason})" if log.reason else ""))
    return "\n".join(lines) + "\n"
