"""Rule-based activity segmentation of demonstration traces.

Each frame transition (from frame i-1 into frame i) is classified per actor by
matching declarative rules against the state at frame i and the delta into it.
Maximal runs of one label become segments.  A segment records ``start_frame``,
the anchor frame *before* its first classified transition, and ``end_frame``,
the frame reached by its last; operator extraction reads the precondition
snapshot at the anchor and the post snapshot at the end.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .errors import NoActorError, ParseError, ValidationError
from .model import GroundAtom, ObjectInstance
from .traces import Trace

IDLE = "idle"
ACTOR_VAR = "?actor"

STATE_SCOPE = "state"
DELTA_SCOPE = "delta"


@dataclass(frozen=True)
class LiteralPattern:
    """A condition template; args are object ids or ``?``-variables.

    Scope ``state`` tests frame i: a positive pattern must match a true atom,
    a negative one must match nothing (variables left unbound by other
    conditions are read universally).  Scope ``delta`` tests the transition:
    positive means the atom was added into frame i, negative means deleted.
    """

    scope: str
    positive: bool
    predicate: str
    args: tuple[str, ...]

    def __post_init__(self):
        if self.scope not in (STATE_SCOPE, DELTA_SCOPE):
            raise ParseError(f"unknown condition scope {self.scope!r}")
        object.__setattr__(self, "args", tuple(self.args))

    def variables(self) -> set[str]:
        return {a for a in self.args if a.startswith("?")}

    def binds(self) -> bool:
        # Deleted-atom conditions match concrete atoms of frame i-1, so they
        # bind variables just like positive matches do.
        return self.scope == DELTA_SCOPE or self.positive


@dataclass(frozen=True)
class ClassifierRule:
    """One labeling rule for a given actor type; higher priority wins."""

    name: str
    actor_type: str
    priority: int
    conditions: tuple[LiteralPattern, ...]

    def __post_init__(self):
        object.__setattr__(self, "conditions", tuple(self.conditions))
        if not self.conditions:
            raise ValidationError(f"rule {self.name!r} has no conditions")
        mentioned = set().union(*(c.variables() for c in self.conditions))
        if ACTOR_VAR not in mentioned:
            raise ValidationError(f"rule {self.name!r} never references {ACTOR_VAR}")
        if not any(c.scope == DELTA_SCOPE for c in self.conditions):
            # A rule with no delta condition would label every frame of a
            # steady state as activity.
            raise ValidationError(f"rule {self.name!r} tests no delta condition")


@dataclass(frozen=True)
class Segment:
    """A maximal run of identically labeled transitions for one actor.

    Transitions start_frame+1 .. end_frame carry the label; start_frame is the
    state snapshot just before the activity begins, hence end > start always.
    """

    label: str
    actor: str
    start_frame: int
    end_frame: int

    def __post_init__(self):
        if not (0 <= self.start_frame < self.end_frame):
            raise ValidationError(f"segment frames out of order: {self}")

    @property
    def first_transition(self) -> int:
        return self.start_frame + 1


def validate_rules(rules: Sequence[ClassifierRule]) -> None:
    priorities = [r.priority for r in rules]
    if len(set(priorities)) != len(priorities):
        raise ValidationError(f"rule priorities must be unique, got {sorted(priorities)}")


def _unify(pattern_args: tuple[str, ...], atom: GroundAtom, binding: dict) -> dict | None:
    new = dict(binding)
    for pat, actual in zip(pattern_args, atom.args):
        if pat.startswith("?"):
            bound = new.get(pat)
            if bound is None:
                new[pat] = actual
            elif bound != actual:
                return None
        elif pat != actual:
            return None
    return new


def _matches_somewhere(pattern: LiteralPattern, pool: Iterable[GroundAtom], binding: dict) -> bool:
    for atom in pool:
        if atom.name != pattern.predicate or len(atom.args) != len(pattern.args):
            continue
        if _unify(pattern.args, atom, binding) is not None:
            return True
    return False


def _rule_fires(
    rule: ClassifierRule,
    actor_id: str,
    state: frozenset[GroundAtom],
    added: frozenset[GroundAtom],
    deleted: frozenset[GroundAtom],
) -> bool:
    binders = [c for c in rule.conditions if c.binds()]
    filters = [c for c in rule.conditions if not c.binds()]

    def pool(cond: LiteralPattern) -> frozenset[GroundAtom]:
        if cond.scope == STATE_SCOPE:
            return state
        return added if cond.positive else deleted

    def search(index: int, binding: dict) -> bool:
        if index == len(binders):
            return all(not _matches_somewhere(f, state, binding) for f in filters)
        cond = binders[index]
        for atom in pool(cond):
            if atom.name != cond.predicate or len(atom.args) != len(cond.args):
                continue
            extended = _unify(cond.args, atom, binding)
            if extended is not None and search(index + 1, extended):
                return True
        return False

    return search(0, {ACTOR_VAR: actor_id})


def classify_frame(
    trace: Trace,
    frame_index: int,
    actor: ObjectInstance,
    rules: Sequence[ClassifierRule],
) -> str:
    """Label the transition into ``frame_index`` for one actor, or ``idle``."""
    if frame_index < 1 or frame_index >= len(trace.frames):
        raise IndexError(f"frame_index must be in 1..{len(trace.frames) - 1}, got {frame_index}")
    state = trace.frames[frame_index].true_atoms
    previous = trace.frames[frame_index - 1].true_atoms
    added = state - previous
    deleted = previous - state
    applicable = [r for r in rules if trace.types.is_subtype(actor.type_id, r.actor_type)]
    for rule in sorted(applicable, key=lambda r: -r.priority):
        if _rule_fires(rule, actor.id, state, added, deleted):
            return rule.name
    return IDLE


def frame_labels(trace: Trace, actor: ObjectInstance, rules: Sequence[ClassifierRule]) -> list[str]:
    """Per-frame labels for one actor; frame 0 has no incoming transition."""
    labels = [IDLE]
    labels.extend(classify_frame(trace, i, actor, rules) for i in range(1, len(trace.frames)))
    return labels


def segment(trace: Trace, rules: Sequence[ClassifierRule]) -> list[Segment]:
    """Segment a whole trace, one pass per actor, actors in id order."""
    validate_rules(rules)
    actors = [
        obj
        for obj in trace.objects
        if any(trace.types.is_subtype(obj.type_id, r.actor_type) for r in rules)
    ]
    if not actors:
        raise NoActorError(
            f"trace declares no object matching any rule actor type "
            f"({sorted({r.actor_type for r in rules})})"
        )
    segments: list[Segment] = []
    for actor in actors:
        labels = frame_labels(trace, actor, rules)
        i = 1
        while i < len(labels):
            if labels[i] == IDLE:
                i += 1
                continue
            j = i
            while j + 1 < len(labels) and labels[j + 1] == labels[i]:
                j += 1
            segments.append(Segment(labels[i], actor.id, start_frame=i - 1, end_frame=j))
            i = j + 1
    return segments


# The built-in rule table for tabletop pick-and-place over the predicates
# handMove/handOpen/inHand/inTouch/onTop (and graspable when present).
# Priorities only need to be unique; these rules never fire together on the
# scripted scenarios, so their relative order is not load-bearing.

def _pattern(scope: str, entry: Sequence[str]) -> LiteralPattern:
    if entry and entry[0] == "!":
        return LiteralPattern(scope, False, entry[1], tuple(entry[2:]))
    return LiteralPattern(scope, True, entry[0], tuple(entry[1:]))


def _rule(name: str, priority: int, conditions: Sequence[tuple[str, Sequence[str]]],
          actor_type: str = "Hand") -> ClassifierRule:
    return ClassifierRule(
        name, actor_type, priority,
        tuple(_pattern(scope, entry) for scope, entry in conditions),
    )


DEFAULT_RULES: tuple[ClassifierRule, ...] = (
    _rule("put", 100, [
        (DELTA_SCOPE, ["!", "onTop", "?c", "?s"]),
        (STATE_SCOPE, ["inHand", ACTOR_VAR, "?c"]),
    ]),
    _rule("put", 90, [
        (DELTA_SCOPE, ["handMove", ACTOR_VAR]),
        (STATE_SCOPE, ["inHand", ACTOR_VAR, "?c"]),
    ]),
    _rule("place", 80, [
        (DELTA_SCOPE, ["onTop", "?c", "?s"]),
        (STATE_SCOPE, ["inHand", ACTOR_VAR, "?c"]),
    ]),
    _rule("place", 70, [
        (DELTA_SCOPE, ["!", "handMove", ACTOR_VAR]),
        (STATE_SCOPE, ["inHand", ACTOR_VAR, "?c"]),
    ]),
    _rule("grasp", 60, [
        (DELTA_SCOPE, ["inHand", ACTOR_VAR, "?c"]),
    ]),
    _rule("grasp", 50, [
        (DELTA_SCOPE, ["!", "handMove", ACTOR_VAR]),
        (STATE_SCOPE, ["handOpen", ACTOR_VAR]),
    ]),
    _rule("release", 40, [
        (DELTA_SCOPE, ["!", "inHand", ACTOR_VAR, "?c"]),
    ]),
    _rule("release", 30, [
        (DELTA_SCOPE, ["!", "graspable", "?c"]),
        (STATE_SCOPE, ["handOpen", ACTOR_VAR]),
    ]),
    _rule("reach", 20, [
        (DELTA_SCOPE, ["handMove", ACTOR_VAR]),
        (STATE_SCOPE, ["!", "inHand", ACTOR_VAR, "?c"]),
    ]),
    _rule("reach", 10, [
        (DELTA_SCOPE, ["graspable", "?c"]),
        (STATE_SCOPE, ["handMove", ACTOR_VAR]),
    ]),
)


def rules_from_json(payload) -> tuple[ClassifierRule, ...]:
    if not isinstance(payload, list):
        raise ParseError("rule file must contain a JSON list of rules")
    rules = []
    for entry in payload:
        try:
            conditions = tuple(
                _pattern(cond["scope"], cond["literal"]) for cond in entry["conditions"]
            )
            rules.append(
                ClassifierRule(entry["name"], entry["actor_type"], int(entry["priority"]), conditions)
            )
        except (KeyError, TypeError, IndexError) as exc:
            raise ParseError(f"bad rule entry {entry!r}: {exc}") from exc
    validate_rules(rules)
    return tuple(rules)


def rules_to_json(rules: Sequence[ClassifierRule]) -> list:
    payload = []
    for rule in rules:
        conditions = []
        for cond in rule.conditions:
            literal = [cond.predicate, *cond.args]
            if not cond.positive:
                literal = ["!", *literal]
            conditions.append({"scope": cond.scope, "literal": literal})
        payload.append(
            {
                "name": rule.name,
                "actor_type": rule.actor_type,
                "priority": rule.priority,
                "conditions": conditions,
            }
        )
    return payload


def load_rules(path: str | Path) -> tuple[ClassifierRule, ...]:
    try:
        payload = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not valid JSON: {exc}") from exc
    return rules_from_json(payload)


def save_rules(rules: Sequence[ClassifierRule], path: str | Path) -> None:
    Path(path).write_text(json.dumps(rules_to_json(rules), indent=2) + "\n")
