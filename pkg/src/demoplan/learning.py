"""Operator extraction, lifting, and the counted operator library.

From each segment we read two snapshots, restricted to the objects the
activity touched: every literal holding at the anchor frame becomes a
precondition and every literal holding at the final frame becomes the
post-state.  Negative literals are admitted only for atoms that are true
somewhere in the trace, which keeps never-observed facts out of the operators.
Lifting replaces instances by typed variables; operators are identified up to
variable renaming through a canonical key, and re-observing one increments its
count instead of adding a duplicate.
"""

from __future__ import annotations

import itertools
import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import NoEffectSegment, ParseError, SchemaError, ValidationError
from .model import (
    GroundAtom,
    Literal,
    PredicateSignature,
    TypeTable,
    Vocabulary,
    enumerate_atoms,
    literal_from_list,
    literal_to_list,
)
from .segmentation import ClassifierRule, Segment, segment as segment_trace
from .traces import DebounceConfig, Trace, debounce

logger = logging.getLogger(__name__)

MAX_PARAMS = 5


def _check_literals(name: str, literals: frozenset[Literal], allowed_args: set[str]) -> None:
    by_atom: dict[GroundAtom, bool] = {}
    for lit in literals:
        if by_atom.setdefault(lit.atom, lit.positive) != lit.positive:
            raise ValidationError(f"{name} contains {lit.atom!r} with both polarities")
        for arg in lit.atom.args:
            if arg not in allowed_args:
                raise ValidationError(f"{name} literal {lit!r} mentions unknown argument {arg!r}")


@dataclass(frozen=True)
class GroundedOperator:
    """A single observed transition, still expressed over concrete objects."""

    name: str
    objects: tuple[str, ...]
    pre: frozenset[Literal]
    post: frozenset[Literal]

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        if len(set(self.objects)) != len(self.objects):
            raise ValidationError(f"operator {self.name!r} repeats an object: {self.objects}")
        allowed = set(self.objects)
        _check_literals(f"{self.name} pre", self.pre, allowed)
        _check_literals(f"{self.name} post", self.post, allowed)


@dataclass(frozen=True)
class LiftedOperator:
    """An operator over typed variables, with an observation count."""

    name: str
    params: tuple[tuple[str, str], ...]  # (variable, type_id), canonical order
    pre: frozenset[Literal]
    post: frozenset[Literal]
    count: int = 1

    def __post_init__(self):
        object.__setattr__(self, "params", tuple((v, t) for v, t in self.params))
        variables = [v for v, _ in self.params]
        if len(set(variables)) != len(variables):
            raise ValidationError(f"operator {self.name!r} repeats a parameter: {variables}")
        allowed = set(variables)
        _check_literals(f"{self.name} pre", self.pre, allowed)
        _check_literals(f"{self.name} post", self.post, allowed)
        used = {arg for lit in self.pre | self.post for arg in lit.atom.args}
        if allowed - used:
            raise ValidationError(
                f"operator {self.name!r} has unused parameter(s) {sorted(allowed - used)}"
            )
        if self.pre == self.post:
            raise ValidationError(f"operator {self.name!r} has no effect")
        if self.count < 1:
            raise ValidationError(f"operator {self.name!r} needs a positive count")

    def delta(self) -> tuple[frozenset[GroundAtom], frozenset[GroundAtom]]:
        """Added and deleted atoms: the post literals absent from the preconditions."""
        changed = self.post - self.pre
        adds = frozenset(lit.atom for lit in changed if lit.positive)
        dels = frozenset(lit.atom for lit in changed if not lit.positive)
        return adds, dels


def changed_atoms(trace: Trace, seg: Segment) -> list[GroundAtom]:
    """Atoms whose truth differs between the segment's anchor and final frame."""
    start = trace.frames[seg.start_frame].true_atoms
    end = trace.frames[seg.end_frame].true_atoms
    return sorted(start ^ end, key=GroundAtom.sort_key)


def relevant_objects(trace: Trace, seg: Segment) -> list[str]:
    """The actor, then every object of a changed atom in order of first appearance."""
    ordered = [seg.actor]
    for atom in changed_atoms(trace, seg):
        for arg in atom.args:
            if arg not in ordered:
                ordered.append(arg)
    return ordered


def extract(trace: Trace, seg: Segment) -> GroundedOperator:
    """Read one operator off a segment; raises NoEffectSegment if nothing changed."""
    if not changed_atoms(trace, seg):
        raise NoEffectSegment(
            f"segment {seg.label!r} [{seg.start_frame}..{seg.end_frame}] changed no atoms"
        )
    objects = relevant_objects(trace, seg)
    active = trace.active_atoms

    def snapshot(frame_index: int) -> frozenset[Literal]:
        true_atoms = trace.frames[frame_index].true_atoms
        literals = set()
        for atom in enumerate_atoms(trace.vocabulary, objects, trace.types):
            if atom in true_atoms:
                literals.add(Literal(atom, True))
            elif atom in active:
                literals.add(Literal(atom, False))
        return frozenset(literals)

    return GroundedOperator(
        name=seg.label,
        objects=tuple(objects),
        pre=snapshot(seg.start_frame),
        post=snapshot(seg.end_frame),
    )


def _substituted(literals: Iterable[Literal], mapping: Mapping[str, str]) -> frozenset[Literal]:
    return frozenset(
        Literal(GroundAtom(l.atom.predicate, tuple(mapping[a] for a in l.atom.args)), l.positive)
        for l in literals
    )


def _serialized(literals: frozenset[Literal]) -> str:
    return ";".join(sorted(repr(l) for l in literals))


def _canonical_form(
    name: str,
    entries: Sequence[tuple[str, str]],
    pre: frozenset[Literal],
    post: frozenset[Literal],
) -> tuple[tuple[tuple[str, str], ...], frozenset[Literal], frozenset[Literal], str]:
    """Choose a canonical parameter order and variable naming.

    Parameters are grouped by type (types in sorted order), then every
    permutation inside each same-type group is serialized and the
    lexicographically smallest serialization wins.  The result is therefore
    invariant under any type-preserving renaming of the original entries.
    """
    if len(entries) > MAX_PARAMS:
        raise ValidationError(
            f"operator {name!r} touches {len(entries)} objects; only {MAX_PARAMS} supported"
        )
    groups: list[list[tuple[str, str]]] = []
    for type_id in sorted({t for _, t in entries}):
        groups.append([e for e in entries if e[1] == type_id])

    best: tuple[str, tuple[tuple[str, str], ...]] | None = None
    for permuted in itertools.product(*(itertools.permutations(g) for g in groups)):
        ordering = tuple(itertools.chain.from_iterable(permuted))
        renaming = {token: f"?x{i}" for i, (token, _) in enumerate(ordering)}
        key = "|".join(
            (
                name,
                ",".join(t for _, t in ordering),
                _serialized(_substituted(pre, renaming)),
                _serialized(_substituted(post, renaming)),
            )
        )
        if best is None or key < best[0]:
            best = (key, ordering)

    key, ordering = best
    letter_counts: dict[str, int] = {}
    final_names = []
    for _, type_id in ordering:
        letter = next((ch for ch in type_id.lower() if ch.isalpha()), "v")
        letter_counts[letter] = letter_counts.get(letter, 0) + 1
        final_names.append(f"?{letter}{letter_counts[letter]}")
    renaming = {token: final_names[i] for i, (token, _) in enumerate(ordering)}
    params = tuple((renaming[token], type_id) for token, type_id in ordering)
    return params, _substituted(pre, renaming), _substituted(post, renaming), key


def lift(op: GroundedOperator, types: TypeTable) -> LiftedOperator:
    """Replace instances by typed variables and put the result in canonical form."""
    entries = [(obj, types.type_of(obj)) for obj in op.objects]
    params, pre, post, _ = _canonical_form(op.name, entries, op.pre, op.post)
    return LiftedOperator(name=op.name, params=params, pre=pre, post=post, count=1)


def canonical_key(op: LiftedOperator) -> str:
    """The renaming-invariant identity of an operator inside a library."""
    _, _, _, key = _canonical_form(op.name, op.params, op.pre, op.post)
    return key


@dataclass
class OperatorLibrary:
    """Lifted operators keyed by canonical key, plus the shared schema.

    Only merge() writes to the operator map; concurrent readers are fine, a
    single writer at a time is assumed.
    """

    vocabulary: Vocabulary
    types: TypeTable
    operators: dict[str, LiftedOperator] = field(default_factory=dict)

    @staticmethod
    def empty(vocabulary: Vocabulary, types: TypeTable) -> "OperatorLibrary":
        hierarchy = TypeTable({}, types.type_to_parent, types.types)
        return OperatorLibrary(vocabulary=vocabulary, types=hierarchy)

    def counts(self) -> dict[str, int]:
        return {key: op.count for key, op in self.operators.items()}

    def sorted_items(self) -> list[tuple[str, LiftedOperator]]:
        return sorted(self.operators.items())

    def variant_names(self) -> dict[str, str]:
        """A unique, deterministic name per operator: label, label_2, ..."""
        by_label: dict[str, list[str]] = {}
        for key, op in self.sorted_items():
            by_label.setdefault(op.name, []).append(key)
        names = {}
        for label, keys in by_label.items():
            for i, key in enumerate(keys):
                names[key] = label if i == 0 else f"{label}_{i + 1}"
        return names

    def absorb_schema(self, vocabulary: Vocabulary, types: TypeTable) -> None:
        """Extend the library schema; conflicting declarations raise SchemaError."""
        self.vocabulary = self.vocabulary.merged(vocabulary)
        hierarchy = TypeTable({}, types.type_to_parent, types.types)
        self.types = self.types.merged(hierarchy)

    def _check_schema(self, op: LiftedOperator) -> None:
        for _, type_id in op.params:
            if type_id not in self.types.types:
                raise SchemaError(f"operator {op.name!r} uses unknown type {type_id!r}")
        for lit in op.pre | op.post:
            sig = lit.atom.predicate
            if sig.name not in self.vocabulary:
                raise SchemaError(f"operator {op.name!r} uses unknown predicate {sig.name!r}")
            if self.vocabulary.get(sig.name) != sig:
                raise SchemaError(
                    f"operator {op.name!r} disagrees with the library signature of {sig.name!r}"
                )


def merge(library: OperatorLibrary, op: LiftedOperator) -> OperatorLibrary:
    """Add a canonicalized operator, or bump the count of its twin."""
    library._check_schema(op)
    key = canonical_key(op)
    existing = library.operators.get(key)
    if existing is None:
        library.operators[key] = op
    else:
        library.operators[key] = replace(existing, count=existing.count + op.count)
    return library


@dataclass
class TraceReport:
    """What cmd_learn did with one trace."""

    source: str
    segments: list[Segment] = field(default_factory=list)
    added: list[str] = field(default_factory=list)
    incremented: list[str] = field(default_factory=list)
    dropped_no_effect: int = 0


def learn_from_trace(
    library: OperatorLibrary,
    trace: Trace,
    rules: Sequence[ClassifierRule],
    debounce_config: DebounceConfig = DebounceConfig(),
    source: str = "",
) -> TraceReport:
    """Debounce, segment, extract, lift, and merge one trace into the library."""
    library.absorb_schema(trace.vocabulary, trace.types)
    cleaned = debounce(trace, debounce_config)
    report = TraceReport(source=source or trace.scenario)
    for seg in segment_trace(cleaned, rules):
        report.segments.append(seg)
        try:
            grounded = extract(cleaned, seg)
        except NoEffectSegment as exc:
            logger.warning("dropping segment: %s", exc)
            report.dropped_no_effect += 1
            continue
        lifted = lift(grounded, cleaned.types)
        key = canonical_key(lifted)
        known = key in library.operators
        merge(library, lifted)
        names = library.variant_names()
        label = f"{names[key]} (count {library.operators[key].count})"
        (report.incremented if known else report.added).append(label)
    return report


def build_library(
    traces: Iterable[Trace],
    rules: Sequence[ClassifierRule],
    debounce_config: DebounceConfig = DebounceConfig(),
) -> OperatorLibrary:
    """Learn a fresh library from a sequence of traces."""
    library: OperatorLibrary | None = None
    for trace in traces:
        if library is None:
            library = OperatorLibrary.empty(trace.vocabulary, trace.types)
        learn_from_trace(library, trace, rules, debounce_config)
    if library is None:
        raise ValidationError("no traces supplied")
    return library


def library_to_dict(library: OperatorLibrary) -> dict:
    from .pddl import library_name_map  # local import: pddl depends on this module

    operators = []
    for key, op in library.sorted_items():
        operators.append(
            {
                "name": op.name,
                "params": [[v, t] for v, t in op.params],
                "pre": [literal_to_list(l) for l in sorted(op.pre, key=Literal.sort_key)],
                "post": [literal_to_list(l) for l in sorted(op.post, key=Literal.sort_key)],
                "count": op.count,
            }
        )
    return {
        "vocabulary": [
            {"name": s.name, "arg_types": list(s.arg_types)}
            for s in library.vocabulary.signatures
        ],
        "types": {
            "all": sorted(library.types.types),
            "parents": dict(sorted(library.types.type_to_parent.items())),
        },
        "operators": operators,
        "pddl_names": library_name_map(library).as_dict(),
    }


def library_from_dict(payload: dict) -> OperatorLibrary:
    if not isinstance(payload, dict):
        raise ParseError("library payload must be a JSON object")
    for required in ("vocabulary", "types", "operators"):
        if required not in payload:
            raise ParseError(f"library is missing required key {required!r}")
    try:
        vocabulary = Vocabulary(
            tuple(
                PredicateSignature(e["name"], tuple(e["arg_types"]))
                for e in payload["vocabulary"]
            )
        )
        types = TypeTable(
            {},
            payload["types"].get("parents", {}),
            frozenset(payload["types"].get("all", ())),
        )
    except (KeyError, TypeError) as exc:
        raise ParseError(f"bad library schema: {exc}") from exc

    library = OperatorLibrary(vocabulary=vocabulary, types=types)
    for entry in payload["operators"]:
        try:
            op = LiftedOperator(
                name=entry["name"],
                params=tuple((v, t) for v, t in entry["params"]),
                pre=frozenset(literal_from_list(l, vocabulary) for l in entry["pre"]),
                post=frozenset(literal_from_list(l, vocabulary) for l in entry["post"]),
                count=int(entry["count"]),
            )
        except (KeyError, TypeError) as exc:
            raise ParseError(f"bad operator entry {entry!r}: {exc}") from exc
        key = canonical_key(op)
        if key in library.operators:
            raise SchemaError(f"library file repeats operator {entry['name']!r} (key {key!r})")
        library._check_schema(op)
        library.operators[key] = op
    return library


def save_library(library: OperatorLibrary, path: str | Path) -> None:
    Path(path).write_text(json.dumps(library_to_dict(library), indent=2, sort_keys=True) + "\n")


def load_library(path: str | Path) -> OperatorLibrary:
    try:
        payload = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not valid JSON: {exc}") from exc
    return library_from_dict(payload)
