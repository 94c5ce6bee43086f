"""Demonstration traces: timed symbolic frames, file IO, and flicker debouncing.

A trace file is JSON with top-level keys ``vocabulary``, ``objects``, ``frames``,
plus optional ``meta`` (demonstrator id, scenario label) and optional
``types.parents`` when the scenario needs a type hierarchy::

    {
      "meta": {"demonstrator": "p1", "scenario": "stack_single_right"},
      "vocabulary": [{"name": "onTop", "arg_types": ["Wooden_cube", "Table"]}, ...],
      "objects": [{"id": "Cube_green1", "type": "Wooden_cube"}, ...],
      "frames": [{"t": 0.0, "atoms": [["onTop", "Cube_green1", "Table_1"]]}, ...]
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from functools import cached_property
from pathlib import Path

from .errors import ParseError, ValidationError
from .model import (
    GroundAtom,
    ObjectInstance,
    PredicateSignature,
    State,
    TypeTable,
    Vocabulary,
    atom_from_list,
    atom_to_list,
    check_atom_types,
)


@dataclass(frozen=True)
class Frame:
    """One sampled symbolic snapshot."""

    timestamp: float
    true_atoms: frozenset[GroundAtom]

    def state(self) -> State:
        return State(self.true_atoms)


@dataclass(frozen=True)
class DebounceConfig:
    """Membership changes must persist for ``window`` consecutive frames to stick."""

    window: int = 2

    def __post_init__(self):
        if not isinstance(self.window, int) or self.window < 1:
            raise ValidationError(f"debounce window must be an integer >= 1, got {self.window!r}")


@dataclass(frozen=True)
class Trace:
    """A validated demonstration: vocabulary, typed objects, and >= 2 frames."""

    vocabulary: Vocabulary
    types: TypeTable
    frames: tuple[Frame, ...]
    demonstrator: str = ""
    scenario: str = ""

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))
        if len(self.frames) < 2:
            raise ValidationError(f"a trace needs at least 2 frames, got {len(self.frames)}")
        last = self.frames[0].timestamp
        for i, frame in enumerate(self.frames[1:], start=1):
            if frame.timestamp < last:
                raise ValidationError("timestamps must be monotone non-decreasing", frame=i)
            last = frame.timestamp

    @property
    def objects(self) -> list[ObjectInstance]:
        return self.types.objects()

    @cached_property
    def active_atoms(self) -> frozenset[GroundAtom]:
        """Atoms true in at least one frame; negative literals are only ever
        reported for these."""
        atoms: set[GroundAtom] = set()
        for frame in self.frames:
            atoms |= frame.true_atoms
        return frozenset(atoms)


def _vocabulary_from_json(entries) -> Vocabulary:
    if not isinstance(entries, list):
        raise ParseError("'vocabulary' must be a list")
    signatures = []
    for entry in entries:
        try:
            signatures.append(PredicateSignature(entry["name"], tuple(entry["arg_types"])))
        except (KeyError, TypeError) as exc:
            raise ParseError(f"bad vocabulary entry {entry!r}: {exc}") from exc
    return Vocabulary(tuple(signatures))


def _types_from_json(objects, parents) -> TypeTable:
    if not isinstance(objects, list):
        raise ParseError("'objects' must be a list")
    instance_to_type = {}
    for entry in objects:
        try:
            obj_id, type_id = entry["id"], entry["type"]
        except (KeyError, TypeError) as exc:
            raise ParseError(f"bad object entry {entry!r}: {exc}") from exc
        if obj_id in instance_to_type:
            raise ValidationError(f"duplicate object id {obj_id!r}")
        instance_to_type[obj_id] = type_id
    return TypeTable(instance_to_type, parents or {})


def trace_from_dict(payload: dict) -> Trace:
    if not isinstance(payload, dict):
        raise ParseError("trace payload must be a JSON object")
    for key in ("vocabulary", "objects", "frames"):
        if key not in payload:
            raise ParseError(f"trace is missing required key {key!r}")
    vocabulary = _vocabulary_from_json(payload["vocabulary"])
    types = _types_from_json(payload["objects"], (payload.get("types") or {}).get("parents"))
    raw_frames = payload["frames"]
    if not isinstance(raw_frames, list):
        raise ParseError("'frames' must be a list")

    frames = []
    for i, raw in enumerate(raw_frames):
        if not isinstance(raw, dict) or "t" not in raw or "atoms" not in raw:
            raise ParseError(f"frame {i} must be an object with keys 't' and 'atoms'")
        atoms = set()
        for entry in raw["atoms"]:
            try:
                atom = atom_from_list(entry, vocabulary)
                check_atom_types(atom, types)
            except (ValueError, TypeError) as exc:
                raise ValidationError(str(exc), frame=i, atom=repr(entry)) from exc
            atoms.add(atom)
        frames.append(Frame(float(raw["t"]), frozenset(atoms)))

    meta = payload.get("meta") or {}
    return Trace(
        vocabulary=vocabulary,
        types=types,
        frames=tuple(frames),
        demonstrator=str(meta.get("demonstrator", "")),
        scenario=str(meta.get("scenario", "")),
    )


def trace_to_dict(trace: Trace) -> dict:
    payload: dict = {
        "meta": {"demonstrator": trace.demonstrator, "scenario": trace.scenario},
        "vocabulary": [
            {"name": s.name, "arg_types": list(s.arg_types)} for s in trace.vocabulary.signatures
        ],
        "objects": [{"id": o.id, "type": o.type_id} for o in trace.objects],
        "frames": [
            {
                "t": frame.timestamp,
                "atoms": [atom_to_list(a) for a in sorted(frame.true_atoms, key=GroundAtom.sort_key)],
            }
            for frame in trace.frames
        ],
    }
    if trace.types.type_to_parent:
        payload["types"] = {"parents": dict(sorted(trace.types.type_to_parent.items()))}
    return payload


def load_trace(path: str | Path) -> Trace:
    """Read and fully validate one trace file."""
    try:
        payload = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not valid JSON: {exc}") from exc
    return trace_from_dict(payload)


def save_trace(trace: Trace, path: str | Path) -> None:
    Path(path).write_text(json.dumps(trace_to_dict(trace), indent=2, sort_keys=True) + "\n")


def _debounced_series(values: list[bool], window: int) -> list[bool]:
    # run_length[i] = how many frames starting at i hold the same raw value
    n = len(values)
    run_length = [1] * n
    for i in range(n - 2, -1, -1):
        if values[i + 1] == values[i]:
            run_length[i] = run_length[i + 1] + 1
    out = [values[0]]
    current = values[0]
    for i in range(1, n):
        if values[i] != current and run_length[i] >= window:
            current = values[i]
        out.append(current)
    return out


def debounce(trace: Trace, config: DebounceConfig = DebounceConfig()) -> Trace:
    """Suppress membership changes that do not persist for ``window`` frames.

    A change at frame i is kept only when frames i..i+window-1 all agree on the
    new membership; otherwise the previous membership is retained.  Window 1 is
    the identity, and the operation is idempotent: every change it keeps
    already persists long enough to be kept again.
    """
    if config.window == 1:
        return trace
    frame_sets: list[set[GroundAtom]] = [set() for _ in trace.frames]
    for atom in sorted(trace.active_atoms, key=GroundAtom.sort_key):
        raw = [atom in frame.true_atoms for frame in trace.frames]
        for i, member in enumerate(_debounced_series(raw, config.window)):
            if member:
                frame_sets[i].add(atom)
    frames = tuple(
        Frame(frame.timestamp, frozenset(atoms))
        for frame, atoms in zip(trace.frames, frame_sets)
    )
    return replace(trace, frames=frames)
