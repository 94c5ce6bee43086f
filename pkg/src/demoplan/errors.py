"""Exception types shared across the package."""

from __future__ import annotations


class ParseError(ValueError):
    """A file or text blob is structurally malformed (bad JSON shape, bad CLI literal)."""


class ValidationError(ValueError):
    """Semantically invalid data: ill-typed atoms, broken invariants, bad config values.

    Carries optional context so trace loaders can point at the offending frame.
    """

    def __init__(self, message: str, *, frame: int | None = None, atom: str | None = None):
        parts = [message]
        if frame is not None:
            parts.append(f"frame {frame}")
        if atom is not None:
            parts.append(f"atom {atom}")
        super().__init__(": ".join(parts))
        self.frame = frame
        self.atom = atom


class InvalidEffect(ValueError):
    """An effect adds and deletes the same atom."""


class SchemaError(ValueError):
    """Vocabulary, type table, or operator-library content is inconsistent."""


class NoActorError(ValueError):
    """A trace declares no object whose type any classifier rule accepts as actor."""


class NoEffectSegment(Exception):
    """A segment changed nothing, so no operator can be extracted from it."""


class EmptyDomain(ValueError):
    """Asked to emit a planning domain from a library with no operators."""


class UnsupportedFeature(ValueError):
    """The PDDL input uses a construct outside the supported subset."""


class PddlSyntaxError(ValueError):
    """Malformed PDDL text; reports the line and column of the offending token."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class SearchLimitExceeded(RuntimeError):
    """The planner hit its node limit before proving the goal solvable or not."""
