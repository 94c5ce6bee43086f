"""Seeded random generators and hypothesis strategies shared by the tests."""

from __future__ import annotations

import random

from hypothesis import strategies as st

from demoplan.errors import ValidationError
from demoplan.learning import GroundedOperator, OperatorLibrary, lift, merge
from demoplan.model import (
    GroundAtom,
    Literal,
    PredicateSignature,
    State,
    TypeTable,
    Vocabulary,
    enumerate_atoms,
)
from demoplan.planner import GroundedAction
from demoplan.traces import Frame, Trace

# A compact typed world used whenever a test just needs "some" schema.  The
# hierarchy (Block and Zone under Thing, Robot outside it) and the zero-arity
# predicate are both there to exercise corners that the tabletop scenario
# never touches.
_PARENTS = {"Block": "Thing", "Zone": "Thing"}
_OBJECT_TYPES = {
    "blockA": "Block",
    "blockB": "Block",
    "bot1": "Robot",
    "zone_1": "Zone",
    "zone_2": "Zone",
}

OPERATOR_NAME_POOL = ("Pick-Up", "put_down", "MOVE", "and", "define", "shift", "dock")


def toy_schema() -> tuple[Vocabulary, TypeTable]:
    vocabulary = Vocabulary(
        (
            PredicateSignature("at", ("Robot", "Zone")),
            PredicateSignature("holding", ("Robot", "Block")),
            PredicateSignature("stored", ("Block", "Zone")),
            PredicateSignature("clear", ("Thing",)),
            PredicateSignature("powered", ()),
        )
    )
    return vocabulary, TypeTable(_OBJECT_TYPES, _PARENTS)


def toy_atoms() -> list[GroundAtom]:
    vocabulary, table = toy_schema()
    return list(enumerate_atoms(vocabulary, sorted(_OBJECT_TYPES), table))


def random_grounded_operator(rng: random.Random, name: str) -> GroundedOperator:
    """A random observed transition over the toy schema.

    Retries until the draw satisfies the operator invariants: every chosen
    object appears in some literal, and the postcondition differs from the
    precondition.
    """
    vocabulary, table = toy_schema()
    while True:
        objs = tuple(rng.sample(sorted(_OBJECT_TYPES), rng.randint(2, 3)))
        pool = [a for a in enumerate_atoms(vocabulary, objs, table) if a.args]
        rng.shuffle(pool)
        pre = {atom: rng.random() < 0.6 for atom in pool[: rng.randint(1, 4)]}
        post = dict(pre)
        for atom in rng.sample(pool, min(len(pool), rng.randint(1, 3))):
            post[atom] = not post.get(atom, rng.random() < 0.5)
        used = {arg for atom in set(pre) | set(post) for arg in atom.args}
        if used != set(objs) or pre == post:
            continue
        try:
            return GroundedOperator(
                name,
                objs,
                frozenset(Literal(a, p) for a, p in pre.items()),
                frozenset(Literal(a, p) for a, p in post.items()),
            )
        except ValidationError:
            continue


def random_library(rng: random.Random, operators: int | None = None) -> OperatorLibrary:
    vocabulary, table = toy_schema()
    library = OperatorLibrary.empty(vocabulary, table)
    for _ in range(operators if operators is not None else rng.randint(2, 5)):
        op = random_grounded_operator(rng, rng.choice(OPERATOR_NAME_POOL))
        lifted = lift(op, table)
        merge(library, lifted)
        if rng.random() < 0.3:
            merge(library, lifted)
    return library


def random_planning_instance(
    rng: random.Random,
) -> tuple[list[GroundedAction], State, list[Literal]]:
    """A small ground task; some draws are unsolvable on purpose."""
    sig = PredicateSignature("flag", ("Slot",))
    atoms = [GroundAtom(sig, (f"s{i}",)) for i in range(rng.randint(4, 7))]
    actions = []
    for i in range(rng.randint(4, 9)):
        pre = frozenset(
            Literal(a, rng.random() < 0.6) for a in rng.sample(atoms, rng.randint(0, 2))
        )
        adds = set(rng.sample(atoms, rng.randint(0, 2)))
        dels = set(rng.sample(atoms, rng.randint(0, 2))) - adds
        if not adds and not dels:
            adds = {rng.choice(atoms)}
        actions.append(
            GroundedAction(
                f"act{i}", (), pre, frozenset(adds), frozenset(dels), rng.randint(1, 5)
            )
        )
    init = State.of(a for a in atoms if rng.random() < 0.5)
    goal = [Literal(a, rng.random() < 0.7) for a in rng.sample(atoms, rng.randint(1, 3))]
    return actions, init, goal


def random_trace(rng: random.Random) -> Trace:
    vocabulary, table = toy_schema()
    atoms = toy_atoms()
    frames = []
    t = 0.0
    for _ in range(rng.randint(2, 9)):
        frames.append(Frame(t, frozenset(a for a in atoms if rng.random() < 0.3)))
        t += rng.choice([0.0, 0.25, 0.5])
    return Trace(vocabulary, table, tuple(frames), demonstrator="gen", scenario="random")


# hypothesis strategies over the same toy schema

def atoms_st():
    return st.sampled_from(sorted(toy_atoms(), key=GroundAtom.sort_key))


def literals_st():
    return st.builds(Literal, atoms_st(), st.booleans())


def states_st():
    return st.builds(State.of, st.frozensets(atoms_st(), max_size=8))


bool_series_st = st.lists(st.booleans(), min_size=1, max_size=12)


@st.composite
def traces_st(draw):
    vocabulary, table = toy_schema()
    pool = sorted(toy_atoms(), key=GroundAtom.sort_key)
    count = draw(st.integers(min_value=2, max_value=8))
    frames = tuple(
        Frame(0.5 * i, frozenset(draw(st.frozensets(st.sampled_from(pool), max_size=6))))
        for i in range(count)
    )
    return Trace(vocabulary, table, frames)
