"""Grounding and optimal search over learned operators.

Costs come from observation counts: cost(op) = max_count - count(op) + 1, so
the most frequently demonstrated operator costs 1 and rarities cost more.
Search is uniform-cost (A* with a zero heuristic) over closed-world states,
with an optional admissible h_max heuristic that never changes the optimum.
States are compiled to integer bitmasks internally; ties between equal-cost
candidates resolve by (action name, bound objects) lexicographic order.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from .errors import InvalidEffect, SearchLimitExceeded, ValidationError
from .learning import LiftedOperator, OperatorLibrary
from .model import GroundAtom, Literal, ObjectInstance, State, TypeTable, apply, holds

DEFAULT_NODE_LIMIT = 10_000_000


@dataclass(frozen=True)
class CostModel:
    """Cost per operator, keyed by canonical key."""

    costs: Mapping[str, int]

    def __post_init__(self):
        object.__setattr__(self, "costs", dict(self.costs))
        for key, cost in self.costs.items():
            if not isinstance(cost, int) or cost < 1:
                raise ValidationError(f"cost for {key!r} must be a positive integer, got {cost!r}")

    def cost(self, key: str) -> int:
        return self.costs[key]


def derive_costs(library: OperatorLibrary) -> CostModel:
    """Map observation counts to costs so often-seen operators are preferred."""
    if not library.operators:
        return CostModel({})
    top = max(op.count for op in library.operators.values())
    return CostModel({key: top - op.count + 1 for key, op in library.operators.items()})


@dataclass(frozen=True)
class ActionSchema:
    """A lifted action ready for grounding: preconditions plus add/delete deltas."""

    name: str
    params: tuple[tuple[str, str], ...]
    pre: frozenset[Literal]
    adds: frozenset[GroundAtom]
    dels: frozenset[GroundAtom]
    cost: int


@dataclass(frozen=True)
class GroundedAction:
    name: str
    objects: tuple[str, ...]
    pre: frozenset[Literal]
    adds: frozenset[GroundAtom]
    dels: frozenset[GroundAtom]
    cost: int = 1

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        if self.adds & self.dels:
            raise InvalidEffect(f"action {self.name!r} adds and deletes the same atom")
        positives = {l.atom for l in self.pre if l.positive}
        negatives = {l.atom for l in self.pre if not l.positive}
        if positives & negatives:
            raise ValidationError(f"action {self.name!r} has contradictory preconditions")
        if not isinstance(self.cost, int) or self.cost < 1:
            raise ValidationError(f"action {self.name!r} needs a positive integer cost")

    def sort_key(self) -> tuple:
        return (self.name, self.objects)

    def __repr__(self) -> str:
        return f"{self.name}({','.join(self.objects)})"


@dataclass(frozen=True)
class Plan:
    actions: tuple[GroundedAction, ...]
    total_cost: int

    def __post_init__(self):
        object.__setattr__(self, "actions", tuple(self.actions))
        if self.total_cost != sum(a.cost for a in self.actions):
            raise ValidationError("plan total_cost does not match its actions")


def schemas_from_library(
    library: OperatorLibrary, cost_model: Optional[CostModel] = None
) -> list[ActionSchema]:
    """One schema per operator, named uniquely; unit costs if no model given."""
    names = library.variant_names()
    schemas = []
    for key, op in library.sorted_items():
        adds, dels = op.delta()
        cost = 1 if cost_model is None else cost_model.cost(key)
        schemas.append(ActionSchema(names[key], op.params, op.pre, adds, dels, cost))
    return sorted(schemas, key=lambda s: s.name)


def _substitute_atom(atom: GroundAtom, binding: Mapping[str, str]) -> GroundAtom:
    return GroundAtom(atom.predicate, tuple(binding.get(a, a) for a in atom.args))


def ground_schemas(
    schemas: Sequence[ActionSchema],
    objects: Iterable[ObjectInstance],
    types: TypeTable,
    allow_repeated_bindings: bool = False,
) -> list[GroundedAction]:
    """All type-consistent bindings; objects bound to distinct params differ
    unless repeated bindings are explicitly allowed."""
    table = types.with_instances(objects)
    actions = []
    for schema in sorted(schemas, key=lambda s: s.name):
        candidates = [table.instances_of(type_id) for _, type_id in schema.params]
        variables = [var for var, _ in schema.params]
        for chosen in itertools.product(*candidates):
            if not allow_repeated_bindings and len(set(chosen)) != len(chosen):
                continue
            binding = dict(zip(variables, chosen))
            actions.append(
                GroundedAction(
                    name=schema.name,
                    objects=tuple(chosen),
                    pre=frozenset(
                        Literal(_substitute_atom(l.atom, binding), l.positive) for l in schema.pre
                    ),
                    adds=frozenset(_substitute_atom(a, binding) for a in schema.adds),
                    dels=frozenset(_substitute_atom(a, binding) for a in schema.dels),
                    cost=schema.cost,
                )
            )
    return sorted(actions, key=GroundedAction.sort_key)


def ground(
    library: OperatorLibrary,
    objects: Iterable[ObjectInstance],
    cost_model: Optional[CostModel] = None,
    allow_repeated_bindings: bool = False,
) -> list[GroundedAction]:
    return ground_schemas(
        schemas_from_library(library, cost_model),
        objects,
        library.types,
        allow_repeated_bindings,
    )


def schemas_from_docs(domain_doc) -> list[ActionSchema]:
    """Adapt a parsed domain document (see the pddl module) for grounding."""
    schemas = [
        ActionSchema(
            name=a.name,
            params=tuple(a.params),
            pre=frozenset(a.pre),
            adds=frozenset(a.adds),
            dels=frozenset(a.dels),
            cost=a.cost,
        )
        for a in domain_doc.actions
    ]
    return sorted(schemas, key=lambda s: s.name)


def task_from_docs(
    domain_doc, problem_doc, allow_repeated_bindings: bool = False
) -> tuple[list[GroundedAction], State, list[Literal]]:
    """Ground a parsed domain against a parsed problem."""
    objects = [ObjectInstance(o, t) for o, t in problem_doc.objects]
    actions = ground_schemas(
        schemas_from_docs(domain_doc),
        objects,
        domain_doc.type_table(),
        allow_repeated_bindings,
    )
    return actions, State.of(problem_doc.init), list(problem_doc.goal)


@dataclass
class _Task:
    """The bitmask compilation of one planning problem."""

    index: dict[GroundAtom, int]
    actions: list[GroundedAction]
    pre_pos: list[int] = field(default_factory=list)
    pre_neg: list[int] = field(default_factory=list)
    add_mask: list[int] = field(default_factory=list)
    del_mask: list[int] = field(default_factory=list)

    def mask(self, atoms: Iterable[GroundAtom]) -> int:
        m = 0
        for atom in atoms:
            m |= 1 << self.index[atom]
        return m


def _compile(actions: Sequence[GroundedAction], init: State, goal: Sequence[Literal]) -> _Task:
    universe: set[GroundAtom] = set(init.true_atoms)
    universe.update(l.atom for l in goal)
    for action in actions:
        universe.update(l.atom for l in action.pre)
        universe.update(action.adds)
        universe.update(action.dels)
    ordered = sorted(universe, key=GroundAtom.sort_key)
    task = _Task({atom: i for i, atom in enumerate(ordered)}, list(actions))
    for action in actions:
        task.pre_pos.append(task.mask(l.atom for l in action.pre if l.positive))
        task.pre_neg.append(task.mask(l.atom for l in action.pre if not l.positive))
        task.add_mask.append(task.mask(action.adds))
        task.del_mask.append(task.mask(action.dels))
    return task


def _hmax_table(task: _Task) -> tuple[list[list[int]], list[list[int]], list[int]]:
    """Static achiever/requirement lists over fact space (2 facts per atom)."""
    n_facts = 2 * len(task.index)
    needed_by: list[list[int]] = [[] for _ in range(n_facts)]
    pre_counts: list[int] = []
    achieves: list[list[int]] = [[] for _ in range(len(task.actions))]
    for ai in range(len(task.actions)):
        pre_facts = []
        for bit in range(len(task.index)):
            if task.pre_pos[ai] >> bit & 1:
                pre_facts.append(2 * bit)
            if task.pre_neg[ai] >> bit & 1:
                pre_facts.append(2 * bit + 1)
            if task.add_mask[ai] >> bit & 1:
                achieves[ai].append(2 * bit)
            if task.del_mask[ai] >> bit & 1:
                achieves[ai].append(2 * bit + 1)
        for fact in pre_facts:
            needed_by[fact].append(ai)
        pre_counts.append(len(pre_facts))
    return needed_by, achieves, pre_counts


def _hmax(
    task: _Task,
    state: int,
    goal_facts: list[int],
    needed_by: list[list[int]],
    achieves: list[list[int]],
    pre_counts: list[int],
) -> float:
    """Admissible max-cost estimate over the delete relaxation in literal space."""
    n_facts = 2 * len(task.index)
    cost = [float("inf")] * n_facts
    queue: list[tuple[float, int]] = []
    for bit in range(len(task.index)):
        fact = 2 * bit if state >> bit & 1 else 2 * bit + 1
        cost[fact] = 0.0
        queue.append((0.0, fact))
    heapq.heapify(queue)
    remaining = list(pre_counts)
    for ai, need in enumerate(remaining):
        if need == 0:
            for fact in achieves[ai]:
                if task.actions[ai].cost < cost[fact]:
                    cost[fact] = float(task.actions[ai].cost)
                    heapq.heappush(queue, (cost[fact], fact))
    settled = [False] * n_facts
    while queue:
        c, fact = heapq.heappop(queue)
        if settled[fact] or c > cost[fact]:
            continue
        settled[fact] = True
        for ai in needed_by[fact]:
            remaining[ai] -= 1
            if remaining[ai] == 0:
                # c is the costliest precondition: facts settle in cost order.
                new_cost = c + task.actions[ai].cost
                for out in achieves[ai]:
                    if new_cost < cost[out]:
                        cost[out] = new_cost
                        heapq.heappush(queue, (new_cost, out))
    return max((cost[f] for f in goal_facts), default=0.0)


def plan(
    actions: Sequence[GroundedAction],
    init: State,
    goal: Iterable[Literal],
    node_limit: int = DEFAULT_NODE_LIMIT,
    heuristic: str = "none",
) -> Optional[Plan]:
    """Optimal plan from init to goal, or None when the goal is unreachable.

    Raises SearchLimitExceeded after expanding ``node_limit`` states.
    """
    if heuristic not in ("none", "hmax"):
        raise ValidationError(f"unknown heuristic {heuristic!r}")
    goal = sorted(goal, key=Literal.sort_key)
    ordered = sorted(actions, key=GroundedAction.sort_key)
    task = _compile(ordered, init, goal)
    goal_pos = task.mask(l.atom for l in goal if l.positive)
    goal_neg = task.mask(l.atom for l in goal if not l.positive)
    start = task.mask(init.true_atoms)

    hmax_static = None
    goal_facts: list[int] = []
    if heuristic == "hmax":
        hmax_static = _hmax_table(task)
        for bit in range(len(task.index)):
            if goal_pos >> bit & 1:
                goal_facts.append(2 * bit)
            if goal_neg >> bit & 1:
                goal_facts.append(2 * bit + 1)

    def estimate(state: int) -> float:
        if hmax_static is None:
            return 0.0
        return _hmax(task, state, goal_facts, *hmax_static)

    n = len(ordered)
    dist: dict[int, int] = {start: 0}
    parent: dict[int, tuple[int, int]] = {}
    counter = itertools.count()
    h0 = estimate(start)
    frontier: list[tuple[float, int, int, int]] = []
    if h0 != float("inf"):
        frontier = [(h0, next(counter), start, 0)]
    expanded = 0
    while frontier:
        _, _, state, g = heapq.heappop(frontier)
        if g > dist[state]:  # stale entry
            continue
        if state & goal_pos == goal_pos and state & goal_neg == 0:
            steps = []
            cur = state
            while cur != start:
                prev, ai = parent[cur]
                steps.append(ordered[ai])
                cur = prev
            steps.reverse()
            return Plan(tuple(steps), g)
        expanded += 1
        if expanded > node_limit:
            raise SearchLimitExceeded(f"expanded more than {node_limit} states")
        for ai in range(n):
            if state & task.pre_pos[ai] != task.pre_pos[ai] or state & task.pre_neg[ai]:
                continue
            successor = (state & ~task.del_mask[ai]) | task.add_mask[ai]
            new_g = g + ordered[ai].cost
            if new_g < dist.get(successor, float("inf")):
                h = estimate(successor)
                if h == float("inf"):
                    continue
                dist[successor] = new_g
                parent[successor] = (state, ai)
                heapq.heappush(frontier, (new_g + h, next(counter), successor, new_g))
    return None


@dataclass(frozen=True)
class PlanValidation:
    """validate() result: ok, or the first step whose preconditions failed.

    ``failed_step`` is None with ``goal_satisfied`` False when the plan ran
    through but missed the goal.
    """

    ok: bool
    failed_step: Optional[int] = None
    missing: tuple[Literal, ...] = ()
    goal_satisfied: bool = True
    final_state: State = State()


def validate(plan_: Plan, init: State, goal: Iterable[Literal]) -> PlanValidation:
    """Replay a plan from init, checking every precondition, then the goal."""
    state = init
    for i, action in enumerate(plan_.actions):
        missing = tuple(l for l in sorted(action.pre, key=Literal.sort_key) if not holds(state, l))
        if missing:
            return PlanValidation(False, failed_step=i, missing=missing, final_state=state)
        state = apply(state, action.adds, action.dels)
    unmet = tuple(l for l in sorted(goal, key=Literal.sort_key) if not holds(state, l))
    if unmet:
        return PlanValidation(False, missing=unmet, goal_satisfied=False, final_state=state)
    return PlanValidation(True, final_state=state)


def solve(
    library: OperatorLibrary,
    objects: Iterable[ObjectInstance],
    init: State,
    goal: Iterable[Literal],
    cost_model: Optional[CostModel] = None,
    node_limit: int = DEFAULT_NODE_LIMIT,
    heuristic: str = "none",
    allow_repeated_bindings: bool = False,
) -> Optional[Plan]:
    """Ground a library over a concrete object set and search."""
    actions = ground(library, objects, cost_model, allow_repeated_bindings)
    return plan(actions, init, goal, node_limit=node_limit, heuristic=heuristic)
