"""Reference implementations the tests compare the package against.

Everything in this module is deliberately written from scratch in the most
direct style available: plain sets and dicts, exhaustive enumeration, no
bitmasks, and no imports from demoplan beyond the frozen dataclasses whose
public fields the oracles read.  When an oracle and the package disagree,
one of them has a bug; the oracles are kept simple enough to audit by eye.
"""

from __future__ import annotations

import heapq
import itertools


def dijkstra_plan(actions, init, goal):
    """Cheapest plan by textbook Dijkstra over frozenset-of-atoms states.

    ``actions`` is any sequence of objects with ``pre`` (literals), ``adds``,
    ``dels`` (atom sets) and an integer ``cost``.  Returns ``(cost, actions)``
    or None when the goal is unreachable.  Tie-breaking is arbitrary, so only
    the cost is comparable against another planner.
    """
    goal = list(goal)
    start = frozenset(init.true_atoms)
    best = {start: 0}
    heap = [(0, 0, start, ())]
    tie = itertools.count(1)
    while heap:
        cost, _, atoms, path = heapq.heappop(heap)
        if cost > best.get(atoms, cost):
            continue
        if all((lit.atom in atoms) == lit.positive for lit in goal):
            return cost, path
        for act in actions:
            if not all((lit.atom in atoms) == lit.positive for lit in act.pre):
                continue
            successor = frozenset((atoms - act.dels) | act.adds)
            next_cost = cost + act.cost
            if next_cost < best.get(successor, next_cost + 1):
                best[successor] = next_cost
                heapq.heappush(heap, (next_cost, next(tie), successor, path + (act,)))
    return None


def replay(plan_actions, init, goal):
    """Execute a plan literally; return (total_cost, final_atoms) or None.

    None means a precondition failed along the way or the goal does not hold
    at the end.
    """
    atoms = set(init.true_atoms)
    total = 0
    for act in plan_actions:
        if not all((lit.atom in atoms) == lit.positive for lit in act.pre):
            return None
        atoms = (atoms - set(act.dels)) | set(act.adds)
        total += act.cost
    if not all((lit.atom in atoms) == lit.positive for lit in goal):
        return None
    return total, frozenset(atoms)


def type_chain(type_id, parents):
    chain = [type_id]
    while chain[-1] in parents:
        chain.append(parents[chain[-1]])
    return chain


def all_typed_atoms(signatures, object_types, parents):
    """Every well-typed ground atom as (name, args) pairs, brute force.

    ``object_types`` maps object id to type id, ``parents`` maps type id to
    parent type id.  Repeated arguments are included.
    """
    atoms = set()
    for sig in signatures:
        pools = []
        for wanted in sig.arg_types:
            pools.append(
                sorted(
                    obj
                    for obj, t in object_types.items()
                    if wanted in type_chain(t, parents)
                )
            )
        for combo in itertools.product(*pools):
            atoms.add((sig.name, combo))
    return atoms


def _relabeled(literals, mapping):
    return {
        (lit.atom.name, tuple(mapping.get(a, a) for a in lit.atom.args), lit.positive)
        for lit in literals
    }


def operators_equivalent(a, b):
    """True when some type-preserving parameter bijection maps a onto b.

    Tries every permutation outright; operators here have at most a handful
    of parameters, so the factorial blowup never matters.
    """
    if len(a.params) != len(b.params):
        return False
    a_vars = [v for v, _ in a.params]
    a_types = [t for _, t in a.params]
    b_vars = [v for v, _ in b.params]
    b_types = [t for _, t in b.params]
    if sorted(a_types) != sorted(b_types):
        return False
    b_pre = _relabeled(b.pre, {})
    b_post = _relabeled(b.post, {})
    for perm in itertools.permutations(range(len(b_vars))):
        if any(a_types[i] != b_types[perm[i]] for i in range(len(a_vars))):
            continue
        mapping = {a_vars[i]: b_vars[perm[i]] for i in range(len(a_vars))}
        if _relabeled(a.pre, mapping) == b_pre and _relabeled(a.post, mapping) == b_post:
            return True
    return False


def count_groundings(pools, injective):
    """How many argument tuples a parameter list admits over candidate pools."""
    total = 0
    for combo in itertools.product(*pools):
        if injective and len(set(combo)) != len(combo):
            continue
        total += 1
    return total


def debounced_reference(values, window):
    """Forward-scan debounce of one boolean series, independent of the
    run-length formulation in the package: a change is accepted at i only
    when the next window frames (i included) all carry the new value."""
    out = [values[0]]
    current = values[0]
    for i in range(1, len(values)):
        stable = len(values) - i >= window and all(
            v == values[i] for v in values[i : i + window]
        )
        if values[i] != current and stable:
            current = values[i]
        out.append(current)
    return out
