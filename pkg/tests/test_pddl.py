import random

import pytest

from demoplan.errors import (
    EmptyDomain,
    PddlSyntaxError,
    UnsupportedFeature,
    ValidationError,
)
from demoplan.learning import OperatorLibrary, lift, merge
from demoplan.model import Literal, ObjectInstance, State
from demoplan.pddl import (
    NameMap,
    build_name_map,
    domain_to_doc,
    emit_domain,
    emit_problem,
    library_name_map,
    parse_domain,
    parse_problem,
    problem_to_doc,
    render_domain,
    render_problem,
)
from demoplan.planner import plan, task_from_docs, validate
from demoplan.synth import corpus_goals, initial_state, planning_objects

from helpers import (
    OPERATOR_NAME_POOL,
    random_grounded_operator,
    random_library,
    toy_schema,
)

CRANE_DOMAIN = """(define (domain crane)
  (:requirements :strips :typing :negative-preconditions :action-costs)
  (:types crate - object)
  (:predicates
    (lifted ?c - crate)
    (stacked ?a - crate ?b - crate)
    (armfree)
  )
  (:functions (total-cost) - number)
  ; hoisting wears the winch, so it costs more than dropping
  (:action hoist
    :parameters (?c - crate)
    :precondition (and (armfree) (not (lifted ?c)))
    :effect (and (lifted ?c) (not (armfree)) (increase (total-cost) 2))
  )
  (:action drop-onto
    :parameters (?c - crate ?base - crate)
    :precondition (and (lifted ?c))
    :effect (and (stacked ?c ?base) (armfree) (not (lifted ?c)))
  )
)"""

CRANE_PROBLEM = """(define (problem restack)
  (:domain crane)
  (:objects c1 c2 - crate)
  (:init (armfree) (= (total-cost) 0))
  (:goal (and (stacked c1 c2) (armfree)))
  (:metric minimize (total-cost))
)"""


class TestNameMap:
    def test_mangling_rules(self):
        nm = build_name_map(["onTop", "OnTop", "1abc", "and", "hand move", "x"])
        assert nm.as_dict() == {
            "1abc": "x1abc",
            "OnTop": "ontop",
            "and": "and_2",
            "hand move": "hand_move",
            "onTop": "ontop_2",
            "x": "x",
        }

    def test_map_is_a_bijection(self):
        names = ["Wooden_cube", "wooden-CUBE", "put", "PUT", "define"]
        nm = build_name_map(names)
        seen = set()
        for name in names:
            mapped = nm.pddl(name)
            assert mapped not in seen
            seen.add(mapped)
            assert nm.orig(mapped) == name

    def test_assignment_ignores_input_order(self):
        names = ["zeta", "Alpha", "alpha", "Beta"]
        a = build_name_map(names)
        b = build_name_map(list(reversed(names)))
        assert a.as_dict() == b.as_dict()

    def test_dict_round_trip(self):
        nm = build_name_map(["onTop", "inHand"])
        assert NameMap.from_dict(nm.as_dict()).as_dict() == nm.as_dict()

    def test_extended_keeps_existing_assignments(self):
        nm = build_name_map(["onTop"])
        wider = nm.extended(["ONTOP"])
        assert wider.pddl("onTop") == nm.pddl("onTop")
        assert wider.pddl("ONTOP") != wider.pddl("onTop")

    def test_library_map_covers_every_identifier(self, corpus_library):
        nm = library_name_map(corpus_library)
        assert nm.pddl("handMove") == "handmove"
        assert nm.pddl("Wooden_cube") == "wooden_cube"
        assert nm.orig("wooden_cube") == "Wooden_cube"
        assert nm.pddl("place_2") == "place_2"
        assert nm.pddl("Support") == "support"


class TestEmission:
    def test_domain_header_and_determinism(self, corpus_library):
        text = emit_domain(corpus_library)
        assert text == emit_domain(corpus_library)
        assert text.startswith(
            "(define (domain learned)\n"
            "  (:requirements :strips :typing :negative-preconditions :action-costs)\n"
            "  (:types\n"
            "    hand - object\n"
            "    support - object\n"
            "    table - support\n"
            "    wooden_cube - support\n"
            "  )\n"
        )
        assert text.endswith(")\n")
        assert text.count("(:action ") == 7

    def test_problem_text_shape(self, corpus_library):
        goal = corpus_goals()["red_on_green"]
        text = emit_problem(corpus_library, planning_objects(), initial_state(), goal)
        assert text == emit_problem(corpus_library, planning_objects(), initial_state(), goal)
        assert "(define (problem task)" in text
        assert "(:domain learned)" in text
        assert "(= (total-cost) 0)" in text
        assert "(:metric minimize (total-cost))" in text
        assert "(ontop cube_red1 cube_green1)" in text

    def test_empty_library_cannot_be_emitted(self):
        vocabulary, table = toy_schema()
        with pytest.raises(EmptyDomain):
            emit_domain(OperatorLibrary.empty(vocabulary, table))

    def test_costs_must_be_positive_integers(self, corpus_library):
        zeroed = {key: 0 for key in corpus_library.operators}
        with pytest.raises(ValidationError):
            emit_domain(corpus_library, zeroed)

    def test_problem_needs_a_goal(self, corpus_library):
        with pytest.raises(ValidationError):
            emit_problem(corpus_library, planning_objects(), initial_state(), [])

    def test_problem_rejects_atoms_over_unknown_objects(self, corpus_library):
        goal = corpus_goals()["red_on_green"]
        with pytest.raises((ValidationError, TypeError)):
            emit_problem(
                corpus_library,
                [ObjectInstance("Table_1", "Table")],
                initial_state(),
                goal,
            )


class TestRoundTrips:
    def _corpus_name_map(self, library):
        return library_name_map(library).extended(
            ["learned", "task"] + [o.id for o in planning_objects()]
        )

    def test_corpus_domain_round_trips_byte_identically(self, corpus_library):
        text = emit_domain(corpus_library)
        nm = self._corpus_name_map(corpus_library)
        doc = parse_domain(text, name_map=nm)
        assert render_domain(doc, nm) == text

    def test_corpus_problem_round_trips_byte_identically(self, corpus_library):
        goal = corpus_goals()["tower_blue_red_green"]
        text = emit_problem(corpus_library, planning_objects(), initial_state(), goal)
        nm = self._corpus_name_map(corpus_library)
        domain_doc = parse_domain(emit_domain(corpus_library), name_map=nm)
        doc = parse_problem(text, domain=domain_doc, name_map=nm)
        assert render_problem(doc, nm) == text

    def test_parse_rebuilds_the_document_structure(self, corpus_library):
        text = emit_domain(corpus_library)
        nm = self._corpus_name_map(corpus_library)
        doc = parse_domain(text, name_map=nm)
        reference = domain_to_doc(corpus_library)
        assert doc == reference

    def test_random_libraries_round_trip(self):
        rng = random.Random(2024)
        for _ in range(10):
            library = random_library(rng)
            nm = library_name_map(library).extended(["learned"])
            text = emit_domain(library)
            assert render_domain(parse_domain(text, name_map=nm), nm) == text

    def test_a_large_library_round_trips(self):
        # stresses variant numbering and the name mangler: seven labels
        # spread over a hundred-plus operators, some with reserved names
        rng = random.Random(115)
        vocabulary, table = toy_schema()
        library = OperatorLibrary.empty(vocabulary, table)
        for _ in range(2000):
            if len(library.operators) >= 115:
                break
            op = random_grounded_operator(rng, rng.choice(OPERATOR_NAME_POOL))
            merge(library, lift(op, table))
        assert len(library.operators) == 115
        nm = library_name_map(library).extended(["learned"])
        text = emit_domain(library)
        doc = parse_domain(text, name_map=nm)
        assert render_domain(doc, nm) == text
        assert doc == domain_to_doc(library)


class TestParsing:
    def test_crane_domain(self):
        doc = parse_domain(CRANE_DOMAIN)
        assert doc.name == "crane"
        # documents keep actions sorted by name so rendering is deterministic
        assert [a.name for a in doc.actions] == ["drop-onto", "hoist"]
        assert doc.actions[1].cost == 2
        assert doc.actions[0].cost == 1  # no increase clause defaults to one
        armfree = [s for s in doc.predicates if s.name == "armfree"]
        assert armfree and armfree[0].arity == 0

    def test_crane_problem_plans_and_validates(self):
        domain_doc = parse_domain(CRANE_DOMAIN)
        problem_doc = parse_problem(CRANE_PROBLEM, domain=domain_doc)
        actions, init, goal = task_from_docs(domain_doc, problem_doc)
        # injective grounding: hoist over 2 crates, drop-onto over ordered pairs
        assert len(actions) == 4
        result = plan(actions, init, goal)
        assert result.total_cost == 3
        assert [a.name for a in result.actions] == ["hoist", "drop-onto"]
        assert validate(result, init, goal).ok

    def test_keywords_are_case_insensitive_and_names_keep_case(self):
        text = CRANE_DOMAIN.replace("(define", "(DEFINE").replace("(domain crane)", "(Domain Crane)")
        text = text.replace("(:action hoist", "(:ACTION Hoist")
        doc = parse_domain(text)
        assert doc.name == "Crane"
        assert doc.actions[0].name == "Hoist"

    def test_comments_are_ignored(self):
        assert parse_domain(CRANE_DOMAIN + "\n; trailing commentary\n").name == "crane"

    def test_syntax_errors_carry_positions(self):
        with pytest.raises(PddlSyntaxError) as err:
            parse_domain("(define (domain d)\n  (:predicates (p ?x)")
        assert err.value.line >= 1 and err.value.column >= 1
        with pytest.raises(PddlSyntaxError):
            parse_domain(CRANE_DOMAIN + " junk")

    def test_structural_requirements(self):
        with pytest.raises(PddlSyntaxError):
            parse_domain("(definitely (domain d))")
        with pytest.raises(PddlSyntaxError):
            parse_domain(CRANE_DOMAIN.replace("    :parameters (?c - crate)\n", ""))

    def test_semantic_validation(self):
        with pytest.raises(ValidationError, match="unknown predicate"):
            parse_domain(CRANE_DOMAIN.replace("(and (lifted ?c))", "(and (levitated ?c))"))
        with pytest.raises(ValidationError, match="takes 1 argument"):
            parse_domain(CRANE_DOMAIN.replace("(and (lifted ?c))", "(and (lifted ?c ?base))"))
        with pytest.raises(ValidationError, match="undeclared type"):
            parse_domain(CRANE_DOMAIN.replace("?c - crate)\n    :precondition (and (armfree)", "?c - pallet)\n    :precondition (and (armfree)"))
        with pytest.raises(ValidationError, match="duplicate action"):
            parse_domain(CRANE_DOMAIN[:-1] + CRANE_DOMAIN[CRANE_DOMAIN.index("(:action hoist"):])
        with pytest.raises(ValidationError, match="cost must be positive"):
            parse_domain(CRANE_DOMAIN.replace("(increase (total-cost) 2)", "(increase (total-cost) 0)"))

    def test_recognized_but_unsupported_constructs(self):
        cases = [
            CRANE_DOMAIN.replace("(and (lifted ?c))", "(or (lifted ?c))"),
            CRANE_DOMAIN.replace("(and (lifted ?c))", "(forall (?x - crate) (lifted ?x))"),
            CRANE_DOMAIN.replace("(stacked ?c ?base) ", "(when (armfree) (stacked ?c ?base)) "),
            CRANE_DOMAIN.replace(
                "(:types crate - object)", "(:types crate - object)\n  (:constants c0 - crate)"
            ),
            CRANE_DOMAIN.replace("(:action hoist", "(:durative-action glide)\n  (:action hoist"),
        ]
        for text in cases:
            with pytest.raises(UnsupportedFeature):
                parse_domain(text)

    def test_problem_validation(self):
        domain_doc = parse_domain(CRANE_DOMAIN)
        with pytest.raises(ValidationError, match="duplicate object"):
            parse_problem(CRANE_PROBLEM.replace("c1 c2 - crate", "c1 c1 - crate"), domain_doc)
        with pytest.raises(ValidationError, match="negative literals"):
            parse_problem(CRANE_PROBLEM.replace("(armfree)", "(not (armfree))"), domain_doc)
        with pytest.raises(UnsupportedFeature):
            parse_problem(CRANE_PROBLEM.replace("minimize", "maximize"), domain_doc)
        with pytest.raises(UnsupportedFeature):
            parse_problem(CRANE_PROBLEM.replace("(= (total-cost) 0)", "(= (total-cost) 5)"), domain_doc)
        with pytest.raises(ValidationError, match="undeclared name"):
            parse_problem(CRANE_PROBLEM.replace("(stacked c1 c2)", "(stacked c1 c9)"), domain_doc)

    def test_problem_tolerates_missing_cost_bookkeeping(self):
        # files without the cost clauses still parse; we only reject wrong ones
        domain_doc = parse_domain(CRANE_DOMAIN)
        text = CRANE_PROBLEM.replace(" (= (total-cost) 0)", "").replace(
            "\n  (:metric minimize (total-cost))", ""
        )
        doc = parse_problem(text, domain=domain_doc)
        assert [a.name for a in doc.init] == ["armfree"]

    def test_standalone_problem_infers_signatures(self):
        doc = parse_problem(CRANE_PROBLEM)
        assert doc.name == "restack"
        assert {a.name for a in doc.init} == {"armfree"}
        assert len(doc.goal) == 2

    def test_standalone_inference_widens_conflicting_positions(self):
        text = """(define (problem mixed)
  (:objects h1 - hand t1 - table c1 - cube)
  (:init (resting c1 t1))
  (:goal (and (resting c1 h1)))
)"""
        doc = parse_problem(text)
        # second position is used as both table and hand, so it widens
        assert doc.init[0].predicate.arg_types == ("cube", "object")

    def test_standalone_inference_rejects_arity_conflicts(self):
        text = """(define (problem broken)
  (:objects a b - thing)
  (:init (linked a b))
  (:goal (and (linked a)))
)"""
        with pytest.raises(ValidationError, match="different arities"):
            parse_problem(text)

    def test_goal_duplicates_collapse(self):
        domain_doc = parse_domain(CRANE_DOMAIN)
        doubled = CRANE_PROBLEM.replace(
            "(stacked c1 c2) (armfree)", "(stacked c1 c2) (stacked c1 c2) (armfree)"
        )
        doc = parse_problem(doubled, domain=domain_doc)
        assert len(doc.goal) == 2


def test_render_uses_document_order_for_params(corpus_library):
    # parameter lists are semantic and must never be resorted
    doc = domain_to_doc(corpus_library)
    put = next(a for a in doc.actions if a.name == "put")
    assert tuple(t for _, t in put.params) == ("Hand", "Table", "Wooden_cube")
    text = render_domain(doc, library_name_map(corpus_library).extended(["learned"]))
    assert ":parameters (?h1 - hand ?t1 - table ?w1 - wooden_cube)" in text
