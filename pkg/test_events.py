# test_events.py
"""
Events, witnesses, disjoint and separated occurrence, BK checks and the
event DSL.

Run:
    pytest test_events.py
"""

import itertools

import pytest

from operators.engine import enumerate_distribution, indicator, probability
from operators.errors import SpecError
from operators.event_dsl import parse_event, tokenize
from operators.events import (
    all_open,
    always_false,
    always_true,
    and_,
    check_monotonicity,
    check_support,
    closed_bond,
    complement,
    connect,
    connect_dual,
    disjoint,
    disjoint_occurrence,
    increasing_catalog,
    minimal_witnesses,
    occurs_on,
    open_bond,
    or_,
    sep,
    separated_occurrence,
    threshold,
)
from operators.lattice import Configuration, build_rectangle
from operators.models import FREE, FkParams

FIRST = ((0, 0), (1, 0))
LAST = ((4, 0), (5, 0))


# =============================================================================
# Basic Events
# =============================================================================

class TestBasicEvents:
    def test_open_and_closed(self, square):
        config = Configuration.from_open_bonds(square, [FIRST])
        assert open_bond(FIRST)(config)
        assert not closed_bond(FIRST)(config)

    def test_complement_of_open_is_closed(self):
        assert complement(open_bond(FIRST)) == closed_bond(FIRST)

    def test_connect_needs_a_path(self, square):
        config = Configuration.from_open_bonds(square, [FIRST])
        assert connect((0, 0), (1, 0))(config)
        assert not connect((0, 0), (1, 1))(config)

    def test_connect_to_itself(self, square):
        assert connect((0, 0), (0, 0))(Configuration.all_closed(square))

    def test_connect_dual_around_a_closed_square(self, square):
        # dual sites inside and below the square are joined through the closed bottom bond
        assert connect_dual((0, 0), (0, -1))(Configuration.all_closed(square))
        assert not connect_dual((0, 0), (0, -1))(Configuration.all_open(square))

    def test_threshold(self, square):
        config = Configuration.from_open_bonds(square, square.bonds[:2])
        assert threshold(square.bonds, 2)(config)
        assert not threshold(square.bonds, 3)(config)

    def test_negative_threshold(self, square):
        with pytest.raises(ValueError):
            threshold(square.bonds, -1)

    def test_boolean_combinations(self, square):
        config = Configuration.from_open_bonds(square, [FIRST])
        a, b = open_bond(FIRST), open_bond(square.bonds[1])
        assert or_(a, b)(config)
        assert not and_(a, b)(config)
        assert always_true()(config)
        assert not always_false()(config)

    def test_declared_monotonicity_holds(self, square):
        for event in increasing_catalog(square):
            assert check_monotonicity(event, square).holds, event.name

    def test_support_declaration(self, square):
        assert check_support(all_open(square.bonds[:2]), square).holds


# =============================================================================
# Witnesses
# =============================================================================

class TestWitnesses:
    def test_connect_has_two_shortest_paths(self, square):
        family = minimal_witnesses(connect((0, 0), (1, 1)), Configuration.all_open(square))
        assert len(family) == 2
        assert all(len(w) == 2 for w in family)

    def test_witness_outside_event(self, square):
        with pytest.raises(ValueError):
            minimal_witnesses(open_bond(FIRST), Configuration.all_closed(square))

    def test_occurs_on_a_witness(self, strip):
        config = Configuration.all_open(strip)
        event = connect((0, 0), (2, 0))
        assert occurs_on(event, config, strip.bonds[:2])
        assert not occurs_on(event, config, strip.bonds[1:2])

    def test_decreasing_witness(self, square):
        family = minimal_witnesses(closed_bond(FIRST), Configuration.all_closed(square))
        assert list(family) == [frozenset({FIRST})]


class TestOccurrence:
    def test_disjoint_bonds(self, strip):
        config = Configuration.all_open(strip)
        found = disjoint_occurrence(open_bond(FIRST), open_bond(LAST), config)
        assert found == (frozenset({FIRST}), frozenset({LAST}))

    def test_same_bond_is_not_disjoint(self, strip):
        config = Configuration.all_open(strip)
        assert disjoint_occurrence(open_bond(FIRST), open_bond(FIRST), config) is None

    def test_separation_ladder(self, strip):
        config = Configuration.all_open(strip)
        a, b = open_bond(FIRST), open_bond(LAST)
        assert separated_occurrence(a, b, config, 3) is not None
        assert separated_occurrence(a, b, config, 4) is None

    def test_zero_separation_allows_overlap(self, strip):
        config = Configuration.all_open(strip)
        a = connect((0, 0), (3, 0))
        assert separated_occurrence(a, a, config, 0) is not None

    def test_negative_separation(self, strip):
        with pytest.raises(ValueError):
            separated_occurrence(open_bond(FIRST), open_bond(LAST), Configuration.all_open(strip), -1)

    def test_sep_event_is_increasing(self, strip):
        event = sep(connect((0, 0), (1, 0)), connect((4, 0), (5, 0)), 3)
        assert event.increasing
        assert check_monotonicity(event, strip).holds

    def test_disjoint_paths_share_no_bond(self, strip):
        event = disjoint(connect((0, 0), (2, 0)), connect((1, 0), (3, 0)))
        assert not event(Configuration.all_open(strip))


# =============================================================================
# Correlation Inequalities
# =============================================================================

class TestBk:
    def test_bk_on_the_square_catalog(self, square):
        dist = enumerate_distribution(FkParams(p=0.5, q=1), square, FREE)
        catalog = increasing_catalog(square, max_threshold=2)
        for a, b in itertools.product(catalog, repeat=2):
            lhs = probability(dist, disjoint(a, b))
            assert lhs <= probability(dist, a) * probability(dist, b) + 1e-12, (a.name, b.name)

    @pytest.mark.parametrize("p", [0.2, 0.8])
    def test_bk_for_separated_paths(self, strip, p):
        dist = enumerate_distribution(FkParams(p=p, q=1), strip, FREE)
        a, b = connect((0, 0), (2, 0)), connect((3, 0), (5, 0))
        assert probability(dist, sep(a, b, 1)) <= probability(dist, a) * probability(dist, b) + 1e-12

    def test_positive_association_beats_the_product(self, square, half_q2):
        # bonds sharing a corner of a cycle; on a free path they would be independent
        dist = enumerate_distribution(half_q2, square, FREE)
        a, b = open_bond(FIRST), open_bond(((1, 0), (1, 1)))
        assert probability(dist, disjoint(a, b)) == pytest.approx(10 / 82)
        assert probability(dist, disjoint(a, b)) > probability(dist, a) * probability(dist, b)

    def test_free_path_bonds_are_independent(self, two_bonds, half_q2):
        dist = enumerate_distribution(half_q2, two_bonds, FREE)
        a, b = open_bond(two_bonds.bonds[0]), open_bond(two_bonds.bonds[1])
        assert probability(dist, and_(a, b)) == pytest.approx(probability(dist, a) * probability(dist, b))

    def test_disjoint_equals_intersection_for_single_bonds(self, two_bonds, half_q2):
        dist = enumerate_distribution(half_q2, two_bonds, FREE)
        a, b = open_bond(two_bonds.bonds[0]), open_bond(two_bonds.bonds[1])
        assert (indicator(dist, disjoint(a, b)) == indicator(dist, and_(a, b))).all()


# =============================================================================
# DSL
# =============================================================================

class TestDsl:
    def test_open(self):
        assert parse_event("(open 0 0 1 0)") == open_bond(FIRST)

    def test_connect(self, strip):
        event = parse_event("(connect 0 0 5 0)")
        assert event(Configuration.all_open(strip))

    def test_sep_form(self, strip):
        event = parse_event("(sep r 3 (open 0 0 1 0) (open 4 0 5 0))")
        assert event(Configuration.all_open(strip))
        assert not parse_event("(sep r 4 (open 0 0 1 0) (open 4 0 5 0))")(Configuration.all_open(strip))

    def test_bond_lists(self, square):
        event = parse_event("(threshold 2 (0 0 1 0) (0 0 0 1) (1 0 1 1))")
        assert event(Configuration.from_open_bonds(square, [((0, 0), (1, 0)), ((0, 0), (0, 1))]))

    def test_comment_is_skipped(self):
        assert parse_event("(open 0 0 1 0) ; first bond") == open_bond(FIRST)

    def test_three_dimensions(self):
        event = parse_event("(open 0 0 0 0 0 1)", dimension=3)
        assert event == open_bond(((0, 0, 0), (0, 0, 1)))

    def test_unclosed_paren_position(self):
        with pytest.raises(SpecError) as info:
            parse_event("(connect 0 0 1 0")
        assert (info.value.line, info.value.column) == (1, 1)

    def test_unknown_operator_position(self):
        with pytest.raises(SpecError) as info:
            parse_event("(and (open 0 0 1 0)\n  (bogus))")
        assert (info.value.line, info.value.column) == (2, 4)
        assert "bogus" in str(info.value)

    def test_wrong_arity(self):
        with pytest.raises(SpecError):
            parse_event("(open 0 0 1)")

    def test_non_adjacent_bond(self):
        with pytest.raises(SpecError):
            parse_event("(open 0 0 2 0)")

    def test_sep_needs_r(self):
        with pytest.raises(SpecError):
            parse_event("(sep 3 3 (open 0 0 1 0) (open 4 0 5 0))")

    def test_bad_character(self):
        with pytest.raises(SpecError) as info:
            tokenize("(open 0 0 1 0 @)")
        assert info.value.column == 15
