from __future__ import annotations

import random

from hypothesis import given, settings
from hypothesis import strategies as st

from tcurator.model import ParsedQuery, QueryShape
from tcurator.sparql import extract_features, parse_query
from tcurator.sparql.features import classify_join_graph, join_edges

from oracles import brute_shape_depth, random_bgp


def vars_of(*groups: str) -> list[frozenset[str]]:
    return [frozenset(g.split()) for g in groups]


def test_point():
    assert classify_join_graph(vars_of("?a ?b")) == (QueryShape.POINT, 0)


def test_empty_pattern_block_degenerates_to_point():
    assert classify_join_graph([]) == (QueryShape.POINT, 0)


def test_chain_of_three():
    shape, depth = classify_join_graph(vars_of("?a ?b", "?b ?c", "?c ?d"))
    assert shape is QueryShape.CHAIN
    assert depth == 2


def test_patterns_all_sharing_one_variable_form_a_cycle():
    # three patterns joined pairwise through the same variable are a
    # triangle in the join graph, not a star
    shape, _ = classify_join_graph(vars_of("?h ?a", "?h ?b", "?h ?c"))
    assert shape is QueryShape.CYCLE


def test_star_hub_with_disjoint_leaves():
    shape, depth = classify_join_graph(
        vars_of("?x ?y ?z", "?x ?a", "?y ?b", "?z ?c")
    )
    assert shape is QueryShape.STAR
    assert depth == 2


def test_two_patterns_sharing_one_var_are_a_chain():
    shape, _ = classify_join_graph(vars_of("?a ?b", "?b ?c"))
    assert shape is QueryShape.CHAIN


def test_cycle_triangle():
    shape, depth = classify_join_graph(
        vars_of("?a ?b", "?b ?c", "?c ?a")
    )
    assert shape is QueryShape.CYCLE
    assert depth == 2


def test_disconnected_beats_cycle():
    shape, _ = classify_join_graph(
        vars_of("?a ?b", "?b ?c", "?c ?a", "?x ?y")
    )
    assert shape is QueryShape.DISCONNECTED


def test_tree_that_is_neither_chain_nor_star():
    # hub with two leaves plus one arm of length two
    shape, depth = classify_join_graph(
        vars_of("?x ?y ?z", "?x ?a", "?y ?b", "?z ?c", "?c ?d")
    )
    assert shape is QueryShape.TREE
    assert depth == 3


def test_shared_constants_do_not_join():
    text = (
        "SELECT * WHERE { ?a <http://e.org/p> <http://e.org/X> . "
        "?b <http://e.org/q> <http://e.org/X> }"
    )
    query = parse_query(text)
    assert isinstance(query, ParsedQuery)
    features = extract_features(query)
    assert features.shape is QueryShape.DISCONNECTED


def test_feature_fields_from_real_query():
    query = parse_query(
        "SELECT DISTINCT ?s (COUNT(?o) AS ?n) WHERE "
        "{ ?s ?p ?o . ?o ?q ?r } GROUP BY ?s"
    )
    assert isinstance(query, ParsedQuery)
    features = extract_features(query)
    assert features.pattern_count == 2
    assert features.shape is QueryShape.CHAIN
    assert features.depth == 1
    assert features.has_aggregate
    assert features.has_group_by
    assert features.distinct
    assert features.variable_count == 5


@given(st.integers(0, 10**9))
@settings(max_examples=300, deadline=None)
def test_classification_matches_exhaustive_oracle(seed):
    rng = random.Random(seed)
    text = random_bgp(rng)
    query = parse_query(text)
    assert isinstance(query, ParsedQuery), (text, query)
    pattern_vars = [p.variables() for p in query.triple_patterns]
    expected_shape, expected_depth = brute_shape_depth(pattern_vars)
    got_shape, got_depth = classify_join_graph(pattern_vars)
    assert (got_shape.value, got_depth) == (expected_shape, expected_depth), text


def test_join_edges_ignores_empty_variable_sets():
    assert join_edges([frozenset(), frozenset(), frozenset({"?x"})]) == []
