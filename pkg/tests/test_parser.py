from __future__ import annotations

import pytest

from tcurator.model import ParsedQuery, QueryForm, TermKind
from tcurator.sparql import parse_query
from tcurator.sparql.parser import BUILTIN_PREFIXES


def parsed(text: str) -> ParsedQuery:
    query = parse_query(text)
    assert isinstance(query, ParsedQuery), query
    return query


def failed(text: str):
    issues = parse_query(text)
    assert isinstance(issues, list) and issues, issues
    return issues


def test_select_with_projection_and_bgp():
    query = parsed(
        "SELECT ?name ?mbox WHERE { ?x <http://xmlns.com/foaf/0.1/name> ?name ."
        " ?x <http://xmlns.com/foaf/0.1/mbox> ?mbox }"
    )
    assert query.form is QueryForm.SELECT
    assert len(query.triple_patterns) == 2
    assert query.projection == ("?name", "?mbox")
    assert query.variables() == {"?x", "?name", "?mbox"}


def test_distinct_and_solution_modifiers():
    query = parsed(
        "SELECT DISTINCT ?s WHERE { ?s ?p ?o } ORDER BY ?s LIMIT 10 OFFSET 5"
    )
    assert query.distinct
    assert query.limit == 10
    assert query.offset == 5


def test_prefix_declaration_expands_terms():
    query = parsed(
        "PREFIX ex: <http://example.org/> SELECT ?s WHERE { ?s ex:knows ?o }"
    )
    predicate = query.triple_patterns[0].predicate
    assert predicate.kind is TermKind.IRI
    assert predicate.iri == "http://example.org/knows"
    assert predicate.text == "ex:knows"


def test_builtin_prefixes_resolve_without_declaration():
    query = parsed("SELECT ?s WHERE { ?s foaf:name ?o }")
    assert (
        query.triple_patterns[0].predicate.iri
        == "http://xmlns.com/foaf/0.1/name"
    )
    assert "bibo" not in BUILTIN_PREFIXES


def test_unknown_prefix_stays_unresolved_but_parses():
    query = parsed("SELECT ?s WHERE { ?s bibo:authorList ?o }")
    predicate = query.triple_patterns[0].predicate
    assert predicate.iri is None
    assert predicate.prefix == "bibo"


def test_a_keyword_is_rdf_type():
    query = parsed("SELECT ?s WHERE { ?s a <http://example.org/Paper> }")
    assert (
        query.triple_patterns[0].predicate.iri
        == "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"
    )


def test_semicolon_and_comma_lists_expand():
    query = parsed(
        "SELECT * WHERE { ?s <http://e.org/p> ?a, ?b ; <http://e.org/q> ?c }"
    )
    assert len(query.triple_patterns) == 3
    subjects = {p.subject.text for p in query.triple_patterns}
    assert subjects == {"?s"}


def test_construct_template_is_separate_from_where():
    query = parsed(
        "CONSTRUCT { ?s <http://e.org/p> ?o } WHERE { ?s <http://e.org/q> ?o }"
    )
    assert query.form is QueryForm.CONSTRUCT
    assert len(query.construct_template) == 1
    assert len(query.triple_patterns) == 1


def test_ask_and_describe_forms():
    assert parsed("ASK { ?s ?p ?o }").form is QueryForm.ASK
    assert parsed("DESCRIBE <http://example.org/x>").form is QueryForm.DESCRIBE


def test_optional_and_union_groups_are_flattened():
    query = parsed(
        "SELECT * WHERE { ?s ?p ?o OPTIONAL { ?s ?q ?r } "
        "{ ?a ?b ?c } UNION { ?d ?e ?f } }"
    )
    assert len(query.triple_patterns) == 4
    names = {m.value for m in query.modifiers}
    assert {"Optional", "Union"} <= names


def test_filter_is_kept_opaque():
    query = parsed('SELECT * WHERE { ?s ?p ?d FILTER(?d < "2020") }')
    assert len(query.filters) == 1
    assert "2020" in query.filters[0]


def test_aggregates_and_group_by():
    query = parsed(
        "SELECT ?s (COUNT(?o) AS ?n) WHERE { ?s ?p ?o } "
        "GROUP BY ?s HAVING (COUNT(?o) > 2)"
    )
    assert query.group_by
    assert "COUNT" in query.aggregates
    assert query.having is not None


def test_blank_nodes_become_variable_like_terms():
    query = parsed("SELECT * WHERE { _:a <http://e.org/p> ?o }")
    subject = query.triple_patterns[0].subject
    assert subject.kind is TermKind.VARIABLE
    assert subject.text.startswith("?_:")


def test_property_path_sets_complex_flag_and_keeps_query():
    query = parsed("SELECT * WHERE { ?s <http://e.org/p>+ ?o . ?s ?p ?x }")
    assert query.complex_unsupported
    # the path triple is dropped from the analyzable set, the plain one stays
    assert len(query.triple_patterns) == 1


def test_subquery_and_values_set_complex_flag():
    outer = parsed(
        "SELECT * WHERE { { SELECT ?s WHERE { ?s ?p ?o } } ?s ?q ?r }"
    )
    assert outer.complex_unsupported
    values = parsed('SELECT * WHERE { VALUES ?s { <http://e.org/a> } ?s ?p ?o }')
    assert values.complex_unsupported


def test_malformed_inputs_return_positioned_issues():
    issues = failed("SELECT ?s WHERE { ?s ?p }")
    assert all(hasattr(issue, "position") for issue in issues)
    failed("SELECT ?s WHERE { ?s ?p ?o ")
    failed('SELECT ?s WHERE { ?s ?p "unterminated }')
    failed("SELECT ?s WHERE { ?s ?p <http://no-close }")
    failed("FOO ?s WHERE { ?s ?p ?o }")


def test_comparison_in_filter_is_not_an_iri():
    query = parsed('SELECT * WHERE { ?s ?p ?d FILTER(?d<"2020") }')
    assert len(query.filters) == 1


def test_comments_are_ignored():
    query = parsed(
        "# fetch names\nSELECT ?name WHERE { ?x foaf:name ?name } # tail"
    )
    assert query.projection == ("?name",)


@pytest.mark.parametrize(
    "literal",
    ['"plain"', '"tagged"@en', '"typed"^^<http://www.w3.org/2001/XMLSchema#int>', "42", "4.5", "true"],
)
def test_literal_forms(literal):
    query = parsed(f"SELECT * WHERE {{ ?s <http://e.org/p> {literal} }}")
    assert query.triple_patterns[0].object.kind is TermKind.LITERAL
