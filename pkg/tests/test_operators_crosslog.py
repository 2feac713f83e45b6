from __future__ import annotations

import random
from datetime import datetime, timedelta, timezone

import pytest

from tcurator.model import DegreeKind, QueryLog
from tcurator.operators import (
    InvalidParameter,
    adopt_candidates,
    enrich_log,
    join_logs,
    query_similarity,
)

from conftest import make_query
from oracles import brute_jaccard

T0 = datetime(2023, 6, 15, 9, 0, tzinfo=timezone.utc)


def log_of(log_id: str, *texts: str) -> QueryLog:
    queries = [
        make_query(
            text,
            source_log=log_id,
            line_no=i + 1,
            at=T0 + timedelta(seconds=i),
        )
        for i, text in enumerate(texts)
    ]
    return QueryLog(id=log_id, source_dataset=log_id, entries=tuple(queries))


AUTHOR_ALICE = (
    "PREFIX dbo: <http://dbpedia.org/ontology/> SELECT ?p WHERE "
    "{ ?p dbo:author <http://dbpedia.org/resource/Alice> }"
)
AUTHOR_ALICE_TSV = (
    "PREFIX dbo: <http://dbpedia.org/ontology/> SELECT ?x WHERE "
    "{ ?x dbo:author <http://dbpedia.org/resource/Alice> }"
)
BIRTHPLACE_BERLIN = (
    "PREFIX dbo: <http://dbpedia.org/ontology/> SELECT ?c WHERE "
    "{ ?c dbo:birthPlace <http://dbpedia.org/resource/Berlin> }"
)
NO_CONSTANTS = "SELECT ?s WHERE { ?s ?p ?o }"


def test_query_similarity_is_constant_jaccard():
    a = make_query(AUTHOR_ALICE).parsed
    b = make_query(AUTHOR_ALICE_TSV, line_no=2).parsed
    assert query_similarity(a, b) == 1.0
    c = make_query(BIRTHPLACE_BERLIN, line_no=3).parsed
    # shares only the dbo:author/birthPlace constants' overlap: none
    assert query_similarity(a, c) == 0.0


def test_both_empty_term_sets_share_nothing():
    a = make_query(NO_CONSTANTS).parsed
    b = make_query(NO_CONSTANTS, line_no=2).parsed
    assert query_similarity(a, b) == 0.0


def test_similarity_matches_set_oracle():
    rng = random.Random(2023)
    pool = [f"<http://e.org/t{i}>" for i in range(8)]
    for _ in range(200):
        left_terms = rng.sample(pool, rng.randint(1, 5))
        right_terms = rng.sample(pool, rng.randint(1, 5))
        a = make_query(
            "SELECT * WHERE { "
            + " . ".join(f"?s{i} <http://e.org/p> {t}" for i, t in enumerate(left_terms))
            + " }"
        ).parsed
        b = make_query(
            "SELECT * WHERE { "
            + " . ".join(f"?o{i} <http://e.org/p> {t}" for i, t in enumerate(right_terms))
            + " }",
            line_no=2,
        ).parsed
        expected = brute_jaccard(
            set(t.strip("<>") for t in left_terms) | {"http://e.org/p"},
            set(t.strip("<>") for t in right_terms) | {"http://e.org/p"},
        )
        assert query_similarity(a, b) == pytest.approx(expected)


def test_join_is_greedy_and_one_to_one():
    left = log_of("left", AUTHOR_ALICE, AUTHOR_ALICE_TSV)
    right = log_of("right", AUTHOR_ALICE, BIRTHPLACE_BERLIN)
    pairs = join_logs(left, right, threshold=0.5)
    assert len(pairs) == 1  # one right-side twin, two left candidates
    assert pairs[0].similarity == 1.0
    # both left queries tie at 1.0; the lexicographically first id wins
    assert pairs[0].left_id == min(left.entries[0].id, left.entries[1].id)
    left_ids = {p.left_id for p in pairs}
    right_ids = {p.right_id for p in pairs}
    assert len(left_ids) == len(pairs) and len(right_ids) == len(pairs)


def test_join_threshold_is_validated():
    left = log_of("left", AUTHOR_ALICE)
    right = log_of("right", AUTHOR_ALICE)
    with pytest.raises(InvalidParameter):
        join_logs(left, right, threshold=-0.1)
    with pytest.raises(InvalidParameter):
        join_logs(left, right, threshold=1.01)


def test_join_below_threshold_yields_nothing():
    left = log_of("left", AUTHOR_ALICE)
    right = log_of("right", BIRTHPLACE_BERLIN)
    assert join_logs(left, right, threshold=0.5) == []


def test_adoption_rehomes_and_annotates():
    target = log_of("target", AUTHOR_ALICE)
    donor = log_of("donor", AUTHOR_ALICE_TSV, BIRTHPLACE_BERLIN)
    adopted, rejected = adopt_candidates(target, [donor], threshold=0.9)
    assert [q.text for q in adopted] == [AUTHOR_ALICE_TSV]
    assert [q.text for q in rejected] == [BIRTHPLACE_BERLIN]
    moved = adopted[0]
    assert moved.source_log == "target"
    assert moved.id == donor.entries[0].id  # identity survives the move
    kinds = [(a.kind, a.value) for a in moved.annotations[-2:]]
    assert kinds == [
        (DegreeKind.BOOLEAN, 1),
        (DegreeKind.CATEGORICAL, "Enriched:donor"),
    ]
    last = rejected[0].annotations[-1]
    assert (last.kind, last.value) == (DegreeKind.BOOLEAN, 0)


def test_adoption_threshold_zero_takes_every_parsed_donor():
    target = log_of("target", AUTHOR_ALICE)
    donor = log_of("donor", BIRTHPLACE_BERLIN, "SELECT ?s WHERE {")
    adopted, rejected = adopt_candidates(target, [donor], threshold=0.0)
    assert [q.text for q in adopted] == [BIRTHPLACE_BERLIN]
    assert len(rejected) == 1  # the unparsed donor has nothing to compare


def test_enrich_log_merges_in_order():
    target = log_of("target", AUTHOR_ALICE)
    donor = log_of("donor", AUTHOR_ALICE_TSV)
    merged, adopted_count = enrich_log(target, [donor], threshold=0.9)
    assert adopted_count == 1
    assert merged.id == "target"
    assert [q.text for q in merged.entries] == [AUTHOR_ALICE, AUTHOR_ALICE_TSV]
    assert all(q.source_log == "target" for q in merged.entries)
