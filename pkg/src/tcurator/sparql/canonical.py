"""Canonical text form: the deduplication key for parsed queries.

The canonical form is built by (a) ordering triple patterns on
(predicate, subject, object) with IRIs expanded, (b) renaming variables to
``?v0, ?v1, …`` in first-occurrence order over that ordering, (c) collapsing
whitespace and (d) upper-casing keywords.  A naive sort is not stable under
variable renaming when patterns tie on the constant positions, so variables
are first distinguished by iterative color refinement (their occurrence
signature across ranked patterns); the final order is then invariant under
any bijective renaming and any permutation of the input patterns.

The rendered text is valid query text for this parser: parsing it and
rendering again yields the same string (fixpoint), which the property tests
pin down.  OPTIONAL/UNION grouping is erased (patterns are flattened), so
the key is deliberately coarser than full structural equality.
"""
from __future__ import annotations

import re

from ..model import ParsedQuery, QueryForm, Term, TermKind, TriplePattern
from .parser import BUILTIN_PREFIXES

_VAR_RE = re.compile(r"[?$][A-Za-z0-9_]+")
_AGG_UP_RE = re.compile(r"\b(count|sum|avg|min|max)\s*\(", re.IGNORECASE)
_AS_UP_RE = re.compile(r"\bas\s+(?=[?$])", re.IGNORECASE)
_DISTINCT_UP_RE = re.compile(r"\(\s*distinct\b", re.IGNORECASE)

_SortKey = tuple[tuple[str, str], tuple[str, str], tuple[str, str]]


def _term_sort_part(term: Term, colors: dict[str, int]) -> tuple[str, str]:
    if term.kind is TermKind.VARIABLE:
        return ("v", format(colors.get(term.text, 0), "08d"))
    if term.kind is TermKind.IRI:
        return ("i", term.iri if term.iri is not None else term.text)
    return ("l", term.text)


def _pattern_key(pat: TriplePattern, colors: dict[str, int]) -> _SortKey:
    return (
        _term_sort_part(pat.predicate, colors),
        _term_sort_part(pat.subject, colors),
        _term_sort_part(pat.object, colors),
    )


def _refine_colors(patterns: list[TriplePattern]) -> dict[str, int]:
    """Walk color refinement to a fixpoint over the variables."""
    variables = sorted({v for p in patterns for v in p.variables()})
    colors = {v: 0 for v in variables}
    for _ in range(len(variables) + 2):
        keys = [_pattern_key(p, colors) for p in patterns]
        rank = {key: r for r, key in enumerate(sorted(set(keys)))}
        occurrence: dict[str, list[tuple[int, int]]] = {v: [] for v in variables}
        for idx, pat in enumerate(patterns):
            for pos, term in enumerate(pat.terms()):
                if term.kind is TermKind.VARIABLE:
                    occurrence[term.text].append((rank[keys[idx]], pos))
        signature = {
            v: (colors[v], tuple(sorted(occurrence[v]))) for v in variables
        }
        order = {sig: i for i, sig in enumerate(sorted(set(signature.values())))}
        new_colors = {v: order[signature[v]] for v in variables}
        if new_colors == colors:
            break
        colors = new_colors
    return colors


class _Renamer:
    def __init__(self) -> None:
        self.mapping: dict[str, str] = {}

    def name(self, var: str) -> str:
        if var not in self.mapping:
            self.mapping[var] = f"?v{len(self.mapping)}"
        return self.mapping[var]

    def sub_text(self, text: str) -> str:
        def repl(match: re.Match[str]) -> str:
            token = match.group(0)
            return self.name("?" + token[1:])

        return _VAR_RE.sub(repl, text)


def _render_term(term: Term, renamer: _Renamer) -> str:
    if term.kind is TermKind.VARIABLE:
        return renamer.name(term.text)
    if term.kind is TermKind.IRI:
        return f"<{term.iri}>" if term.iri is not None else term.text
    return term.text


def _wildcard_key(text: str) -> str:
    return _VAR_RE.sub("?", text)


def _normalize_item(text: str) -> str:
    text = _AGG_UP_RE.sub(lambda m: m.group(1).upper() + "(", text)
    text = _AS_UP_RE.sub("AS ", text)
    text = _DISTINCT_UP_RE.sub("(DISTINCT", text)
    return text


def _render_block(
    patterns: list[TriplePattern], renamer: _Renamer
) -> list[str]:
    return [
        " ".join(
            (
                _render_term(p.subject, renamer),
                _render_term(p.predicate, renamer),
                _render_term(p.object, renamer),
            )
        )
        for p in patterns
    ]


def canonicalize(query: ParsedQuery) -> str:
    """Deterministic canonical text; equal iff queries are duplicates."""
    where = list(query.triple_patterns)
    template = list(query.construct_template)
    colors = _refine_colors(where + template)
    where.sort(key=lambda p: _pattern_key(p, colors))
    template.sort(key=lambda p: _pattern_key(p, colors))

    renamer = _Renamer()
    # fix the naming order before any text is assembled: WHERE block first,
    # then the CONSTRUCT template, then loose variables in the tail clauses
    where_texts = _render_block(where, renamer)
    template_texts = _render_block(template, renamer)

    head: str
    if query.form is QueryForm.SELECT:
        items = []
        for item in query.projection:
            if item == "*":
                items.append("*")
            else:
                items.append(renamer.sub_text(_normalize_item(item)))
        head = "SELECT"
        if query.distinct:
            head += " DISTINCT"
        head += " " + " ".join(items) if items else " *"
    elif query.form is QueryForm.CONSTRUCT:
        head = "CONSTRUCT { " + " . ".join(template_texts) + " }"
    elif query.form is QueryForm.ASK:
        head = "ASK"
    else:
        rendered = []
        for item in query.projection:
            if item == "*" or item.startswith("<"):
                rendered.append(item)
            elif item.startswith(("?", "$")):
                rendered.append(renamer.name("?" + item[1:]))
            else:
                prefix, _, local = item.partition(":")
                namespace = dict(query.prefixes).get(
                    prefix, BUILTIN_PREFIXES.get(prefix)
                )
                rendered.append(
                    f"<{namespace}{local}>" if namespace is not None else item
                )
        head = "DESCRIBE " + " ".join(rendered)

    body_parts = list(where_texts)
    filters = sorted(query.filters, key=_wildcard_key)
    filter_texts = []
    for expr in filters:
        renamed = renamer.sub_text(expr)
        filter_texts.append(
            "FILTER" + (renamed if renamed.startswith("(") else " " + renamed)
        )

    where_clause = ""
    if body_parts or filter_texts or query.form in (
        QueryForm.SELECT,
        QueryForm.CONSTRUCT,
        QueryForm.ASK,
    ):
        inner = " . ".join(body_parts)
        if filter_texts:
            inner = (inner + " " if inner else "") + " ".join(filter_texts)
        where_clause = " WHERE { " + inner + " }" if inner else " WHERE { }"

    tail = ""
    if query.group_by_terms:
        terms = [
            renamer.sub_text(_normalize_item(t)) for t in query.group_by_terms
        ]
        tail += " GROUP BY " + " ".join(terms)
    if query.having is not None:
        expr = renamer.sub_text(_normalize_item(query.having))
        tail += " HAVING" + (expr if expr.startswith("(") else " " + expr)
    if query.order_by_text is not None:
        tail += " ORDER BY " + renamer.sub_text(query.order_by_text)
    if query.limit is not None:
        tail += f" LIMIT {query.limit}"
    if query.offset is not None:
        tail += f" OFFSET {query.offset}"

    return head + where_clause + tail
