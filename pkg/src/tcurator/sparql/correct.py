"""Syntactic and semantic repair of almost-valid queries.

Syntax repair applies a fixed, ordered rule table, each rule at most once;
a candidate text is only accepted if it actually parses, so a misfiring
heuristic can never make things worse — the original text (with its parse
issues) is returned instead.

Semantic checking compares query terms against a reference vocabulary: a
set of IRIs whose namespaces the vocabulary is authoritative for.  Unknown
terms with a unique close-enough neighbour (Levenshtein over local names,
same namespace) are repaired; ambiguous ones are reported, never guessed.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

from ..model import (
    ParsedQuery,
    SyntaxIssue,
    Term,
    TermKind,
    TriplePattern,
)
from .parser import BUILTIN_PREFIXES, parse_query

# ---------------------------------------------------------------------------
# syntactic repair


REPAIR_KEYWORDS = (
    "SELECT", "CONSTRUCT", "DESCRIBE", "WHERE", "DISTINCT", "FILTER",
    "OPTIONAL", "UNION", "PREFIX", "LIMIT", "OFFSET", "ORDER", "GROUP",
    "HAVING",
)

RULE_ORDER = (
    "KeywordTypo",
    "BalanceBraces",
    "MissingDotBetweenPatterns",
    "StripTrailingSemicolon",
    "CloseUnterminatedIRI",
    "CloseUnterminatedString",
)


@dataclass(frozen=True)
class SyntaxRepair:
    """Outcome of correct_syntax: issues is empty iff ``text`` parses."""

    text: str
    applied_rules: tuple[str, ...]
    issues: tuple[SyntaxIssue, ...]


def levenshtein(a: str, b: str) -> int:
    """Plain edit distance; small inputs only (local names, keywords)."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        current = [i]
        for j, cb in enumerate(b, start=1):
            current.append(
                min(
                    previous[j] + 1,
                    current[j - 1] + 1,
                    previous[j - 1] + (ca != cb),
                )
            )
        previous = current
    return previous[-1]


def _mask_spans(text: str) -> list[tuple[int, int]]:
    """Spans of string literals and IRIs, where repairs must not look."""
    spans: list[tuple[int, int]] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch in "\"'":
            j = i + 1
            while j < n:
                if text[j] == "\\":
                    j += 2
                    continue
                if text[j] == ch or text[j] == "\n":
                    break
                j += 1
            spans.append((i, min(j + 1, n)))
            i = min(j + 1, n)
        elif ch == "<":
            j = i + 1
            while j < n and not text[j].isspace() and text[j] not in '<>"{}|':
                j += 1
            end = j + 1 if j < n and text[j] == ">" else j
            spans.append((i, end))
            i = end if end > i else i + 1
        else:
            i += 1
    return spans


def _masked(pos: int, spans: list[tuple[int, int]]) -> bool:
    return any(start <= pos < end for start, end in spans)


def _rule_keyword_typo(text: str) -> str:
    spans = _mask_spans(text)
    out: list[str] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if (ch.isalpha() or ch == "_") and not _masked(i, spans):
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            prev = text[i - 1] if i > 0 else " "
            follows = text[j] if j < n else " "
            if (
                len(word) >= 3
                and prev not in "?$:<\"'"
                and follows != ":"
                and word.upper() not in REPAIR_KEYWORDS
            ):
                hits = [
                    kw
                    for kw in REPAIR_KEYWORDS
                    if levenshtein(word.upper(), kw) == 1
                ]
                if len(hits) == 1:
                    out.append(hits[0])
                    i = j
                    continue
            out.append(word)
            i = j
        else:
            out.append(ch)
            i += 1
    return "".join(out)


def _rule_balance_braces(text: str) -> str:
    spans = _mask_spans(text)
    depth = 0
    for pos, ch in enumerate(text):
        if _masked(pos, spans):
            continue
        if ch == "{":
            depth += 1
        elif ch == "}":
            depth = max(depth - 1, 0)
    return text + "}" * depth if depth else text


def _rule_missing_dot(text: str) -> str:
    spans = _mask_spans(text)
    out: list[str] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch == "\n" and not _masked(i, spans):
            back = i - 1
            while back >= 0 and text[back] in " \t\r":
                back -= 1
            fwd = i + 1
            while fwd < n and text[fwd] in " \t":
                fwd += 1
            before = text[back] if back >= 0 else ""
            after = text[fwd] if fwd < n else ""
            ends_term = bool(before) and (
                before.isalnum() or before in '>"\'_'
            )
            starts_term = after in "?$<"
            if ends_term and starts_term and not _masked(back, spans):
                out.append(" .\n")
                i += 1
                continue
        out.append(ch)
        i += 1
    return "".join(out)


def _rule_trailing_semicolon(text: str) -> str:
    spans = _mask_spans(text)
    chars = list(text)
    i, n = 0, len(text)
    while i < n:
        if chars[i] == ";" and not _masked(i, spans):
            j = i + 1
            while j < n and text[j].isspace():
                j += 1
            if j >= n or text[j] == "}":
                chars[i] = " "
        i += 1
    return "".join(chars)


def _rule_close_iri(text: str) -> str:
    out: list[str] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch in "\"'":
            j = i + 1
            while j < n:
                if text[j] == "\\":
                    j += 2
                    continue
                if text[j] == ch or text[j] == "\n":
                    j += 1
                    break
                j += 1
            out.append(text[i:j])
            i = j
            continue
        if ch == "<":
            j = i + 1
            while j < n and not text[j].isspace() and text[j] not in '<>"{}|':
                j += 1
            if j < n and text[j] == ">":
                out.append(text[i : j + 1])
                i = j + 1
            elif j > i + 1:  # something IRI-like that never closed
                out.append(text[i:j] + ">")
                i = j
            else:
                out.append(ch)
                i += 1
            continue
        out.append(ch)
        i += 1
    return "".join(out)


def _rule_close_string(text: str) -> str:
    for quote in ('"', "'"):
        depth_open = False
        i, n = 0, len(text)
        other = "'" if quote == '"' else '"'
        in_other = False
        while i < n:
            ch = text[i]
            if ch == "\\":
                i += 2
                continue
            if ch == other and not depth_open:
                in_other = not in_other
            elif ch == quote and not in_other:
                depth_open = not depth_open
            i += 1
        if depth_open:
            return text + quote
    return text


_RULES = {
    "KeywordTypo": _rule_keyword_typo,
    "BalanceBraces": _rule_balance_braces,
    "MissingDotBetweenPatterns": _rule_missing_dot,
    "StripTrailingSemicolon": _rule_trailing_semicolon,
    "CloseUnterminatedIRI": _rule_close_iri,
    "CloseUnterminatedString": _rule_close_string,
}


def correct_syntax(text: str) -> SyntaxRepair:
    """Try the repair table; never degrade input that already parses."""
    first = parse_query(text)
    if not isinstance(first, list):
        return SyntaxRepair(text=text, applied_rules=(), issues=())
    current = text
    applied: list[str] = []
    for rule in RULE_ORDER:
        candidate = _RULES[rule](current)
        if candidate == current:
            continue
        applied.append(rule)
        current = candidate
        result = parse_query(current)
        if not isinstance(result, list):
            return SyntaxRepair(
                text=current, applied_rules=tuple(applied), issues=()
            )
    return SyntaxRepair(text=text, applied_rules=(), issues=tuple(first))


# ---------------------------------------------------------------------------
# semantic checking against a reference vocabulary


def namespace_of(iri: str) -> str:
    """Namespace part: up to and including the last '#' or '/'."""
    for sep in ("#", "/"):
        idx = iri.rfind(sep)
        if idx >= 0:
            return iri[: idx + 1]
    return iri


def local_of(iri: str) -> str:
    return iri[len(namespace_of(iri)):]


@dataclass(frozen=True)
class Vocabulary:
    """Reference term set; authoritative for the namespaces it contains."""

    iris: frozenset[str]
    prefix_table: dict[str, str]

    @property
    def namespaces(self) -> frozenset[str]:
        return frozenset(namespace_of(iri) for iri in self.iris)

    def by_namespace(self, namespace: str) -> list[str]:
        return sorted(i for i in self.iris if namespace_of(i) == namespace)


def load_vocabulary(
    path: str | Path, prefix_path: str | Path | None = None
) -> Vocabulary:
    """One absolute IRI per line; '#' starts a comment.

    The optional sidecar maps ``prefix<TAB>namespace-IRI`` per line.
    """
    iris: set[str] = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        iris.add(line.strip("<>"))
    prefixes: dict[str, str] = {}
    if prefix_path is not None:
        for line in Path(prefix_path).read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            prefix, _, ns = line.partition("\t")
            if ns:
                prefixes[prefix.strip()] = ns.strip().strip("<>")
    return Vocabulary(iris=frozenset(iris), prefix_table=prefixes)


@dataclass(frozen=True)
class SemanticIssue:
    kind: str  # UnknownPrefix | UnknownTerm | PredicateIsLiteral
    subject: str
    message: str = ""


@dataclass(frozen=True)
class SemanticRepair:
    original: str
    replacement: str | None
    status: str  # Repaired | Ambiguous | NoCandidate


def check_semantics(
    query: ParsedQuery, vocab: Vocabulary
) -> list[SemanticIssue]:
    issues: list[SemanticIssue] = []
    seen_prefixes: set[str] = set()
    seen_terms: set[str] = set()
    authoritative = vocab.namespaces
    for pattern in query.triple_patterns:
        if pattern.predicate.kind is TermKind.LITERAL:
            issues.append(
                SemanticIssue(
                    kind="PredicateIsLiteral",
                    subject=pattern.predicate.text,
                    message="a literal cannot be a predicate",
                )
            )
        for term in pattern.terms():
            if term.kind is not TermKind.IRI:
                continue
            if term.iri is None:
                if term.prefix is not None and term.prefix not in seen_prefixes:
                    seen_prefixes.add(term.prefix)
                    issues.append(
                        SemanticIssue(
                            kind="UnknownPrefix",
                            subject=term.prefix,
                            message=f"prefix {term.prefix!r} is not declared",
                        )
                    )
                continue
            ns = namespace_of(term.iri)
            if ns in authoritative and term.iri not in vocab.iris:
                if term.text not in seen_terms:
                    seen_terms.add(term.text)
                    issues.append(
                        SemanticIssue(
                            kind="UnknownTerm",
                            subject=term.text,
                            message=f"{term.iri} is not in the vocabulary",
                        )
                    )
    return issues


def _replacement_term(term: Term, new_iri: str) -> Term:
    if term.prefix is not None:
        return Term(
            kind=TermKind.IRI,
            text=f"{term.prefix}:{local_of(new_iri)}",
            iri=new_iri,
            prefix=term.prefix,
            local=local_of(new_iri),
        )
    return Term(kind=TermKind.IRI, text=f"<{new_iri}>", iri=new_iri)


def correct_semantics(
    query: ParsedQuery, vocab: Vocabulary, max_distance: int = 2
) -> tuple[ParsedQuery, list[SemanticRepair]]:
    """Repair unknown terms with a unique close vocabulary neighbour.

    Uniqueness is over *all* candidates within ``max_distance`` — two equally
    close candidates make the term Ambiguous and it is left untouched.
    """
    authoritative = vocab.namespaces
    decisions: dict[str, tuple[str | None, str]] = {}
    repairs: list[SemanticRepair] = []

    def decide(term: Term) -> tuple[str | None, str] | None:
        if term.kind is not TermKind.IRI or term.iri is None:
            return None
        ns = namespace_of(term.iri)
        if ns not in authoritative or term.iri in vocab.iris:
            return None
        if term.iri in decisions:
            return decisions[term.iri]
        local = local_of(term.iri)
        candidates = [
            iri
            for iri in vocab.by_namespace(ns)
            if levenshtein(local, local_of(iri)) <= max_distance
        ]
        if len(candidates) == 1:
            verdict: tuple[str | None, str] = (candidates[0], "Repaired")
        elif candidates:
            verdict = (None, "Ambiguous")
        else:
            verdict = (None, "NoCandidate")
        decisions[term.iri] = verdict
        repairs.append(
            SemanticRepair(
                original=term.text,
                replacement=verdict[0],
                status=verdict[1],
            )
        )
        return verdict

    new_patterns: list[TriplePattern] = []
    changed = False
    for pattern in query.triple_patterns:
        terms = []
        for term in pattern.terms():
            verdict = decide(term)
            if verdict is not None and verdict[0] is not None:
                terms.append(_replacement_term(term, verdict[0]))
                changed = True
            else:
                terms.append(term)
        new_patterns.append(
            TriplePattern(subject=terms[0], predicate=terms[1], object=terms[2])
        )
    if not changed:
        return query, repairs
    return replace(query, triple_patterns=tuple(new_patterns)), repairs
