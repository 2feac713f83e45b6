"""Tolerant parser for the SPARQL subset seen in public endpoint logs.

Covers SELECT / CONSTRUCT / ASK / DESCRIBE with basic graph patterns,
FILTER (kept opaque), OPTIONAL / UNION / GRAPH (patterns flattened into one
set for shape analysis), GROUP BY, the five standard aggregates, DISTINCT
and LIMIT / OFFSET / ORDER BY.  Property paths, subqueries, VALUES and
SERVICE are consumed opaquely and mark the query ``complex_unsupported``;
such queries are kept, not dropped.

The parser reports failures as positioned :class:`SyntaxIssue` values
instead of raising, because the syntactic corrector needs to parse *broken*
text and point at the offending spot.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from ..model import (
    Modifier,
    ParsedQuery,
    QueryForm,
    SyntaxIssue,
    Term,
    TermKind,
    TriplePattern,
)

RDF_TYPE = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"

# Prefixes resolvable without a declaration. Deliberately small: anything
# else must be declared in the query or it is reported by check_semantics.
BUILTIN_PREFIXES: dict[str, str] = {
    "rdf": "http://www.w3.org/1999/02/22-rdf-syntax-ns#",
    "rdfs": "http://www.w3.org/2000/01/rdf-schema#",
    "owl": "http://www.w3.org/2002/07/owl#",
    "xsd": "http://www.w3.org/2001/XMLSchema#",
    "foaf": "http://xmlns.com/foaf/0.1/",
    "dc": "http://purl.org/dc/elements/1.1/",
    "dcterms": "http://purl.org/dc/terms/",
    "skos": "http://www.w3.org/2004/02/skos/core#",
}

KEYWORDS = frozenset(
    {
        "SELECT", "CONSTRUCT", "ASK", "DESCRIBE", "WHERE", "DISTINCT",
        "REDUCED", "FILTER", "OPTIONAL", "UNION", "GRAPH", "SERVICE",
        "MINUS", "BIND", "VALUES", "GROUP", "HAVING", "ORDER", "BY",
        "LIMIT", "OFFSET", "PREFIX", "BASE", "AS", "ASC", "DESC",
        "COUNT", "SUM", "AVG", "MIN", "MAX", "EXISTS", "NOT", "SILENT",
    }
)

AGGREGATES = ("COUNT", "SUM", "AVG", "MIN", "MAX")
_AGG_RE = re.compile(r"\b(COUNT|SUM|AVG|MIN|MAX)\s*\(", re.IGNORECASE)
_NUMBER_RE = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_PATH_PUNCT = frozenset("/|^")

_IRI_STOP = frozenset('<>"{}|^`\\')


def normalize_ws(text: str) -> str:
    return " ".join(text.split())


class _ParseFail(Exception):
    def __init__(self, rule: str, position: int, message: str) -> None:
        super().__init__(message)
        self.issue = SyntaxIssue(rule=rule, position=position, message=message)


@dataclass(frozen=True)
class _Token:
    kind: str  # iri | pname | var | string | number | word | punct | eof
    text: str
    pos: int


def _scan_string(text: str, i: int) -> int:
    """Return the index one past a string literal starting at ``i``."""
    quote = text[i]
    n = len(text)
    if text[i : i + 3] == quote * 3:
        j = i + 3
        while j < n:
            if text[j] == "\\":
                j += 2
                continue
            if text[j : j + 3] == quote * 3:
                return j + 3
            j += 1
        raise _ParseFail("UnterminatedString", i, "long string never closed")
    j = i + 1
    while j < n:
        ch = text[j]
        if ch == "\\":
            j += 2
            continue
        if ch == quote:
            return j + 1
        if ch == "\n":
            break
        j += 1
    raise _ParseFail(
        "UnterminatedString", i, f"string opened with {quote} never closed"
    )


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch in " \t\r\n":
            i += 1
            continue
        if ch == "#":
            nl = text.find("\n", i)
            i = n if nl < 0 else nl + 1
            continue
        if ch == "<":
            nxt = text[i + 1] if i + 1 < n else ""
            if nxt == "" or nxt.isspace() or nxt in "=<":
                # comparison operator, not an IRI opener
                tokens.append(_Token("punct", "<", i))
                i += 1
                continue
            j = i + 1
            while j < n and text[j] not in _IRI_STOP and not text[j].isspace():
                j += 1
            if j < n and text[j] == ">":
                tokens.append(_Token("iri", text[i : j + 1], i))
                i = j + 1
                continue
            if j == i + 1:  # '<' directly against a stop char: operator
                tokens.append(_Token("punct", "<", i))
                i += 1
                continue
            raise _ParseFail(
                "UnterminatedIri", i, "IRI opened with '<' never closed"
            )
        if ch in "?$":
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            if j == i + 1:
                tokens.append(_Token("punct", "?", i))
                i += 1
                continue
            tokens.append(_Token("var", "?" + text[i + 1 : j], i))
            i = j
            continue
        if ch in "\"'":
            end = _scan_string(text, i)
            # optional @lang or ^^datatype suffix belongs to the literal
            j = end
            if j < n and text[j] == "@":
                j += 1
                while j < n and (text[j].isalnum() or text[j] == "-"):
                    j += 1
                end = j
            elif text[j : j + 2] == "^^":
                j += 2
                if j < n and text[j] == "<":
                    k = j + 1
                    while k < n and text[k] not in _IRI_STOP and not text[k].isspace():
                        k += 1
                    if k >= n or text[k] != ">":
                        raise _ParseFail(
                            "UnterminatedIri", j, "datatype IRI never closed"
                        )
                    end = k + 1
                else:
                    k = j
                    while k < n and (text[k].isalnum() or text[k] in "_-.:"):
                        k += 1
                    end = k
            tokens.append(_Token("string", text[i:end], i))
            i = end
            continue
        if ch.isdigit() or (
            ch in "+-." and i + 1 < n and text[i + 1].isdigit()
        ):
            m = _NUMBER_RE.match(text, i)
            assert m is not None
            num = m.group(0)
            if num.endswith("."):
                num = num[:-1]  # "5." is the integer 5 plus a separator dot
            tokens.append(_Token("number", num, i))
            i += len(num)
            continue
        if ch.isalpha() or ch == "_":
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] in "_-"):
                j += 1
            if j < n and text[j] == ":":
                k = j + 1
                while k < n and (text[k].isalnum() or text[k] in "_-.%"):
                    k += 1
                while k > j + 1 and text[k - 1] == ".":
                    k -= 1  # trailing dot is a separator, not local-name
                tokens.append(_Token("pname", text[i:k], i))
                i = k
                continue
            tokens.append(_Token("word", text[i:j], i))
            i = j
            continue
        if ch == ":":
            k = i + 1
            while k < n and (text[k].isalnum() or text[k] in "_-.%"):
                k += 1
            while k > i + 1 and text[k - 1] == ".":
                k -= 1
            tokens.append(_Token("pname", text[i:k], i))
            i = k
            continue
        tokens.append(_Token("punct", ch, i))
        i += 1
    tokens.append(_Token("eof", "", n))
    return tokens


class _ComplexTriple(Exception):
    """Internal: a property path was detected; drop the triple, keep going."""


class _Parser:
    def __init__(self, text: str) -> None:
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.prefixes: dict[str, str] = {}
        self.base: str | None = None
        self.patterns: list[TriplePattern] = []
        self.filters: list[str] = []
        self.modifiers: set[Modifier] = set()
        self.complex = False
        self._anon = 0

    # -- token plumbing ---------------------------------------------------

    def peek(self, ahead: int = 0) -> _Token:
        return self.tokens[min(self.i + ahead, len(self.tokens) - 1)]

    def advance(self) -> _Token:
        tok = self.tokens[self.i]
        if tok.kind != "eof":
            self.i += 1
        return tok

    def at_word(self, *words: str) -> bool:
        tok = self.peek()
        return tok.kind == "word" and tok.text.upper() in words

    def at_punct(self, ch: str) -> bool:
        tok = self.peek()
        return tok.kind == "punct" and tok.text == ch

    def expect_punct(self, ch: str, rule: str = "UnexpectedToken") -> _Token:
        tok = self.peek()
        if not self.at_punct(ch):
            raise _ParseFail(
                rule, tok.pos, f"expected {ch!r}, found {tok.text or 'end of input'!r}"
            )
        return self.advance()

    def fail(self, rule: str = "UnexpectedToken", message: str | None = None) -> _ParseFail:
        tok = self.peek()
        return _ParseFail(
            rule,
            tok.pos,
            message or f"unexpected {tok.text or 'end of input'!r}",
        )

    def fresh_anon(self) -> Term:
        self._anon += 1
        return Term(kind=TermKind.VARIABLE, text=f"?_:a{self._anon}")

    # -- balanced skips (raw-text capture) --------------------------------

    def capture_balanced(self, open_ch: str, close_ch: str) -> str:
        start = self.expect_punct(open_ch).pos
        depth = 1
        while depth:
            tok = self.advance()
            if tok.kind == "eof":
                rule = "UnterminatedGroup" if open_ch == "{" else "UnexpectedToken"
                raise _ParseFail(rule, start, f"{open_ch!r} never closed")
            if tok.kind == "punct" and tok.text == open_ch:
                depth += 1
            elif tok.kind == "punct" and tok.text == close_ch:
                depth -= 1
                if depth == 0:
                    return self.text[start : tok.pos + 1]
        raise AssertionError("unreachable")

    # -- grammar ----------------------------------------------------------

    def parse(self) -> ParsedQuery:
        self._prologue()
        tok = self.peek()
        if tok.kind != "word":
            raise _ParseFail(
                "MissingForm", tok.pos, "expected a query form keyword"
            )
        form_word = tok.text.upper()
        if form_word == "SELECT":
            return self._select()
        if form_word == "CONSTRUCT":
            return self._construct()
        if form_word == "ASK":
            return self._ask()
        if form_word == "DESCRIBE":
            return self._describe()
        raise _ParseFail(
            "MissingForm", tok.pos, f"unknown query form {tok.text!r}"
        )

    def _prologue(self) -> None:
        while True:
            if self.at_word("PREFIX"):
                self.advance()
                tok = self.peek()
                if tok.kind != "pname":
                    raise self.fail(message="expected a prefix declaration")
                self.advance()
                prefix, _, local = tok.text.partition(":")
                if local:
                    raise _ParseFail(
                        "UnexpectedToken", tok.pos, "prefix declaration has a local part"
                    )
                iri_tok = self.peek()
                if iri_tok.kind != "iri":
                    raise self.fail(message="expected the prefix namespace IRI")
                self.advance()
                self.prefixes[prefix] = iri_tok.text[1:-1]
            elif self.at_word("BASE"):
                self.advance()
                iri_tok = self.peek()
                if iri_tok.kind != "iri":
                    raise self.fail(message="expected the base IRI")
                self.advance()
                self.base = iri_tok.text[1:-1]
            else:
                return

    def _select(self) -> ParsedQuery:
        self.advance()  # SELECT
        distinct = False
        if self.at_word("DISTINCT"):
            distinct = True
            self.advance()
        elif self.at_word("REDUCED"):
            self.advance()
        projection: list[str] = []
        while True:
            tok = self.peek()
            if tok.kind == "var":
                projection.append(tok.text)
                self.advance()
            elif self.at_punct("*"):
                projection.append("*")
                self.advance()
            elif self.at_punct("("):
                projection.append(normalize_ws(self.capture_balanced("(", ")")))
            else:
                break
        if not projection:
            raise self.fail(message="SELECT needs a projection")
        self._where_group()
        return self._finish(
            QueryForm.SELECT, distinct=distinct, projection=tuple(projection)
        )

    def _construct(self) -> ParsedQuery:
        self.advance()
        template: list[TriplePattern] = []
        shorthand = False
        if self.at_punct("{"):
            self.advance()
            template = self._triples_only_block()
        else:
            shorthand = True
        self._where_group()
        if shorthand:
            template = list(self.patterns)
        return self._finish(
            QueryForm.CONSTRUCT, distinct=False, template=tuple(template)
        )

    def _ask(self) -> ParsedQuery:
        self.advance()
        self._where_group()
        return self._finish(QueryForm.ASK, distinct=False)

    def _describe(self) -> ParsedQuery:
        self.advance()
        described: list[str] = []
        while True:
            tok = self.peek()
            if tok.kind in ("iri", "pname", "var"):
                described.append(tok.text)
                self.advance()
            elif self.at_punct("*"):
                described.append("*")
                self.advance()
            else:
                break
        if not described:
            raise self.fail(message="DESCRIBE needs a term or *")
        if self.at_word("WHERE") or self.at_punct("{"):
            self._where_group()
        return self._finish(
            QueryForm.DESCRIBE, distinct=False, projection=tuple(described)
        )

    def _where_group(self) -> None:
        if self.at_word("WHERE"):
            self.advance()
        self.expect_punct("{", rule="MissingGroup")
        self._group_body()

    def _group_body(self) -> None:
        """Parse until the matching '}' — patterns flatten into self.patterns."""
        while True:
            tok = self.peek()
            if tok.kind == "eof":
                raise _ParseFail(
                    "UnterminatedGroup", tok.pos, "'{' never closed"
                )
            if self.at_punct("}"):
                self.advance()
                return
            if self.at_punct("."):
                self.advance()
                continue
            if self.at_punct("{"):
                nxt = self.peek(1)
                if nxt.kind == "word" and nxt.text.upper() == "SELECT":
                    self.capture_balanced("{", "}")  # subquery: opaque
                    self.complex = True
                else:
                    self.advance()
                    self._group_body()
                    while self.at_word("UNION"):
                        self.advance()
                        self.expect_punct("{", rule="MissingGroup")
                        self._group_body()
                        self.modifiers.add(Modifier.UNION)
                continue
            if tok.kind == "word":
                kw = tok.text.upper()
                if kw == "FILTER":
                    self.advance()
                    self.filters.append(self._filter_expression())
                    self.modifiers.add(Modifier.FILTER)
                    continue
                if kw == "OPTIONAL":
                    self.advance()
                    self.expect_punct("{", rule="MissingGroup")
                    self._group_body()
                    self.modifiers.add(Modifier.OPTIONAL)
                    continue
                if kw == "GRAPH":
                    self.advance()
                    self._term_node()  # the graph name
                    self.expect_punct("{", rule="MissingGroup")
                    self._group_body()
                    continue
                if kw == "SERVICE":
                    self.advance()
                    if self.at_word("SILENT"):
                        self.advance()
                    self._term_node()
                    self.capture_balanced("{", "}")
                    self.complex = True
                    continue
                if kw == "MINUS":
                    self.advance()
                    self.capture_balanced("{", "}")
                    continue
                if kw == "BIND":
                    self.advance()
                    self.capture_balanced("(", ")")
                    continue
                if kw == "VALUES":
                    self.advance()
                    self._skip_values()
                    self.complex = True
                    continue
            self._triples_same_subject()

    def _triples_only_block(self) -> list[TriplePattern]:
        """A CONSTRUCT template: triples only, collected separately."""
        outer = self.patterns
        self.patterns = []
        try:
            while not self.at_punct("}"):
                tok = self.peek()
                if tok.kind == "eof":
                    raise _ParseFail(
                        "UnterminatedGroup", tok.pos, "'{' never closed"
                    )
                if self.at_punct("."):
                    self.advance()
                    continue
                self._triples_same_subject()
            self.advance()  # '}'
            return self.patterns
        finally:
            self.patterns = outer

    def _skip_values(self) -> None:
        tok = self.peek()
        if tok.kind == "var":
            self.advance()
        elif self.at_punct("("):
            self.capture_balanced("(", ")")
        self.capture_balanced("{", "}")

    def _filter_expression(self) -> str:
        tok = self.peek()
        if self.at_punct("("):
            return normalize_ws(self.capture_balanced("(", ")"))
        if tok.kind == "word" and tok.text.upper() == "NOT":
            self.advance()
            tok = self.peek()
        if tok.kind == "word" and tok.text.upper() == "EXISTS":
            self.advance()
            block = normalize_ws(self.capture_balanced("{", "}"))
            return f"EXISTS {block}"
        if tok.kind == "word":
            name = self.advance().text
            args = normalize_ws(self.capture_balanced("(", ")"))
            return f"{name}{args}"
        if self.at_punct("!"):
            self.advance()
            inner = self.peek()
            if inner.kind == "word":
                name = self.advance().text
                args = normalize_ws(self.capture_balanced("(", ")"))
                return f"!{name}{args}"
        raise self.fail(message="unsupported FILTER expression")

    def _triples_same_subject(self) -> None:
        try:
            subject = self._term_node()
            self._predicate_object_list(subject)
        except _ComplexTriple:
            self.complex = True
            self._skip_to_triple_boundary()
        if self.at_punct("."):
            self.advance()

    def _predicate_object_list(self, subject: Term) -> None:
        while True:
            predicate = self._verb()
            while True:
                obj = self._term_node()
                self.patterns.append(
                    TriplePattern(subject=subject, predicate=predicate, object=obj)
                )
                if self.at_punct(","):
                    self.advance()
                    continue
                break
            if self.at_punct(";"):
                self.advance()
                nxt = self.peek()
                if (
                    nxt.kind in ("iri", "pname", "var", "string", "number")
                    or (nxt.kind == "word" and nxt.text == "a")
                ):
                    continue
                return  # trailing ';' before '.' or '}'
            return

    def _verb(self) -> Term:
        if self.at_punct("^"):
            raise _ComplexTriple()
        term = self._term_node(verb=True)
        nxt = self.peek()
        if nxt.kind == "punct" and nxt.text in _PATH_PUNCT:
            raise _ComplexTriple()
        if nxt.kind == "punct" and nxt.text in "*+?":
            raise _ComplexTriple()
        return term

    def _term_node(self, verb: bool = False) -> Term:
        tok = self.peek()
        if tok.kind == "iri":
            self.advance()
            return Term(kind=TermKind.IRI, text=tok.text, iri=tok.text[1:-1])
        if tok.kind == "pname":
            self.advance()
            prefix, _, local = tok.text.partition(":")
            if prefix == "_":  # blank node label: joins like a variable
                return Term(kind=TermKind.VARIABLE, text=f"?_:{local}")
            namespace = self.prefixes.get(prefix, BUILTIN_PREFIXES.get(prefix))
            iri = None if namespace is None else namespace + local
            return Term(
                kind=TermKind.IRI, text=tok.text, iri=iri,
                prefix=prefix, local=local,
            )
        if tok.kind == "var":
            self.advance()
            return Term(kind=TermKind.VARIABLE, text=tok.text)
        if tok.kind in ("string", "number"):
            self.advance()
            return Term(kind=TermKind.LITERAL, text=tok.text)
        if tok.kind == "word":
            word = tok.text
            if verb and word == "a":
                self.advance()
                return Term(kind=TermKind.IRI, text="a", iri=RDF_TYPE)
            if word.lower() in ("true", "false"):
                self.advance()
                return Term(kind=TermKind.LITERAL, text=word.lower())
        if self.at_punct("["):
            return self._blank_node_list()
        if self.at_punct("("):
            self.capture_balanced("(", ")")  # RDF collection: approximate
            return self.fresh_anon()
        raise _ParseFail(
            "BadTriple",
            tok.pos,
            f"expected an RDF term, found {tok.text or 'end of input'!r}",
        )

    def _blank_node_list(self) -> Term:
        self.expect_punct("[")
        anon = self.fresh_anon()
        if self.at_punct("]"):
            self.advance()
            return anon
        self._predicate_object_list(anon)
        self.expect_punct("]")
        return anon

    def _skip_to_triple_boundary(self) -> None:
        depth = 0
        while True:
            tok = self.peek()
            if tok.kind == "eof":
                return
            if tok.kind == "punct":
                if tok.text == "{":
                    depth += 1
                elif tok.text == "}":
                    if depth == 0:
                        return
                    depth -= 1
                elif tok.text == "." and depth == 0:
                    return
            self.advance()

    def _solution_modifiers(self) -> dict:
        out: dict = {
            "group_by_terms": [], "having": None,
            "order_by": None, "limit": None, "offset": None,
        }
        while True:
            tok = self.peek()
            if tok.kind == "eof":
                return out
            if tok.kind != "word":
                raise self.fail(message="trailing content after the query")
            kw = tok.text.upper()
            if kw == "GROUP":
                self.advance()
                if not self.at_word("BY"):
                    raise self.fail(message="GROUP must be followed by BY")
                self.advance()
                items: list[str] = []
                while True:
                    t = self.peek()
                    if t.kind == "var":
                        items.append(t.text)
                        self.advance()
                    elif self.at_punct("("):
                        items.append(normalize_ws(self.capture_balanced("(", ")")))
                    else:
                        break
                if not items:
                    raise self.fail(message="GROUP BY needs at least one term")
                out["group_by_terms"] = items
            elif kw == "HAVING":
                self.advance()
                out["having"] = self._filter_expression()
            elif kw == "ORDER":
                self.advance()
                if not self.at_word("BY"):
                    raise self.fail(message="ORDER must be followed by BY")
                self.advance()
                parts: list[str] = []
                while True:
                    t = self.peek()
                    if t.kind == "var":
                        parts.append(t.text)
                        self.advance()
                    elif t.kind == "word" and t.text.upper() in ("ASC", "DESC"):
                        word = self.advance().text.upper()
                        parts.append(word + normalize_ws(self.capture_balanced("(", ")")))
                    elif self.at_punct("("):
                        parts.append(normalize_ws(self.capture_balanced("(", ")")))
                    else:
                        break
                if not parts:
                    raise self.fail(message="ORDER BY needs at least one term")
                out["order_by"] = " ".join(parts)
                self.modifiers.add(Modifier.ORDER_BY)
            elif kw == "LIMIT":
                self.advance()
                t = self.peek()
                if t.kind != "number" or not t.text.isdigit():
                    raise self.fail(message="LIMIT needs a non-negative integer")
                out["limit"] = int(self.advance().text)
                self.modifiers.add(Modifier.LIMIT)
            elif kw == "OFFSET":
                self.advance()
                t = self.peek()
                if t.kind != "number" or not t.text.isdigit():
                    raise self.fail(message="OFFSET needs a non-negative integer")
                out["offset"] = int(self.advance().text)
                self.modifiers.add(Modifier.OFFSET)
            else:
                raise self.fail(message=f"unexpected keyword {tok.text!r}")

    def _finish(
        self,
        form: QueryForm,
        distinct: bool,
        projection: tuple[str, ...] = (),
        template: tuple[TriplePattern, ...] = (),
    ) -> ParsedQuery:
        mods = self._solution_modifiers()
        aggregates: list[str] = []
        for source in (*projection, mods["having"] or ""):
            for match in _AGG_RE.finditer(source):
                token = match.group(1).upper()
                if token not in aggregates:
                    aggregates.append(token)
        return ParsedQuery(
            form=form,
            distinct=distinct,
            triple_patterns=tuple(self.patterns),
            aggregates=tuple(aggregates),
            group_by=bool(mods["group_by_terms"]),
            prefixes=dict(self.prefixes),
            modifiers=frozenset(self.modifiers),
            projection=projection,
            filters=tuple(self.filters),
            group_by_terms=tuple(mods["group_by_terms"]),
            having=mods["having"],
            order_by_text=mods["order_by"],
            limit=mods["limit"],
            offset=mods["offset"],
            construct_template=template,
            complex_unsupported=self.complex,
        )


def parse_query(text: str) -> ParsedQuery | list[SyntaxIssue]:
    """Parse ``text``; on failure return the positioned issues instead."""
    try:
        return _Parser(text).parse()
    except _ParseFail as exc:
        return [exc.issue]
    except RecursionError:
        return [SyntaxIssue("TooDeep", 0, "query nests too deeply")]
