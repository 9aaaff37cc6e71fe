"""Lexer and recursive-descent parser for the query language.

Grammar::

    query      := expr*                      (multiple exprs combine under OR)
    expr       := logical | comparison | term
    logical    := ("AND"|"OR"|"NOT") "(" expr+ ")"
    comparison := ("EQ"|"GT"|"GTE"|"LT"|"LTE") "(" key value ")"
    term       := token                      (classified as bbox | date | text)
    token      := quoted-string | run of non-space, non-paren characters

Operator heads are recognised only when immediately followed by ``(``;
elsewhere they are ordinary text terms. Operator names are case-sensitive.
Tokens containing spaces or parentheses must be double-quoted; backslash
escapes ``"`` and ``\\``. A quoted token is always a text term. Errors carry
the byte offset of the offending input.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import MalformedBBoxError, ParseError
from ..model import _NUMBER_RE, BoundingBox, DateValue, TypedValue
from .ast import (
    BBoxTerm,
    Comparison,
    CompareOp,
    DateTerm,
    Logical,
    LogicalOp,
    MatchAll,
    QueryNode,
    TextTerm,
)

_LOGICAL = {op.value for op in LogicalOp}
_COMPARE = {op.value for op in CompareOp}


@dataclass(frozen=True)
class _Tok:
    kind: str  # "(" | ")" | "token"
    text: str
    pos: int  # character offset
    quoted: bool = False
    head: bool = False  # immediately followed by "("


def _byte_offset(query: str, pos: int) -> int:
    return len(query[:pos].encode("utf-8", "surrogatepass"))


def _error(query: str, pos: int, message: str, cls=ParseError):
    raise cls(message, offset=_byte_offset(query, pos))


def _lex(query: str) -> list[_Tok]:
    toks = []
    i, n = 0, len(query)
    while i < n:
        c = query[i]
        if c.isspace():
            i += 1
            continue
        if c in "()":
            toks.append(_Tok(c, c, i))
            i += 1
            continue
        if c == '"':
            start = i
            i += 1
            parts = []
            while True:
                if i >= n:
                    _error(query, start, "unterminated quoted string")
                c = query[i]
                if c == "\\":
                    if i + 1 >= n:
                        _error(query, i, "dangling escape in quoted string")
                    nxt = query[i + 1]
                    if nxt not in ('"', "\\"):
                        _error(query, i, f"unsupported escape \\{nxt}")
                    parts.append(nxt)
                    i += 2
                elif c == '"':
                    i += 1
                    break
                else:
                    parts.append(c)
                    i += 1
            head = i < n and query[i] == "("
            toks.append(_Tok("token", "".join(parts), start, quoted=True, head=head))
            continue
        start = i
        while i < n and not query[i].isspace() and query[i] not in "()":
            i += 1
        head = i < n and query[i] == "("
        toks.append(_Tok("token", query[start:i], start, head=head))
    return toks


def classify_term(token: str, quoted: bool = False, query: str = "", pos: int = 0) -> QueryNode:
    """Classify a bare term: bbox, then date, then text.

    A token with exactly three commas must be a valid bounding box
    (four finite numeric literals, min <= max) or MALFORMED_BBOX is raised.
    Quoted tokens are always text.
    """
    if quoted:
        return TextTerm(token)
    if token.count(",") == 3:
        parts = token.split(",")
        if not all(_NUMBER_RE.match(p) for p in parts):
            _error(query or token, pos, f"bounding box component is not numeric: {token!r}",
                   MalformedBBoxError)
        try:
            bbox = BoundingBox(*(float(p) for p in parts))
        except ValueError as e:
            _error(query or token, pos, f"invalid bounding box {token!r}: {e}",
                   MalformedBBoxError)
        return BBoxTerm(bbox)
    d = DateValue.parse(token)
    if d is not None:
        return DateTerm(d)
    return TextTerm(token)


def _classify_value(tok: _Tok) -> TypedValue:
    if tok.quoted:
        return TypedValue.of_text(tok.text)
    return TypedValue.from_text(tok.text)


class _Parser:
    def __init__(self, query: str, toks: list[_Tok]):
        self.query = query
        self.toks = toks
        self.i = 0

    def peek(self) -> _Tok | None:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self) -> _Tok:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def fail(self, pos: int, message: str):
        _error(self.query, pos, message)

    def parse(self) -> QueryNode:
        nodes = []
        while self.peek() is not None:
            nodes.append(self.expr())
        if not nodes:
            return MatchAll()
        if len(nodes) == 1:
            return nodes[0]
        return Logical(LogicalOp.OR, tuple(nodes))

    def expr(self) -> QueryNode:
        tok = self.take()
        if tok.kind == "(":
            self.fail(tok.pos, "unexpected '(' without an operator")
        if tok.kind == ")":
            self.fail(tok.pos, "unbalanced ')'")
        if tok.head and not tok.quoted:
            if tok.text in _LOGICAL:
                return self.logical(tok)
            if tok.text in _COMPARE:
                return self.comparison(tok)
            self.fail(tok.pos, f"unknown operator {tok.text!r} used with parentheses")
        return classify_term(tok.text, tok.quoted, self.query, tok.pos)

    def _open(self, op: _Tok):
        tok = self.peek()
        if tok is None or tok.kind != "(":
            self.fail(op.pos, f"{op.text} must be followed by '('")
        self.take()

    def logical(self, op: _Tok) -> QueryNode:
        self._open(op)
        children = []
        while True:
            tok = self.peek()
            if tok is None:
                self.fail(op.pos, f"unbalanced parentheses in {op.text}(...)")
            if tok.kind == ")":
                self.take()
                break
            children.append(self.expr())
        if not children:
            self.fail(op.pos, f"{op.text} requires at least one argument")
        return Logical(LogicalOp(op.text), tuple(children))

    def comparison(self, op: _Tok) -> QueryNode:
        self._open(op)
        args = []
        while True:
            tok = self.peek()
            if tok is None:
                self.fail(op.pos, f"unbalanced parentheses in {op.text}(...)")
            if tok.kind == ")":
                self.take()
                break
            if tok.kind != "token":
                self.fail(tok.pos, f"{op.text} takes exactly two arguments, not a nested expression")
            args.append(self.take())
        if len(args) != 2:
            self.fail(op.pos, f"{op.text} takes exactly two arguments, got {len(args)}")
        key_tok, value_tok = args
        if not key_tok.text:
            self.fail(key_tok.pos, "comparison key must be non-empty")
        if key_tok.head:
            self.fail(key_tok.pos, f"unknown operator {key_tok.text!r} used with parentheses")
        return Comparison(CompareOp(op.text), key_tok.text, _classify_value(value_tok))


def parse_query(query: str) -> QueryNode:
    """Parse ``query``; empty or whitespace-only input yields MatchAll.

    Raises ParseError (with a byte offset) on malformed input; never raises
    anything else, for any string.
    """
    return _Parser(query, _lex(query)).parse()
