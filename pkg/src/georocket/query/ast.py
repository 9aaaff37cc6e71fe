"""Query syntax tree and its canonical text rendering.

The language consists of whitespace-separated expressions: bare terms
(strings, dates, bounding boxes), logical operators AND/OR/NOT, and
comparison operators EQ/GT/GTE/LT/LTE over a key and a value. ``render``
produces text that reparses to an equal tree.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from ..model import _NUMBER_RE, BoundingBox, DateValue, TypedValue


class LogicalOp(str, Enum):
    AND = "AND"
    OR = "OR"
    NOT = "NOT"


class CompareOp(str, Enum):
    EQ = "EQ"
    GT = "GT"
    GTE = "GTE"
    LT = "LT"
    LTE = "LTE"


class QueryNode:
    """Base class for all query tree nodes."""

    __slots__ = ()


@dataclass(frozen=True)
class MatchAll(QueryNode):
    """Matches every chunk; the parse of an empty query."""


@dataclass(frozen=True)
class TextTerm(QueryNode):
    """Matches chunks whose tokens, tags, or property values contain the token."""

    token: str


@dataclass(frozen=True)
class BBoxTerm(QueryNode):
    """Matches chunks whose bounding box intersects the given box."""

    bbox: BoundingBox


@dataclass(frozen=True)
class DateTerm(QueryNode):
    """Matches chunks imported within the date's interval."""

    date: DateValue


@dataclass(frozen=True)
class Logical(QueryNode):
    op: LogicalOp
    children: tuple[QueryNode, ...]

    def __post_init__(self):
        if not self.children:
            raise ValueError(f"{self.op.value} requires at least one child")


@dataclass(frozen=True)
class Comparison(QueryNode):
    op: CompareOp
    key: str
    value: TypedValue

    def __post_init__(self):
        if not self.key:
            raise ValueError("comparison key must be non-empty")


def _needs_quotes(token: str) -> bool:
    if token == "" or token != token.strip():
        return True
    if any(c in token for c in ' \t\r\n()"\\'):
        return True
    # would not reparse as plain text
    if DateValue.parse(token) is not None:
        return True
    if token.count(",") == 3:
        return True
    return False


def _quote(token: str) -> str:
    return '"' + token.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _render_text(token: str) -> str:
    return _quote(token) if _needs_quotes(token) else token


def _render_value(value: TypedValue) -> str:
    if value.kind == "date":
        return value.value.iso()
    if value.kind == "number":
        return repr(value.value)
    token = value.value
    if _needs_quotes(token) or _NUMBER_RE.match(token):
        return _quote(token)
    return token


def render(node: QueryNode) -> str:
    """Deterministic text form of ``node``; parsing it yields an equal tree."""
    if isinstance(node, MatchAll):
        return ""
    if isinstance(node, TextTerm):
        return _render_text(node.token)
    if isinstance(node, DateTerm):
        return node.date.iso()
    if isinstance(node, BBoxTerm):
        b = node.bbox
        return f"{b.min_x!r},{b.min_y!r},{b.max_x!r},{b.max_y!r}"
    if isinstance(node, Logical):
        return f"{node.op.value}({' '.join(render(c) for c in node.children)})"
    if isinstance(node, Comparison):
        return f"{node.op.value}({_render_text(node.key)} {_render_value(node.value)})"
    raise TypeError(f"cannot render {node!r}")
