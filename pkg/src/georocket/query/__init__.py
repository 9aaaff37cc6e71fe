"""Query language: syntax tree, parser, and reference evaluator."""

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
    render,
)
from .evaluate import compare_typed, evaluate_oracle
from .parser import classify_term, parse_query

__all__ = [
    "BBoxTerm",
    "Comparison",
    "CompareOp",
    "DateTerm",
    "Logical",
    "LogicalOp",
    "MatchAll",
    "QueryNode",
    "TextTerm",
    "render",
    "compare_typed",
    "evaluate_oracle",
    "classify_term",
    "parse_query",
]
