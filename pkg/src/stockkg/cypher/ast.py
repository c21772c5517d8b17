"""Query AST for the supported Cypher subset.

All nodes are frozen dataclasses so structural equality is plain ``==``.
Source positions are kept out of equality (``compare=False``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Union

LEFT_TO_RIGHT = "->"
RIGHT_TO_LEFT = "<-"
UNDIRECTED = "--"

CMP_OPS = ("=", "<>", "<", "<=", ">", ">=")


# -- expressions -----------------------------------------------------------

@dataclass(frozen=True)
class Var:
    name: str
    pos: tuple | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class PropAccess:
    var: str
    prop: str
    pos: tuple | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Literal:
    value: Any


@dataclass(frozen=True)
class ListLiteral:
    items: tuple


@dataclass(frozen=True)
class Cmp:
    op: str
    lhs: Any
    rhs: Any


@dataclass(frozen=True)
class In:
    lhs: Any
    rhs: ListLiteral


@dataclass(frozen=True)
class And:
    lhs: Any
    rhs: Any


@dataclass(frozen=True)
class Or:
    lhs: Any
    rhs: Any


@dataclass(frozen=True)
class Not:
    operand: Any


@dataclass(frozen=True)
class Paren:
    inner: Any


Expr = Union[Var, PropAccess, Literal, ListLiteral, Cmp, In, And, Or, Not, Paren]


# -- patterns --------------------------------------------------------------

@dataclass(frozen=True)
class NodePat:
    var: str | None = None
    labels: tuple = ()
    props: tuple = ()  # ((name, Literal | ListLiteral), ...)
    pos: tuple | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class RelPat:
    var: str | None = None
    types: tuple = ()
    direction: str = LEFT_TO_RIGHT
    pos: tuple | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Pattern:
    nodes: tuple
    rels: tuple

    def __post_init__(self):
        if len(self.nodes) < 1 or len(self.rels) != len(self.nodes) - 1:
            raise ValueError("a pattern has k node patterns and k-1 relationship patterns")


# -- clauses ---------------------------------------------------------------

@dataclass(frozen=True)
class ProjectionItem:
    expr: Any
    alias: str | None = None

    @property
    def name(self) -> str:
        """Column / variable name this item produces."""
        if self.alias is not None:
            return self.alias
        if isinstance(self.expr, Var):
            return self.expr.name
        from .render import render_expr
        return render_expr(self.expr)


@dataclass(frozen=True)
class Match:
    patterns: tuple
    optional: bool = False
    where: Any = None


@dataclass(frozen=True)
class With:
    items: tuple
    where: Any = None


@dataclass(frozen=True)
class Return:
    items: tuple


ASC = "ASC"
DESC = "DESC"


@dataclass(frozen=True)
class SortKey:
    expr: Any
    direction: str = ASC


@dataclass(frozen=True)
class OrderBy:
    keys: tuple


@dataclass(frozen=True)
class Query:
    clauses: tuple

    @property
    def return_clause(self) -> Return:
        for clause in self.clauses:
            if isinstance(clause, Return):
                return clause
        raise ValueError("query has no RETURN clause")

    @property
    def order_by(self) -> OrderBy | None:
        last = self.clauses[-1] if self.clauses else None
        return last if isinstance(last, OrderBy) else None

    @property
    def columns(self) -> list[str]:
        return [item.name for item in self.return_clause.items]


def walk_exprs(expr):
    """Yield ``expr`` and all sub-expressions, depth first."""
    yield expr
    if isinstance(expr, (Cmp, And, Or)) or isinstance(expr, In):
        yield from walk_exprs(expr.lhs)
        yield from walk_exprs(expr.rhs)
    elif isinstance(expr, Not):
        yield from walk_exprs(expr.operand)
    elif isinstance(expr, Paren):
        yield from walk_exprs(expr.inner)
    elif isinstance(expr, ListLiteral):
        for item in expr.items:
            yield from walk_exprs(item)
