"""Evaluate parsed queries against a :class:`~stockkg.graph.PropertyGraph`.

Row order without ORDER BY is defined by the traversal: for each input
row, start candidates in ascending node id, then adjacency lists in edge
insertion order (outgoing before incoming for undirected hops), with
patterns of a MATCH clause expanded left to right.
"""

from __future__ import annotations

import json
from collections.abc import Iterator
from dataclasses import dataclass, field
from typing import Any

from . import values as V
from .cypher import ast as A
from .cypher.binder import bind, variables_of
from .graph import BOTH, IN, OUT, Edge, Node, PropertyGraph

Binding = dict


@dataclass
class Diagnostics:
    type_mismatches: int = 0
    messages: list = field(default_factory=list)

    def mismatch(self, message: str) -> None:
        self.type_mismatches += 1
        if len(self.messages) < 20:
            self.messages.append(message)


# -- result table ----------------------------------------------------------

def cell_to_json(cell: Any):
    if isinstance(cell, (Node, Edge)):
        return cell.to_json()
    if isinstance(cell, tuple):
        return list(cell)
    return cell


def cell_to_text(cell: Any) -> str:
    if cell is None:
        return "null"
    if isinstance(cell, Node):
        props = ", ".join(f"{k}: {_scalar_text(v)}" for k, v in sorted(cell.props.items()))
        return f"(#{cell.id}:{':'.join(sorted(cell.labels))} {{{props}}})"
    if isinstance(cell, Edge):
        return f"[#{cell.id}:{cell.type} {cell.src}->{cell.dst}]"
    return _scalar_text(cell)


def _scalar_text(value) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return value
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_scalar_text(v) for v in value) + "]"
    return repr(value) if isinstance(value, float) else str(value)


@dataclass
class ResultTable:
    columns: list
    rows: list

    def __post_init__(self):
        if len(set(self.columns)) != len(self.columns):
            raise ValueError(f"duplicate column names: {self.columns}")
        for row in self.rows:
            if len(row) != len(self.columns):
                raise ValueError("row width does not match column count")

    def __len__(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [row[i] for row in self.rows]

    def records(self) -> list[dict]:
        return [dict(zip(self.columns, row)) for row in self.rows]

    def to_json(self) -> list[dict]:
        return [{c: cell_to_json(v) for c, v in zip(self.columns, row)} for row in self.rows]

    def dumps(self) -> str:
        return json.dumps({"columns": self.columns, "rows": self.to_json()},
                          ensure_ascii=False, indent=2)

    def to_text(self) -> str:
        header = list(self.columns)
        body = [[cell_to_text(c) for c in row] for row in self.rows]
        widths = [len(h) for h in header]
        for row in body:
            widths = [max(w, len(c)) for w, c in zip(widths, row)]
        lines = [" | ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip(),
                 "-+-".join("-" * w for w in widths)]
        for row in body:
            lines.append(" | ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
        lines.append(f"({len(self.rows)} row{'s' if len(self.rows) != 1 else ''})")
        return "\n".join(lines)


# -- expressions -----------------------------------------------------------

def _truth(value, diag: Diagnostics | None, what: str):
    if value is None or isinstance(value, bool):
        return value
    if diag is not None:
        diag.mismatch(f"{what} operand is not boolean: {value!r}")
    return None


def eval_expr(binding: Binding, expr, diag: Diagnostics | None = None):
    """Evaluate ``expr`` under ``binding`` with three-valued logic (None is Null)."""
    if isinstance(expr, A.Literal):
        return expr.value
    if isinstance(expr, A.Var):
        return binding.get(expr.name)
    if isinstance(expr, A.PropAccess):
        target = binding.get(expr.var)
        if target is None:
            return None
        if isinstance(target, (Node, Edge)):
            return target.props.get(expr.prop)
        if diag is not None:
            diag.mismatch(f"property access on non-entity {expr.var!r}")
        return None
    if isinstance(expr, A.Paren):
        return eval_expr(binding, expr.inner, diag)
    if isinstance(expr, A.ListLiteral):
        return [eval_expr(binding, e, diag) for e in expr.items]
    if isinstance(expr, A.Cmp):
        lhs = eval_expr(binding, expr.lhs, diag)
        rhs = eval_expr(binding, expr.rhs, diag)
        return compare(expr.op, lhs, rhs, diag)
    if isinstance(expr, A.In):
        lhs = eval_expr(binding, expr.lhs, diag)
        if lhs is None:
            return None
        saw_null = False
        for item in expr.rhs.items:
            r = V.equals(lhs, eval_expr(binding, item, diag))
            if r is True:
                return True
            if r is None:
                saw_null = True
        return None if saw_null else False
    if isinstance(expr, A.Not):
        v = _truth(eval_expr(binding, expr.operand, diag), diag, "NOT")
        return None if v is None else not v
    if isinstance(expr, A.And):
        a = _truth(eval_expr(binding, expr.lhs, diag), diag, "AND")
        b = _truth(eval_expr(binding, expr.rhs, diag), diag, "AND")
        if a is False or b is False:
            return False
        if a is None or b is None:
            return None
        return True
    if isinstance(expr, A.Or):
        a = _truth(eval_expr(binding, expr.lhs, diag), diag, "OR")
        b = _truth(eval_expr(binding, expr.rhs, diag), diag, "OR")
        if a is True or b is True:
            return True
        if a is None or b is None:
            return None
        return False
    raise TypeError(f"not an expression: {expr!r}")


def compare(op: str, lhs, rhs, diag: Diagnostics | None = None):
    if op == "=":
        return V.equals(lhs, rhs)
    if op == "<>":
        r = V.equals(lhs, rhs)
        return None if r is None else not r
    try:
        c = V.order(lhs, rhs)
    except V.Incomparable as exc:
        if diag is not None:
            diag.mismatch(str(exc))
        return None
    if c is None:
        return None
    if op == "<":
        return c < 0
    if op == "<=":
        return c <= 0
    if op == ">":
        return c > 0
    if op == ">=":
        return c >= 0
    raise ValueError(f"unknown comparison operator {op!r}")


# -- pattern matching ------------------------------------------------------

_DIRECTION = {A.LEFT_TO_RIGHT: OUT, A.RIGHT_TO_LEFT: IN, A.UNDIRECTED: BOTH}


def _node_ok(pat: A.NodePat, node: Node, binding: Binding) -> bool:
    if pat.var is not None and pat.var in binding:
        if binding[pat.var] != node:
            return False
    for label in pat.labels:
        if label not in node.labels:
            return False
    for key, lit in pat.props:
        want = eval_expr({}, lit)
        if V.equals(node.props.get(key), want) is not True:
            return False
    return True


def _start_candidates(graph: PropertyGraph, pat: A.NodePat, binding: Binding) -> list[Node]:
    if pat.var is not None and pat.var in binding:
        bound = binding[pat.var]
        return [bound] if isinstance(bound, Node) else []
    for label in pat.labels:
        for key, lit in pat.props:
            if graph.has_index(label, key):
                ids = graph.find_nodes(label, key, eval_expr({}, lit))
                return [graph.node(i) for i in sorted(ids)]
    if pat.labels:
        return graph.nodes(pat.labels[0])
    return graph.nodes()


def _expand(graph: PropertyGraph, pattern: A.Pattern, binding: Binding,
            used: frozenset) -> Iterator[tuple[Binding, frozenset]]:
    first = pattern.nodes[0]
    for node in _start_candidates(graph, first, binding):
        if not _node_ok(first, node, binding):
            continue
        b = dict(binding)
        if first.var is not None:
            b[first.var] = node
        yield from _hop(graph, pattern, 0, node, b, used)


def _hop(graph, pattern, i, current: Node, binding: Binding, used: frozenset):
    if i == len(pattern.rels):
        yield binding, used
        return
    rel = pattern.rels[i]
    nxt = pattern.nodes[i + 1]
    bound_rel = None
    if rel.var is not None and rel.var in binding:
        bound_rel = binding[rel.var]
        if not isinstance(bound_rel, Edge):
            return
    for edge in graph.neighbors(current.id, _DIRECTION[rel.direction], rel.types or None):
        if edge.id in used:
            continue
        if bound_rel is not None and edge != bound_rel:
            continue
        if rel.direction == A.LEFT_TO_RIGHT:
            other = edge.dst
        elif rel.direction == A.RIGHT_TO_LEFT:
            other = edge.src
        else:
            other = edge.dst if edge.src == current.id else edge.src
        node = graph.node(other)
        if not _node_ok(nxt, node, binding):
            continue
        b = dict(binding)
        if rel.var is not None:
            b[rel.var] = edge
        if nxt.var is not None:
            b[nxt.var] = node
        yield from _hop(graph, pattern, i + 1, node, b, used | {edge.id})


def _clause_extensions(graph, patterns, binding: Binding, k: int = 0,
                       used: frozenset = frozenset()):
    if k == len(patterns):
        yield binding
        return
    for b, u in _expand(graph, patterns[k], binding, used):
        yield from _clause_extensions(graph, patterns, b, k + 1, u)


def match_pattern(graph: PropertyGraph, pattern: A.Pattern, seeds: list[Binding],
                  optional: bool = False) -> list[Binding]:
    """Extend each seed binding with every match of ``pattern``.

    No edge is used twice within the pattern.  With ``optional``, a seed
    without matches is kept once with the pattern's new variables set to None.
    """
    clause = A.Match((pattern,), optional, None)
    return match_clause(graph, clause, seeds)


def match_clause(graph: PropertyGraph, clause: A.Match, seeds: list[Binding],
                 diag: Diagnostics | None = None) -> list[Binding]:
    new_vars = []
    for pattern in clause.patterns:
        for var in variables_of(pattern):
            if var not in new_vars:
                new_vars.append(var)
    out: list[Binding] = []
    for seed in seeds:
        found = 0
        for b in _clause_extensions(graph, clause.patterns, seed):
            if clause.where is not None and eval_expr(b, clause.where, diag) is not True:
                continue
            out.append(b)
            found += 1
        if clause.optional and found == 0:
            filled = dict(seed)
            for var in new_vars:
                filled.setdefault(var, None)
            out.append(filled)
    return out


# -- execution -------------------------------------------------------------

def _project(items, binding: Binding, diag) -> Binding:
    return {item.name: eval_expr(binding, item.expr, diag) for item in items}


def order_rows(keys, rows: list, key_bindings: list, diag=None) -> list:
    """Stable multi-key sort; Null last under ASC, first under DESC."""
    order = list(range(len(rows)))
    for key in reversed(keys):
        vals = [V.sort_key(eval_expr(key_bindings[i], key.expr, diag)) for i in range(len(rows))]
        order.sort(key=lambda i: vals[i], reverse=(key.direction == A.DESC))
    return [rows[i] for i in order]


def execute(graph: PropertyGraph, query: A.Query, diag: Diagnostics | None = None,
            check: bool = True) -> ResultTable:
    """Run ``query`` against ``graph`` and return its result table."""
    if check:
        bind(query)
    with graph.lock.read():
        rows: list[Binding] = [{}]
        table_rows: list = []
        key_bindings: list = []
        columns: list = []
        for clause in query.clauses:
            if isinstance(clause, A.Match):
                rows = match_clause(graph, clause, rows, diag)
            elif isinstance(clause, A.With):
                rows = [_project(clause.items, b, diag) for b in rows]
                if clause.where is not None:
                    rows = [b for b in rows if eval_expr(b, clause.where, diag) is True]
            elif isinstance(clause, A.Return):
                columns = [item.name for item in clause.items]
                for b in rows:
                    projected = _project(clause.items, b, diag)
                    table_rows.append([projected[c] for c in columns])
                    key_bindings.append({**b, **projected})
            elif isinstance(clause, A.OrderBy):
                table_rows = order_rows(clause.keys, table_rows, key_bindings, diag)
    return ResultTable(columns, table_rows)


def run(graph: PropertyGraph, text: str, diag: Diagnostics | None = None) -> ResultTable:
    from .cypher import parse
    return execute(graph, parse(text), diag, check=False)
