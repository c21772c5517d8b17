"""Canonical text rendering of query ASTs.

Output is single-spaced with upper-case keywords, so
``parse(render(q)) == q`` for any AST the parser can produce.
"""

from __future__ import annotations

import json

from . import ast as A

_PREC = {A.Or: 1, A.And: 2, A.Not: 3}
_ATOM = 5


def _prec(expr) -> int:
    if isinstance(expr, (A.Cmp, A.In)):
        return 4
    return _PREC.get(type(expr), _ATOM)


def render_literal(value) -> str:
    if value is None:
        return "null"
    if value is True:
        return "true"
    if value is False:
        return "false"
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, float):
        text = repr(value)
        if "e" in text or "E" in text:
            mantissa, _, exp = text.partition("e")
            if "." not in mantissa:
                mantissa += ".0"
            text = f"{mantissa}e{exp}"
        return text
    return str(value)


def _wrap(expr, min_prec: int) -> str:
    text = render_expr(expr)
    return f"({text})" if _prec(expr) < min_prec else text


def render_expr(expr) -> str:
    if isinstance(expr, A.Var):
        return expr.name
    if isinstance(expr, A.PropAccess):
        return f"{expr.var}.{expr.prop}"
    if isinstance(expr, A.Literal):
        return render_literal(expr.value)
    if isinstance(expr, A.ListLiteral):
        return "[" + ", ".join(render_expr(e) for e in expr.items) + "]"
    if isinstance(expr, A.Paren):
        return f"({render_expr(expr.inner)})"
    if isinstance(expr, A.Cmp):
        return f"{_wrap(expr.lhs, _ATOM)} {expr.op} {_wrap(expr.rhs, _ATOM)}"
    if isinstance(expr, A.In):
        return f"{_wrap(expr.lhs, _ATOM)} IN {render_expr(expr.rhs)}"
    if isinstance(expr, A.Not):
        return f"NOT {_wrap(expr.operand, 3)}"
    if isinstance(expr, A.And):
        return f"{_wrap(expr.lhs, 2)} AND {_wrap(expr.rhs, 3)}"
    if isinstance(expr, A.Or):
        return f"{_wrap(expr.lhs, 1)} OR {_wrap(expr.rhs, 2)}"
    raise TypeError(f"not an expression: {expr!r}")


def render_prop_value(value) -> str:
    if isinstance(value, A.ListLiteral):
        return "[" + ", ".join(render_prop_value(v) for v in value.items) + "]"
    return render_literal(value.value)


def render_node(node: A.NodePat) -> str:
    text = node.var or ""
    text += "".join(f":{label}" for label in node.labels)
    if node.props:
        pairs = ", ".join(f"{k}: {render_prop_value(v)}" for k, v in node.props)
        text += (" " if text else "") + "{" + pairs + "}"
    return f"({text})"


def render_rel(rel: A.RelPat) -> str:
    body = rel.var or ""
    if rel.types:
        body += ":" + "|".join(rel.types)
    inner = f"[{body}]" if body else ""
    if rel.direction == A.LEFT_TO_RIGHT:
        return f"-{inner}->"
    if rel.direction == A.RIGHT_TO_LEFT:
        return f"<-{inner}-"
    return f"-{inner}-"


def render_pattern(pattern: A.Pattern) -> str:
    parts = [render_node(pattern.nodes[0])]
    for rel, node in zip(pattern.rels, pattern.nodes[1:]):
        parts.append(render_rel(rel))
        parts.append(render_node(node))
    return "".join(parts)


def _items(items) -> str:
    out = []
    for item in items:
        text = render_expr(item.expr)
        if item.alias is not None:
            text += f" AS {item.alias}"
        out.append(text)
    return ", ".join(out)


def render_clause(clause) -> str:
    if isinstance(clause, A.Match):
        text = ("OPTIONAL MATCH " if clause.optional else "MATCH ")
        text += ", ".join(render_pattern(p) for p in clause.patterns)
        if clause.where is not None:
            text += " WHERE " + render_expr(clause.where)
        return text
    if isinstance(clause, A.With):
        text = "WITH " + _items(clause.items)
        if clause.where is not None:
            text += " WHERE " + render_expr(clause.where)
        return text
    if isinstance(clause, A.Return):
        return "RETURN " + _items(clause.items)
    if isinstance(clause, A.OrderBy):
        return "ORDER BY " + ", ".join(f"{render_expr(k.expr)} {k.direction}"
                                       for k in clause.keys)
    raise TypeError(f"not a clause: {clause!r}")


def render(query: A.Query, multiline: bool = False) -> str:
    sep = "\n" if multiline else " "
    return sep.join(render_clause(c) for c in query.clauses)
