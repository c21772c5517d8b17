"""Structural validation and variable scoping for parsed queries."""

from __future__ import annotations

from ..errors import BindError, ParseError
from . import ast as A

NODE = "node"
REL = "rel"
VALUE = "value"


def _pos(obj):
    pos = getattr(obj, "pos", None)
    return pos if pos else (None, None)


def check_structure(query: A.Query) -> None:
    clauses = query.clauses
    returns = [i for i, c in enumerate(clauses) if isinstance(c, A.Return)]
    if len(returns) != 1:
        raise ParseError("a query needs exactly one RETURN clause")
    r = returns[0]
    tail = clauses[r + 1:]
    if len(tail) > 1 or (tail and not isinstance(tail[0], A.OrderBy)):
        raise ParseError("only ORDER BY may follow RETURN")
    for c in clauses[:r]:
        if not isinstance(c, (A.Match, A.With)):
            raise ParseError(f"{type(c).__name__} may not precede RETURN")


def _check_refs(expr, scope: dict) -> None:
    if expr is None:
        return
    for sub in A.walk_exprs(expr):
        if isinstance(sub, (A.Var, A.PropAccess)):
            name = sub.name if isinstance(sub, A.Var) else sub.var
            if name not in scope:
                line, col = _pos(sub)
                raise BindError(f"variable {name!r} is not defined", name, line, col)


def _bind_var(scope: dict, var: str | None, kind: str, where) -> None:
    if var is None:
        return
    have = scope.get(var)
    if have is not None and have != kind:
        line, col = _pos(where)
        raise BindError(f"variable {var!r} already bound as {have}, used as {kind}",
                        var, line, col)
    scope[var] = kind


def _projection_scope(items, scope: dict, require_alias: bool) -> dict:
    out: dict = {}
    for item in items:
        _check_refs(item.expr, scope)
        if require_alias and item.alias is None and not isinstance(item.expr, A.Var):
            raise BindError("expressions in WITH must be aliased", item.name)
        name = item.name
        if name in out:
            raise BindError(f"duplicate projection name {name!r}", name)
        if isinstance(item.expr, A.Var):
            out[name] = scope[item.expr.name]
        else:
            out[name] = VALUE
    return out


def bind(query: A.Query) -> dict:
    """Validate clause order and variable scoping; return the final RETURN scope.

    After ``WITH`` only the projected names remain visible.  ``ORDER BY``
    sees both the RETURN aliases and the variables in scope before RETURN.
    """
    check_structure(query)
    scope: dict = {}
    for clause in query.clauses:
        if isinstance(clause, A.Match):
            for pattern in clause.patterns:
                for node in pattern.nodes:
                    _bind_var(scope, node.var, NODE, node)
                for rel in pattern.rels:
                    _bind_var(scope, rel.var, REL, rel)
            _check_refs(clause.where, scope)
        elif isinstance(clause, A.With):
            scope = _projection_scope(clause.items, scope, require_alias=True)
            _check_refs(clause.where, scope)
        elif isinstance(clause, A.Return):
            projected = _projection_scope(clause.items, scope, require_alias=False)
            scope = {**scope, **projected}
        elif isinstance(clause, A.OrderBy):
            for key in clause.keys:
                _check_refs(key.expr, scope)
    return scope


def variables_of(pattern: A.Pattern) -> list[str]:
    """Named variables of a pattern in first-appearance order."""
    seen: list[str] = []
    for i, node in enumerate(pattern.nodes):
        if node.var and node.var not in seen:
            seen.append(node.var)
        if i < len(pattern.rels):
            rel = pattern.rels[i]
            if rel.var and rel.var not in seen:
                seen.append(rel.var)
    return seen
