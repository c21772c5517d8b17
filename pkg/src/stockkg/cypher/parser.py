"""Recursive-descent parser producing :class:`~stockkg.cypher.ast.Query`.

Expression precedence, loosest first: OR, AND, NOT, comparison / IN.
Comparison operands are atoms, so ``a < b < c`` is rejected.
"""

from __future__ import annotations

import math

from ..errors import ParseError
from ..values import INT64_MAX, INT64_MIN
from . import ast as A
from .binder import bind
from .lexer import EOF, FLOAT, IDENT, INT, KW, STRING, Token, tokenize


def parse(text: str, check: bool = True) -> A.Query:
    """Parse ``text``; with ``check`` (default) also run the binder."""
    query = _Parser(tokenize(text)).query()
    if check:
        bind(query)
    return query


def parse_expr(text: str):
    p = _Parser(tokenize(text))
    expr = p.expr()
    p.expect_eof()
    return expr


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.toks = tokens
        self.i = 0

    # -- token helpers ----------------------------------------------------

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def advance(self) -> Token:
        t = self.toks[self.i]
        if t.kind != EOF:
            self.i += 1
        return t

    def error(self, expected) -> ParseError:
        t = self.tok
        return ParseError(f"unexpected {t.describe()}", t.line, t.column, expected)

    def expect_punct(self, sym: str) -> Token:
        if not self.tok.is_punct(sym):
            raise self.error([repr(sym)])
        return self.advance()

    def expect_kw(self, kw: str) -> Token:
        if not self.tok.is_kw(kw):
            raise self.error([kw])
        return self.advance()

    def expect_eof(self) -> None:
        if self.tok.kind != EOF:
            raise self.error(["end of input"])

    def name(self, what: str) -> str:
        """Identifier, also accepting keywords where a name is unambiguous (labels, properties)."""
        t = self.tok
        if t.kind == IDENT:
            self.advance()
            return t.value
        if t.kind == KW:
            self.advance()
            return t.text
        raise self.error([what])

    def ident(self, what: str = "identifier") -> str:
        t = self.tok
        if t.kind != IDENT:
            raise self.error([what])
        self.advance()
        return t.value

    # -- clauses ----------------------------------------------------------

    def query(self) -> A.Query:
        clauses = []
        while True:
            t = self.tok
            if t.is_kw("MATCH", "OPTIONAL"):
                clauses.append(self.match())
            elif t.is_kw("WITH"):
                clauses.append(self.with_())
            elif t.is_kw("RETURN"):
                clauses.append(self.return_())
                if self.tok.is_kw("ORDER"):
                    clauses.append(self.order_by())
                self.expect_eof()
                break
            elif t.kind == EOF:
                raise self.error(["MATCH", "OPTIONAL MATCH", "WITH", "RETURN"])
            else:
                raise self.error(["MATCH", "OPTIONAL MATCH", "WITH", "RETURN"])
        return A.Query(tuple(clauses))

    def match(self) -> A.Match:
        optional = False
        if self.tok.is_kw("OPTIONAL"):
            self.advance()
            optional = True
        self.expect_kw("MATCH")
        patterns = [self.pattern()]
        while self.tok.is_punct(","):
            self.advance()
            patterns.append(self.pattern())
        where = None
        if self.tok.is_kw("WHERE"):
            self.advance()
            where = self.expr()
        return A.Match(tuple(patterns), optional, where)

    def with_(self) -> A.With:
        self.expect_kw("WITH")
        items = self.items()
        where = None
        if self.tok.is_kw("WHERE"):
            self.advance()
            where = self.expr()
        return A.With(items, where)

    def return_(self) -> A.Return:
        self.expect_kw("RETURN")
        return A.Return(self.items())

    def items(self) -> tuple:
        items = [self.item()]
        while self.tok.is_punct(","):
            self.advance()
            items.append(self.item())
        return tuple(items)

    def item(self) -> A.ProjectionItem:
        expr = self.expr()
        alias = None
        if self.tok.is_kw("AS"):
            self.advance()
            alias = self.ident("alias")
        return A.ProjectionItem(expr, alias)

    def order_by(self) -> A.OrderBy:
        self.expect_kw("ORDER")
        self.expect_kw("BY")
        keys = [self.sort_key()]
        while self.tok.is_punct(","):
            self.advance()
            keys.append(self.sort_key())
        return A.OrderBy(tuple(keys))

    def sort_key(self) -> A.SortKey:
        expr = self.expr()
        direction = A.ASC
        if self.tok.is_kw("ASC", "DESC"):
            direction = self.advance().value
        return A.SortKey(expr, direction)

    # -- patterns ---------------------------------------------------------

    def pattern(self) -> A.Pattern:
        nodes = [self.node_pat()]
        rels = []
        while self.tok.is_punct("-", "<"):
            rels.append(self.rel_pat())
            nodes.append(self.node_pat())
        return A.Pattern(tuple(nodes), tuple(rels))

    def node_pat(self) -> A.NodePat:
        start = self.expect_punct("(")
        var = None
        if self.tok.kind == IDENT:
            var = self.advance().value
        labels = []
        while self.tok.is_punct(":"):
            self.advance()
            labels.append(self.name("label"))
        props = ()
        if self.tok.is_punct("{"):
            props = self.prop_map()
        self.expect_punct(")")
        return A.NodePat(var, tuple(labels), props, (start.line, start.column))

    def prop_map(self) -> tuple:
        self.expect_punct("{")
        pairs = []
        seen = set()
        if not self.tok.is_punct("}"):
            while True:
                key_tok = self.tok
                key = self.name("property name")
                if key in seen:
                    raise ParseError(f"duplicate property {key!r} in map",
                                     key_tok.line, key_tok.column)
                seen.add(key)
                self.expect_punct(":")
                pairs.append((key, self.literal_value()))
                if not self.tok.is_punct(","):
                    break
                self.advance()
        self.expect_punct("}")
        return tuple(pairs)

    def literal_value(self):
        """A literal or a list of literals (property maps admit no expressions)."""
        if self.tok.is_punct("["):
            self.advance()
            items = []
            if not self.tok.is_punct("]"):
                items.append(self.literal_value())
                while self.tok.is_punct(","):
                    self.advance()
                    items.append(self.literal_value())
            self.expect_punct("]")
            return A.ListLiteral(tuple(items))
        lit = self.literal()
        if lit is None:
            raise self.error(["literal"])
        return lit

    def rel_pat(self) -> A.RelPat:
        start = self.tok
        left = False
        if self.tok.is_punct("<"):
            self.advance()
            left = True
        self.expect_punct("-")
        var = None
        types: list[str] = []
        if self.tok.is_punct("["):
            self.advance()
            if self.tok.kind == IDENT:
                var = self.advance().value
            if self.tok.is_punct(":"):
                self.advance()
                types.append(self.name("relationship type"))
                while self.tok.is_punct("|"):
                    self.advance()
                    if self.tok.is_punct(":"):
                        self.advance()
                    types.append(self.name("relationship type"))
            self.expect_punct("]")
        self.expect_punct("-")
        right = False
        if self.tok.is_punct(">"):
            self.advance()
            right = True
        if left and right:
            raise ParseError("relationship cannot point both ways", start.line, start.column)
        direction = A.RIGHT_TO_LEFT if left else A.LEFT_TO_RIGHT if right else A.UNDIRECTED
        return A.RelPat(var, tuple(types), direction, (start.line, start.column))

    # -- expressions ------------------------------------------------------

    def expr(self):
        lhs = self.and_expr()
        while self.tok.is_kw("OR"):
            self.advance()
            lhs = A.Or(lhs, self.and_expr())
        return lhs

    def and_expr(self):
        lhs = self.not_expr()
        while self.tok.is_kw("AND"):
            self.advance()
            lhs = A.And(lhs, self.not_expr())
        return lhs

    def not_expr(self):
        if self.tok.is_kw("NOT"):
            self.advance()
            return A.Not(self.not_expr())
        return self.cmp_expr()

    def cmp_expr(self):
        lhs = self.atom()
        t = self.tok
        if t.is_punct(*A.CMP_OPS):
            self.advance()
            return A.Cmp(t.value, lhs, self.atom())
        if t.is_kw("IN"):
            self.advance()
            if not self.tok.is_punct("["):
                raise self.error(["list literal"])
            return A.In(lhs, self.list_literal())
        return lhs

    def list_literal(self) -> A.ListLiteral:
        self.expect_punct("[")
        items = []
        if not self.tok.is_punct("]"):
            items.append(self.expr())
            while self.tok.is_punct(","):
                self.advance()
                items.append(self.expr())
        self.expect_punct("]")
        return A.ListLiteral(tuple(items))

    def literal(self):
        t = self.tok
        if t.kind == STRING:
            self.advance()
            return A.Literal(t.value)
        if t.kind in (INT, FLOAT):
            self.advance()
            return A.Literal(self._number(t, 1))
        if t.is_punct("-") and self.peek().kind in (INT, FLOAT):
            self.advance()
            return A.Literal(self._number(self.advance(), -1))
        if t.is_kw("TRUE"):
            self.advance()
            return A.Literal(True)
        if t.is_kw("FALSE"):
            self.advance()
            return A.Literal(False)
        if t.is_kw("NULL"):
            self.advance()
            return A.Literal(None)
        return None

    def _number(self, t: Token, sign: int):
        value = sign * t.value
        if t.kind == INT and not INT64_MIN <= value <= INT64_MAX:
            raise ParseError("integer literal out of 64-bit range", t.line, t.column)
        if t.kind == FLOAT and not math.isfinite(value):
            raise ParseError("float literal out of range", t.line, t.column)
        return value

    def atom(self):
        lit = self.literal()
        if lit is not None:
            return lit
        t = self.tok
        if t.is_punct("["):
            return self.list_literal()
        if t.is_punct("("):
            self.advance()
            inner = self.expr()
            self.expect_punct(")")
            return A.Paren(inner)
        if t.kind == IDENT:
            self.advance()
            if self.tok.is_punct("."):
                self.advance()
                prop = self.name("property name")
                return A.PropAccess(t.value, prop, (t.line, t.column))
            return A.Var(t.value, (t.line, t.column))
        raise self.error(["expression"])
