"""Exception hierarchy shared by every layer of the engine.

User-facing errors (bad query text, unknown entities, malformed tables)
derive from :class:`UserError`; environment failures (disk, network)
derive from :class:`SystemFailure`.  Front ends map the two families to
different exit codes / HTTP statuses.
"""

from __future__ import annotations


class StockKGError(Exception):
    """Base class for all errors raised by stockkg."""


class UserError(StockKGError):
    pass


class SystemFailure(StockKGError):
    pass


# graph store

class EmptyLabelSet(UserError):
    pass


class UnknownNode(UserError):
    def __init__(self, node_id):
        super().__init__(f"unknown node id {node_id!r}")
        self.node_id = node_id


class UnknownEdge(UserError):
    def __init__(self, edge_id):
        super().__init__(f"unknown edge id {edge_id!r}")
        self.edge_id = edge_id


class InvalidValue(UserError):
    pass


class IoFailure(SystemFailure):
    pass


class CorruptSnapshot(SystemFailure):
    pass


# query language

class CypherSyntaxError(UserError):
    """Base for lexing, parsing and binding failures; carries 1-based line/column."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        self.detail = message
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)

    @property
    def position(self) -> dict | None:
        if self.line is None:
            return None
        return {"line": self.line, "column": self.column}


class LexError(CypherSyntaxError):
    pass


class ParseError(CypherSyntaxError):
    def __init__(self, message: str, line=None, column=None, expected=()):
        self.expected = tuple(expected)
        if self.expected:
            message = f"{message}; expected one of: {', '.join(self.expected)}"
        super().__init__(message, line, column)


class BindError(CypherSyntaxError):
    def __init__(self, message: str, variable: str, line=None, column=None):
        self.variable = variable
        super().__init__(message, line, column)


# ingestion

class BadDate(UserError):
    pass


class MalformedRecord(UserError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(message)


class BadSpec(UserError):
    pass


# translation

class EntityNotFound(UserError):
    def __init__(self, ref):
        super().__init__(f"entity not found: {ref}")
        self.ref = ref


class TemplateGap(UserError):
    pass


class UnsupportedQuestion(UserError):
    def __init__(self, reason: str):
        super().__init__(f"unsupported question: {reason}")
        self.reason = reason


class GeneratedQueryInvalid(UserError):
    def __init__(self, message: str, diagnostics=()):
        super().__init__(message)
        self.diagnostics = list(diagnostics)


class BackendUnreachable(SystemFailure):
    pass


class BackendTimeout(SystemFailure):
    pass


# answer composition

class MissingColumns(UserError):
    pass


class ShapeMismatch(UserError):
    pass


class GuardExceeded(UserError):
    pass
