"""Shared request path used by the CLI and the HTTP service.

Both frontends call :class:`Engine` and serialize with :func:`to_json_text`,
so identical inputs give identical JSON whichever way they arrive.
"""

from __future__ import annotations

import json
import logging

from .answer import AnswerReport, compose
from .cypher import parse
from .errors import (
    BackendUnreachable,
    CypherSyntaxError,
    GeneratedQueryInvalid,
    StockKGError,
    UnsupportedQuestion,
)
from .executor import Diagnostics, ResultTable, execute
from .graph import PropertyGraph
from .schema import CATALOG, SchemaCatalog
from .translate import (
    BackendConfig,
    Lexicon,
    TranslationResult,
    Unsupported,
    classify_and_extract,
    external_generate,
    translate,
)

log = logging.getLogger(__name__)


def to_json_text(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, indent=2, sort_keys=False)


def table_json(table: ResultTable) -> dict:
    return {"columns": list(table.columns), "rows": table.to_json()}


def error_json(exc: BaseException) -> dict:
    out = {"error": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, CypherSyntaxError):
        out["position"] = exc.position
    diagnostics = getattr(exc, "diagnostics", None)
    if diagnostics:
        out["diagnostics"] = list(diagnostics)
    return out


def graph_stats(graph: PropertyGraph) -> dict:
    return {"nodes": graph.node_count, "edges": graph.edge_count,
            "labels": dict(sorted(graph.label_counts().items())),
            "relationship_types": dict(sorted(graph.rel_type_counts().items()))}


class Engine:
    """Read-only question answering over one graph snapshot."""

    def __init__(self, graph: PropertyGraph, backend: BackendConfig | None = None,
                 catalog: SchemaCatalog = CATALOG):
        self.graph = graph
        self.backend = backend
        self.catalog = catalog
        self.lexicon = Lexicon.from_graph(graph)

    def query(self, text: str, diag: Diagnostics | None = None) -> ResultTable:
        return execute(self.graph, parse(text), diag, check=False)

    def translate(self, question: str) -> TranslationResult:
        intent = classify_and_extract(question, self.lexicon)
        if isinstance(intent, Unsupported):
            raise UnsupportedQuestion(intent.reason)
        if self.backend is not None:
            try:
                text, ast = external_generate(question, self.catalog.schema_text(), self.backend,
                                              self.catalog)
                return TranslationResult(intent, text, ast, ["query from external backend"],
                                         source="external")
            except (BackendUnreachable, GeneratedQueryInvalid) as exc:
                # timeouts propagate; other backend failures fall back to the templates
                log.warning("external backend failed (%s); using template translation", exc)
                result = translate(intent, self.lexicon, self.catalog)
                result.notes.insert(0, f"external backend failed ({type(exc).__name__}); "
                                       f"template translation used")
                return result
        return translate(intent, self.lexicon, self.catalog)

    def ask(self, question: str) -> AnswerReport:
        translation = self.translate(question)
        table = execute(self.graph, translation.ast, Diagnostics(), check=False)
        return compose(question, translation, table)


__all__ = ["Engine", "StockKGError", "error_json", "graph_stats", "table_json", "to_json_text"]
