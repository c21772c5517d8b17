"""Embedded stock-market knowledge graph with a Cypher-subset query engine."""

from .answer import AnswerReport, compose
from .core import Engine
from .cypher import parse, render
from .executor import Diagnostics, ResultTable, execute, run
from .graph import PropertyGraph, load, persist, structural_hash
from .ingest import ingest_directory
from .schema import CATALOG
from .translate import Lexicon, classify_and_extract, translate

__version__ = "0.1.0"

__all__ = [
           "CATALOG",
           "AnswerReport",
           "Diagnostics",
           "Engine",
           "Lexicon",
           "PropertyGraph",
           "ResultTable",
           "classify_and_extract",
           "compose",
           "execute",
           "ingest_directory",
           "load",
           "parse",
           "persist",
           "render",
           "run",
           "structural_hash",
           "translate",
]
