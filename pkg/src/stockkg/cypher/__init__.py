"""Lexer, parser, binder and renderer for the supported Cypher subset."""

from . import ast
from .binder import bind
from .lexer import Token, tokenize
from .parser import parse, parse_expr
from .render import render, render_expr

__all__ = ["Token", "ast", "bind", "parse", "parse_expr", "render", "render_expr", "tokenize"]
