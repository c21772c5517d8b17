"""Property values and their comparison semantics.

A property value is one of ``None`` (Null), ``str``, ``int`` (64-bit),
``float``, ``bool`` or a ``list`` of ``str``.  Python's ``bool`` is a
subclass of ``int``, so every check here tests for ``bool`` first.
"""

from __future__ import annotations

import math
from typing import Any

from .errors import InvalidValue

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1

NULL = "null"
TEXT = "text"
INTEGER = "integer"
FLOAT = "float"
BOOLEAN = "boolean"
TEXT_LIST = "text_list"


def kind_of(value: Any) -> str:
    """Return the value-kind tag of a storable property value."""
    if value is None:
        return NULL
    if isinstance(value, bool):
        return BOOLEAN
    if isinstance(value, int):
        return INTEGER
    if isinstance(value, float):
        return FLOAT
    if isinstance(value, str):
        return TEXT
    if isinstance(value, (list, tuple)):
        return TEXT_LIST
    raise InvalidValue(f"unsupported property value type: {type(value).__name__}")


def check_value(value: Any) -> Any:
    """Validate ``value`` for storage and return the stored form.

    Tuples are stored as lists.  Raises :class:`InvalidValue` for anything
    outside the value model.
    """
    kind = kind_of(value)
    if kind == INTEGER and not INT64_MIN <= value <= INT64_MAX:
        raise InvalidValue(f"integer out of 64-bit range: {value}")
    if kind == TEXT_LIST:
        items = list(value)
        for item in items:
            if not isinstance(item, str):
                raise InvalidValue("text list elements must be non-null text")
        return items
    return value


def check_props(props: dict | None) -> dict:
    out = {}
    for key, value in (props or {}).items():
        if not isinstance(key, str) or not key:
            raise InvalidValue(f"property names must be non-empty text, got {key!r}")
        out[key] = check_value(value)
    return out


def is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def index_key(value: Any):
    """Hashable key under which ``value`` is indexed, or None if it can never match.

    Integer and Float share the numeric key space because equality compares
    numerically across the two variants.
    """
    if value is None:
        return None
    if isinstance(value, bool):
        return ("b", value)
    if is_number(value):
        if isinstance(value, float) and math.isnan(value):
            return None
        return ("n", value)
    if isinstance(value, str):
        return ("s", value)
    if isinstance(value, (list, tuple)):
        return ("l", tuple(value))
    return None


def equals(a: Any, b: Any) -> bool | None:
    """Ternary equality: True, False, or None when either side is Null."""
    if a is None or b is None:
        return None
    if is_number(a) and is_number(b):
        return a == b
    if isinstance(a, bool) and isinstance(b, bool):
        return a == b
    if isinstance(a, str) and isinstance(b, str):
        return a == b
    if isinstance(a, (list, tuple)) and isinstance(b, (list, tuple)):
        if len(a) != len(b):
            return False
        saw_null = False
        for x, y in zip(a, b):
            r = equals(x, y)
            if r is False:
                return False
            if r is None:
                saw_null = True
        return None if saw_null else True
    ida = getattr(a, "entity_key", None)
    idb = getattr(b, "entity_key", None)
    if ida is not None and idb is not None:
        return ida == idb
    return False


class Incomparable(Exception):
    """Raised by :func:`order` for an ordering comparison across kinds."""


def order(a: Any, b: Any) -> int | None:
    """Three-way ordering comparison for ``<``-style operators.

    Returns -1/0/1, None when either side is Null (or a NaN is involved),
    and raises :class:`Incomparable` on a kind mismatch.
    """
    if a is None or b is None:
        return None
    if is_number(a) and is_number(b):
        if (isinstance(a, float) and math.isnan(a)) or (isinstance(b, float) and math.isnan(b)):
            return None
        return (a > b) - (a < b)
    if isinstance(a, bool) and isinstance(b, bool):
        return (a > b) - (a < b)
    if isinstance(a, str) and isinstance(b, str):
        return (a > b) - (a < b)
    raise Incomparable(f"cannot order {type(a).__name__} against {type(b).__name__}")


def sort_key(value: Any):
    """Total-order key used by ORDER BY across mixed kinds.

    Boolean < numbers (NaN after all numbers) < Text < lists < nodes < edges
    < Null.  Null sorting greatest puts it last under ASC and first under DESC.
    """
    if value is None:
        return (9,)
    if isinstance(value, bool):
        return (1, value)
    if is_number(value):
        if isinstance(value, float) and math.isnan(value):
            return (2, 1, 0)
        return (2, 0, value)
    if isinstance(value, str):
        return (3, value)
    if isinstance(value, (list, tuple)):
        return (4, tuple(sort_key(v) for v in value))
    ek = getattr(value, "entity_key", None)
    if ek is not None:
        return (5, ek)
    return (8, repr(value))
