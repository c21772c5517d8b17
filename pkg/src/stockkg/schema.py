"""Stock-market graph schema: node types, relationship endpoints, property catalog."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from . import values as V

# value kinds accepted by the catalog; NUMBER admits Integer or Float
TEXT = "Text"
INTEGER = "Integer"
NUMBER = "Number"
BOOLEAN = "Boolean"
TEXT_LIST = "TextList"


@dataclass(frozen=True)
class PropertySpec:
    name: str
    kind: str
    required: bool = False
    description: str = ""

    def accepts(self, value) -> bool:
        if value is None:
            return not self.required
        kind = V.kind_of(value)
        if self.kind == TEXT:
            return kind == V.TEXT
        if self.kind == INTEGER:
            return kind == V.INTEGER
        if self.kind == NUMBER:
            return kind in (V.INTEGER, V.FLOAT) and math.isfinite(value)
        if self.kind == BOOLEAN:
            return kind == V.BOOLEAN
        if self.kind == TEXT_LIST:
            return kind == V.TEXT_LIST
        return False


@dataclass(frozen=True)
class NodeType:
    label: str
    properties: tuple

    def prop(self, name: str) -> PropertySpec | None:
        for p in self.properties:
            if p.name == name:
                return p
        return None

    @property
    def property_names(self) -> list[str]:
        return [p.name for p in self.properties]


@dataclass(frozen=True)
class RelType:
    name: str
    src: str
    dst: str


@dataclass(frozen=True)
class Violation:
    kind: str  # unknown_label | unknown_property | wrong_kind | missing_required | bad_endpoint | unknown_rel_type
    subject: str
    detail: str

    def __str__(self) -> str:
        return f"{self.kind}: {self.subject}: {self.detail}"


def _p(name, kind, description, required=False):
    return PropertySpec(name, kind, required, description)


NODE_TYPES = (
    NodeType("Company", (
        _p("stock_code", TEXT, "Stock code", required=True),
        _p("stock_nm", TEXT, "Company name"),
        _p("stock_abbrv", TEXT, "Shortened company name"),
        _p("stock_nm_eng", TEXT, "Company name (English)"),
        _p("listing_dt", TEXT, "Listing date (YYYYMMDD)"),
        _p("compete_stock_nm_li", TEXT_LIST, "List of competitor company names"),
        _p("compete_stock_code_li", TEXT_LIST, "List of competitor stock codes"),
        _p("market_nm", TEXT, "Market name"),
        _p("outstanding_shares", INTEGER, "Number of outstanding shares"),
        _p("kospi200_item_yn", BOOLEAN, "KOSPI 200 inclusion"),
    )),
    NodeType("Sector", (
        _p("stock_sector_nm", TEXT, "Standard industry classification name", required=True),
    )),
    NodeType("Indicator", (
        _p("pbr", NUMBER, "Price-to-Book Ratio"),
        _p("per", NUMBER, "Price-to-Earnings Ratio"),
        _p("eps", NUMBER, "Earnings Per Share"),
    )),
    NodeType("StockPrice", (
        _p("stck_oprc", NUMBER, "Open price"),
        _p("stck_clpr", NUMBER, "Close price"),
        _p("stck_hgpr", NUMBER, "High price"),
        _p("stck_lwpr", NUMBER, "Low price"),
    )),
    NodeType("FinancialStatements", (
        _p("revenue", NUMBER, "Revenue"),
        _p("operating_income", NUMBER, "Operating income"),
        _p("net_income", NUMBER, "Net income"),
        _p("total_assets", NUMBER, "Total assets"),
        _p("total_liabilities", NUMBER, "Total liabilities"),
        _p("total_equity", NUMBER, "Total equity"),
        _p("capital_stock", NUMBER, "Capital stock"),
    )),
    NodeType("Date", (
        _p("date", TEXT, "Date (YYYYMMDD)", required=True),
        _p("year", INTEGER, "Year"),
        _p("month", INTEGER, "Month"),
        _p("day", INTEGER, "Day"),
    )),
    NodeType("Quarter", (
        _p("year", INTEGER, "Year", required=True),
        _p("quarter", INTEGER, "Quarter (numeric)", required=True),
    )),
    NodeType("Year", (
        _p("year", INTEGER, "Year", required=True),
    )),
)

REL_TYPES = (
    RelType("HAS_STOCK_PRICE", "Company", "StockPrice"),
    RelType("HAS_INDICATOR", "Company", "Indicator"),
    RelType("HAS_FINANCIAL_STATEMENTS", "Company", "FinancialStatements"),
    RelType("BELONGS_TO", "Company", "Sector"),
    RelType("COMPETES_WITH", "Company", "Company"),
    RelType("RECORDED_ON", "StockPrice", "Date"),
    RelType("MEASURED_ON", "Indicator", "Date"),
    RelType("FOR_QUARTER", "FinancialStatements", "Quarter"),
    RelType("FOR_YEAR", "FinancialStatements", "Year"),
    RelType("IN_YEAR", "Date", "Year"),
    RelType("IN_QUARTER", "Date", "Quarter"),
)

# equality anchors used by the ingest pipeline and the planner
DEFAULT_INDEXES = (
    ("Company", "stock_code"),
    ("Company", "stock_abbrv"),
    ("Sector", "stock_sector_nm"),
    ("Year", "year"),
    ("Date", "date"),
)


class SchemaCatalog:
    """Immutable catalog of node types and relationship types."""

    def __init__(self, node_types=NODE_TYPES, rel_types=REL_TYPES):
        self.node_types = {nt.label: nt for nt in node_types}
        self.rel_types = {rt.name: rt for rt in rel_types}

    def validate_node(self, label: str, props: dict) -> list[Violation]:
        nt = self.node_types.get(label)
        if nt is None:
            return [Violation("unknown_label", label, "not a node type of the schema")]
        out = []
        for name, value in props.items():
            spec = nt.prop(name)
            if spec is None:
                out.append(Violation("unknown_property", f"{label}.{name}",
                                     "not a property of this node type"))
            elif value is not None and not spec.accepts(value):
                out.append(Violation("wrong_kind", f"{label}.{name}",
                                     f"expected {spec.kind}, got {V.kind_of(value)}"))
        for spec in nt.properties:
            if spec.required and props.get(spec.name) is None:
                out.append(Violation("missing_required", f"{label}.{spec.name}",
                                     "required property is missing"))
        return out

    def validate_edge(self, rel_type: str, src_labels, dst_labels) -> list[Violation]:
        rt = self.rel_types.get(rel_type)
        if rt is None:
            return [Violation("unknown_rel_type", rel_type, "not a relationship type of the schema")]
        if rt.src in src_labels and rt.dst in dst_labels:
            return []
        return [Violation("bad_endpoint", rel_type,
                          f"expects {rt.src} -> {rt.dst}, got "
                          f"{'/'.join(sorted(src_labels))} -> {'/'.join(sorted(dst_labels))}")]

    def property_names(self, label: str | None = None) -> set[str]:
        if label is not None:
            nt = self.node_types.get(label)
            return set(nt.property_names) if nt else set()
        return {p.name for nt in self.node_types.values() for p in nt.properties}

    def schema_text(self) -> str:
        lines = ["Node types:"]
        for nt in self.node_types.values():
            lines.append(nt.label)
            for p in nt.properties:
                req = ", required" if p.required else ""
                lines.append(f"  - {p.name} ({p.kind}{req}): {p.description}")
        lines.append("")
        lines.append("Relationship types:")
        for rt in self.rel_types.values():
            lines.append(f"{rt.name}: {rt.src} -> {rt.dst}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        return {
            "node_types": [
                {"label": nt.label,
                 "properties": [{"name": p.name, "kind": p.kind, "required": p.required,
                                 "description": p.description} for p in nt.properties]}
                for nt in self.node_types.values()
            ],
            "relationship_types": [
                {"type": rt.name, "from": rt.src, "to": rt.dst} for rt in self.rel_types.values()
            ],
            "indexes": [{"label": label, "property": prop} for label, prop in DEFAULT_INDEXES],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


CATALOG = SchemaCatalog()


def validate_node(label: str, props: dict) -> list[Violation]:
    return CATALOG.validate_node(label, props)


def validate_edge(rel_type: str, src_labels, dst_labels) -> list[Violation]:
    return CATALOG.validate_edge(rel_type, src_labels, dst_labels)


def schema_text() -> str:
    return CATALOG.schema_text()
