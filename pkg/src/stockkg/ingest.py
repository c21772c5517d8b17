"""Build the market graph from flat record files.

File formats (UTF-8):

* ``companies.csv``   stock_code, stock_nm, stock_abbrv, stock_nm_eng, listing_dt,
  market_nm, sector, outstanding_shares, kospi200_item_yn (Y/N), competitors (``;``-separated)
* ``prices.csv``      stock_code, date, open, close, high, low
* ``indicators.csv``  stock_code, date, per, pbr, eps (empty cell = absent)
* ``statements.jsonl`` one object per line: stock_code, year, quarter (optional),
  revenue, operating_income, net_income, total_assets, total_liabilities,
  total_equity, capital_stock (each optional)

Bad records are collected into an :class:`IngestReport`; ingestion goes on.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import logging
import math
import os
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import BadDate, IoFailure, MalformedRecord
from .graph import OUT, PropertyGraph
from .schema import CATALOG, DEFAULT_INDEXES, SchemaCatalog

log = logging.getLogger(__name__)

COMPANIES_FILE = "companies.csv"
PRICES_FILE = "prices.csv"
INDICATORS_FILE = "indicators.csv"
STATEMENTS_FILE = "statements.jsonl"

COMPANY_COLUMNS = ("stock_code", "stock_nm", "stock_abbrv", "stock_nm_eng", "listing_dt",
                   "market_nm", "sector", "outstanding_shares", "kospi200_item_yn", "competitors")
PRICE_COLUMNS = ("stock_code", "date", "open", "close", "high", "low")
INDICATOR_COLUMNS = ("stock_code", "date", "per", "pbr", "eps")
STATEMENT_METRICS = ("revenue", "operating_income", "net_income", "total_assets",
                     "total_liabilities", "total_equity", "capital_stock")

_CODE = re.compile(r"^[0-9A-Z]{6}$")


def parse_date(text: str) -> dt.date:
    if not isinstance(text, str) or not re.fullmatch(r"\d{8}", text):
        raise BadDate(f"expected YYYYMMDD, got {text!r}")
    try:
        return dt.date(int(text[:4]), int(text[4:6]), int(text[6:]))
    except ValueError as exc:
        raise BadDate(f"invalid calendar date {text!r}") from exc


def quarter_of(month: int) -> int:
    return (month - 1) // 3 + 1


# -- records ---------------------------------------------------------------

@dataclass
class CompanyRecord:
    stock_code: str
    stock_nm: str = ""
    stock_abbrv: str = ""
    stock_nm_eng: str = ""
    listing_dt: str = ""
    market_nm: str = ""
    sector: str = ""
    outstanding_shares: int = 0
    kospi200_item_yn: bool = False
    competitors: list = field(default_factory=list)
    source: tuple = ("", None)

    def check(self) -> None:
        if not _CODE.match(self.stock_code or ""):
            raise MalformedRecord(f"bad stock_code {self.stock_code!r}")
        try:
            parse_date(self.listing_dt)
        except BadDate as exc:
            raise MalformedRecord(f"listing_dt: {exc}") from exc
        if isinstance(self.outstanding_shares, bool) or not isinstance(self.outstanding_shares, int) \
                or self.outstanding_shares < 0:
            raise MalformedRecord("outstanding_shares must be a non-negative integer")
        if not isinstance(self.kospi200_item_yn, bool):
            raise MalformedRecord("kospi200_item_yn must be boolean")


@dataclass
class DailyPriceRecord:
    stock_code: str
    date: str
    open: float
    close: float
    high: float
    low: float
    source: tuple = ("", None)

    def check(self) -> None:
        try:
            parse_date(self.date)
        except BadDate as exc:
            raise MalformedRecord(str(exc)) from exc
        prices = (self.open, self.close, self.high, self.low)
        if not all(isinstance(p, float) and math.isfinite(p) and p >= 0 for p in prices):
            raise MalformedRecord("prices must be finite non-negative floats")
        if self.low > min(self.open, self.close) or self.high < max(self.open, self.close):
            raise MalformedRecord("high/low do not bracket open/close")


@dataclass
class IndicatorRecord:
    stock_code: str
    date: str
    per: float | None = None
    pbr: float | None = None
    eps: float | None = None
    source: tuple = ("", None)

    def check(self) -> None:
        try:
            parse_date(self.date)
        except BadDate as exc:
            raise MalformedRecord(str(exc)) from exc
        for name in ("per", "pbr", "eps"):
            v = getattr(self, name)
            if v is not None and not (isinstance(v, float) and math.isfinite(v)):
                raise MalformedRecord(f"{name} must be a finite float")


@dataclass
class FinStatementRecord:
    stock_code: str
    year: int
    quarter: int | None = None
    revenue: float | None = None
    operating_income: float | None = None
    net_income: float | None = None
    total_assets: float | None = None
    total_liabilities: float | None = None
    total_equity: float | None = None
    capital_stock: float | None = None
    source: tuple = ("", None)

    def check(self) -> None:
        if isinstance(self.year, bool) or not isinstance(self.year, int) or not 1900 <= self.year <= 2999:
            raise MalformedRecord(f"year out of range: {self.year!r}")
        if self.quarter is not None and self.quarter not in (1, 2, 3, 4):
            raise MalformedRecord(f"quarter must be 1-4, got {self.quarter!r}")
        for name in STATEMENT_METRICS:
            v = getattr(self, name)
            if v is not None and not (isinstance(v, float) and math.isfinite(v)):
                raise MalformedRecord(f"{name} must be a finite float")

    def metrics(self) -> dict:
        return {m: getattr(self, m) for m in STATEMENT_METRICS if getattr(self, m) is not None}


# -- report ----------------------------------------------------------------

@dataclass
class IngestReport:
    loaded: dict = field(default_factory=dict)
    rejected: list = field(default_factory=list)
    unresolved_competitors: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    def count(self, kind: str, n: int = 1) -> None:
        self.loaded[kind] = self.loaded.get(kind, 0) + n

    def reject(self, source: tuple, reason: str) -> None:
        file, line = source if source else ("", None)
        self.rejected.append({"file": file, "line": line, "reason": reason})

    def warn(self, message: str) -> None:
        log.warning(message)
        self.warnings.append(message)

    def merge(self, other: IngestReport) -> IngestReport:
        for k, v in other.loaded.items():
            self.count(k, v)
        self.rejected.extend(other.rejected)
        self.unresolved_competitors.extend(other.unresolved_competitors)
        self.warnings.extend(other.warnings)
        return self

    def to_json(self) -> dict:
        return {
            "loaded": dict(sorted(self.loaded.items())),
            "rejected": list(self.rejected),
            "unresolved_competitors": list(self.unresolved_competitors),
        }


# -- file readers ----------------------------------------------------------

def _float_or_none(text: str, name: str):
    text = (text or "").strip()
    if not text:
        return None
    try:
        return float(text)
    except ValueError as exc:
        raise MalformedRecord(f"{name}: not a number: {text!r}") from exc


def _required_float(text: str, name: str) -> float:
    v = _float_or_none(text, name)
    if v is None:
        raise MalformedRecord(f"{name} is required")
    return v


def _parse_bool(text: str) -> bool:
    t = (text or "").strip().upper()
    if t in ("Y", "YES", "TRUE", "1"):
        return True
    if t in ("N", "NO", "FALSE", "0", ""):
        return False
    raise MalformedRecord(f"kospi200_item_yn: expected Y/N, got {text!r}")


def _read_csv(path: Path, columns: tuple, parse_row, report: IngestReport) -> list:
    out = []
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            missing = [c for c in columns if c not in (reader.fieldnames or [])]
            if missing:
                report.reject((path.name, 1), f"missing columns: {', '.join(missing)}")
                return out
            for row in reader:
                source = (path.name, reader.line_num)
                try:
                    rec = parse_row(row)
                    rec.source = source
                    rec.check()
                except MalformedRecord as exc:
                    report.reject(source, str(exc))
                    continue
                out.append(rec)
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    return out


def _company_row(row: dict) -> CompanyRecord:
    shares_text = (row["outstanding_shares"] or "").strip() or "0"
    try:
        shares = int(shares_text)
    except ValueError as exc:
        raise MalformedRecord(f"outstanding_shares: not an integer: {shares_text!r}") from exc
    competitors = [c.strip() for c in (row["competitors"] or "").split(";") if c.strip()]
    return CompanyRecord(
        stock_code=(row["stock_code"] or "").strip(),
        stock_nm=row["stock_nm"] or "",
        stock_abbrv=row["stock_abbrv"] or "",
        stock_nm_eng=row["stock_nm_eng"] or "",
        listing_dt=(row["listing_dt"] or "").strip(),
        market_nm=row["market_nm"] or "",
        sector=(row["sector"] or "").strip(),
        outstanding_shares=shares,
        kospi200_item_yn=_parse_bool(row["kospi200_item_yn"]),
        competitors=competitors,
    )


def _price_row(row: dict) -> DailyPriceRecord:
    return DailyPriceRecord(
        stock_code=(row["stock_code"] or "").strip(),
        date=(row["date"] or "").strip(),
        **{k: _required_float(row[k], k) for k in ("open", "close", "high", "low")},
    )


def _indicator_row(row: dict) -> IndicatorRecord:
    return IndicatorRecord(
        stock_code=(row["stock_code"] or "").strip(),
        date=(row["date"] or "").strip(),
        **{k: _float_or_none(row[k], k) for k in ("per", "pbr", "eps")},
    )


def read_companies(path, report: IngestReport) -> list[CompanyRecord]:
    return _read_csv(Path(path), COMPANY_COLUMNS, _company_row, report)


def read_prices(path, report: IngestReport) -> list[DailyPriceRecord]:
    return _read_csv(Path(path), PRICE_COLUMNS, _price_row, report)


def read_indicators(path, report: IngestReport) -> list[IndicatorRecord]:
    return _read_csv(Path(path), INDICATOR_COLUMNS, _indicator_row, report)


def _statement_obj(obj) -> FinStatementRecord:
    if not isinstance(obj, dict):
        raise MalformedRecord("statement line is not a JSON object")
    unknown = set(obj) - {"stock_code", "year", "quarter", *STATEMENT_METRICS}
    if unknown:
        raise MalformedRecord(f"unknown fields: {', '.join(sorted(unknown))}")
    if "stock_code" not in obj or "year" not in obj:
        raise MalformedRecord("stock_code and year are required")
    metrics = {}
    for name in STATEMENT_METRICS:
        v = obj.get(name)
        if v is None:
            continue
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise MalformedRecord(f"{name}: not a number: {v!r}")
        metrics[name] = float(v)
    return FinStatementRecord(stock_code=str(obj["stock_code"]), year=obj["year"],
                              quarter=obj.get("quarter"), **metrics)


def read_statements(path, report: IngestReport) -> list[FinStatementRecord]:
    path = Path(path)
    out = []
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                source = (path.name, lineno)
                try:
                    try:
                        obj = json.loads(line)
                    except json.JSONDecodeError as exc:
                        raise MalformedRecord(f"invalid JSON: {exc.msg}") from exc
                    rec = _statement_obj(obj)
                    rec.source = source
                    rec.check()
                except MalformedRecord as exc:
                    report.reject(source, str(exc))
                    continue
                out.append(rec)
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    return out


# -- graph construction ----------------------------------------------------

def new_graph() -> PropertyGraph:
    """Empty graph with the equality indexes the queries anchor on."""
    g = PropertyGraph()
    for label, prop in DEFAULT_INDEXES:
        g.declare_index(label, prop)
    return g


def _one(ids: set):
    return min(ids) if ids else None


def _ensure_edge(graph: PropertyGraph, src: int, rel: str, dst: int) -> None:
    for e in graph.neighbors(src, OUT, (rel,)):
        if e.dst == dst:
            return
    graph.create_edge(src, rel, dst)


def _year_node(graph: PropertyGraph, year: int) -> int:
    node = _one(graph.find_nodes("Year", "year", year))
    if node is None:
        node = graph.create_node({"Year"}, {"year": year})
    return node


def _quarter_node(graph: PropertyGraph, year: int, quarter: int) -> int:
    for nid in sorted(graph.find_nodes("Quarter", "quarter", quarter)):
        if graph.node(nid).props.get("year") == year:
            return nid
    return graph.create_node({"Quarter"}, {"year": year, "quarter": quarter})


def build_calendar(graph: PropertyGraph, date_text: str) -> int:
    """Return the Date node for ``date_text`` (YYYYMMDD), creating it and its
    Year/Quarter links on first use."""
    day = parse_date(date_text)
    with graph.lock.write():
        node = _one(graph.find_nodes("Date", "date", date_text))
        if node is None:
            node = graph.create_node({"Date"}, {"date": date_text, "year": day.year,
                                                "month": day.month, "day": day.day})
        _ensure_edge(graph, node, "IN_YEAR", _year_node(graph, day.year))
        _ensure_edge(graph, node, "IN_QUARTER",
                     _quarter_node(graph, day.year, quarter_of(day.month)))
    return node


def _company_props(rec: CompanyRecord) -> dict:
    props = {
        "stock_code": rec.stock_code,
        "stock_nm": rec.stock_nm,
        "stock_abbrv": rec.stock_abbrv,
        "stock_nm_eng": rec.stock_nm_eng,
        "listing_dt": rec.listing_dt,
        "market_nm": rec.market_nm,
        "outstanding_shares": rec.outstanding_shares,
        "kospi200_item_yn": rec.kospi200_item_yn,
        "compete_stock_code_li": list(dict.fromkeys(rec.competitors)),
    }
    return {k: v for k, v in props.items() if v != ""}


def _company_index(graph: PropertyGraph) -> dict[str, int]:
    return {n.props["stock_code"]: n.id for n in graph.nodes("Company")
            if isinstance(n.props.get("stock_code"), str)}


def _sector_node(graph: PropertyGraph, name: str) -> int:
    node = _one(graph.find_nodes("Sector", "stock_sector_nm", name))
    if node is None:
        node = graph.create_node({"Sector"}, {"stock_sector_nm": name})
    return node


def ingest_companies(graph: PropertyGraph, records, catalog: SchemaCatalog = CATALOG) -> IngestReport:
    """Create Company and Sector nodes, BELONGS_TO edges and symmetric COMPETES_WITH edges."""
    report = IngestReport()
    latest: dict[str, CompanyRecord] = {}
    for rec in records:
        try:
            rec.check()
        except MalformedRecord as exc:
            report.reject(rec.source, str(exc))
            continue
        if rec.stock_code in latest:
            report.warn(f"duplicate company {rec.stock_code}: later record replaces earlier one")
        latest[rec.stock_code] = rec

    with graph.lock.write():
        existing = _company_index(graph)
        for code, rec in latest.items():
            props = _company_props(rec)
            problems = catalog.validate_node("Company", props)
            if not rec.sector:
                problems.append("sector is required")
            if problems:
                report.reject(rec.source, "; ".join(map(str, problems)))
                continue
            node = existing.get(code)
            if node is not None:
                report.warn(f"company {code} already in graph: properties replaced")
                graph.set_properties(node, props, replace=True)
                for e in graph.neighbors(node, OUT, ("BELONGS_TO",)):
                    graph.remove_edge(e.id)
            else:
                node = graph.create_node({"Company"}, props)
                existing[code] = node
            sector = _sector_node(graph, rec.sector)
            graph.create_edge(node, "BELONGS_TO", sector)
            report.count("Company")

        # competitor wiring only after every company is present
        for code, rec in latest.items():
            src = existing.get(code)
            if src is None or rec.stock_code not in existing:
                continue
            names = []
            for comp in dict.fromkeys(rec.competitors):
                if comp == code:
                    report.warn(f"company {code} lists itself as a competitor; ignored")
                    continue
                dst = existing.get(comp)
                if dst is None:
                    report.unresolved_competitors.append({"stock_code": code, "competitor": comp})
                    continue
                names.append(graph.node(dst).props.get("stock_nm", comp))
                _ensure_edge(graph, src, "COMPETES_WITH", dst)
                _ensure_edge(graph, dst, "COMPETES_WITH", src)
            graph.set_properties(src, {"compete_stock_nm_li": names})
    report.loaded.setdefault("Company", 0)
    return report


def _attach(graph, catalog, report, rec, company: int | None, label: str, props: dict,
            has_rel: str) -> int | None:
    if company is None:
        report.reject(rec.source, f"unknown stock_code {rec.stock_code!r}")
        return None
    problems = catalog.validate_node(label, props)
    if problems:
        report.reject(rec.source, "; ".join(map(str, problems)))
        return None
    node = graph.create_node({label}, props)
    graph.create_edge(company, has_rel, node)
    report.count(label)
    return node


def ingest_timeseries(graph: PropertyGraph, prices=(), indicators=(), statements=(),
                      catalog: SchemaCatalog = CATALOG) -> IngestReport:
    """Attach StockPrice, Indicator and FinancialStatements nodes to their companies."""
    report = IngestReport()
    with graph.lock.write():
        companies = _company_index(graph)

        latest: dict[tuple, DailyPriceRecord] = {}
        for rec in prices:
            key = (rec.stock_code, rec.date)
            if key in latest:
                report.warn(f"duplicate price for {rec.stock_code} on {rec.date}: last record wins")
            latest[key] = rec
        for rec in latest.values():
            try:
                rec.check()
            except MalformedRecord as exc:
                report.reject(rec.source, str(exc))
                continue
            props = {"stck_oprc": rec.open, "stck_clpr": rec.close,
                     "stck_hgpr": rec.high, "stck_lwpr": rec.low}
            node = _attach(graph, catalog, report, rec, companies.get(rec.stock_code),
                           "StockPrice", props, "HAS_STOCK_PRICE")
            if node is not None:
                graph.create_edge(node, "RECORDED_ON", build_calendar(graph, rec.date))

        for rec in indicators:
            try:
                rec.check()
            except MalformedRecord as exc:
                report.reject(rec.source, str(exc))
                continue
            props = {k: getattr(rec, k) for k in ("per", "pbr", "eps") if getattr(rec, k) is not None}
            node = _attach(graph, catalog, report, rec, companies.get(rec.stock_code),
                           "Indicator", props, "HAS_INDICATOR")
            if node is not None:
                graph.create_edge(node, "MEASURED_ON", build_calendar(graph, rec.date))

        for rec in statements:
            try:
                rec.check()
            except MalformedRecord as exc:
                report.reject(rec.source, str(exc))
                continue
            node = _attach(graph, catalog, report, rec, companies.get(rec.stock_code),
                           "FinancialStatements", rec.metrics(), "HAS_FINANCIAL_STATEMENTS")
            if node is None:
                continue
            graph.create_edge(node, "FOR_YEAR", _year_node(graph, rec.year))
            if rec.quarter is not None:
                graph.create_edge(node, "FOR_QUARTER", _quarter_node(graph, rec.year, rec.quarter))
    return report


def ingest_directory(directory, graph: PropertyGraph | None = None,
                     catalog: SchemaCatalog = CATALOG) -> tuple[PropertyGraph, IngestReport]:
    """Load every record file found in ``directory`` (companies.csv is mandatory)."""
    directory = Path(directory)
    if graph is None:
        graph = new_graph()
    report = IngestReport()
    companies_path = directory / COMPANIES_FILE
    if not companies_path.exists():
        raise IoFailure(f"{companies_path} not found")
    companies = read_companies(companies_path, report)
    report.merge(ingest_companies(graph, companies, catalog))

    def maybe(name, reader):
        path = directory / name
        return reader(path, report) if path.exists() else []

    prices = maybe(PRICES_FILE, read_prices)
    indicators = maybe(INDICATORS_FILE, read_indicators)
    statements = maybe(STATEMENTS_FILE, read_statements)
    report.merge(ingest_timeseries(graph, prices, indicators, statements, catalog))
    return graph, report


def record_files(directory) -> list[str]:
    names = (COMPANIES_FILE, PRICES_FILE, INDICATORS_FILE, STATEMENTS_FILE)
    return [n for n in names if os.path.exists(os.path.join(directory, n))]
