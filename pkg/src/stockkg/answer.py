"""Deterministic answer composition over query results.

Narrative sentences come from fixed templates.  Every number a sentence
mentions is formatted with the same helpers used for the attached table
slices, so :func:`check_faithfulness` can verify claims by token matching.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field

import numpy as np

from . import values as V
from .errors import MissingColumns, ShapeMismatch
from .executor import ResultTable
from .graph import Edge, Node
from .translate import (
    METRICS,
    CompetitorFinancialComparison,
    PriceLookup,
    SectorIndicatorScreen,
    TranslationResult,
    Unsupported,
    intent_to_json,
)

METRIC_LABELS = {"revenue": "revenue", "operating_income": "operating income",
                 "net_income": "net income"}
PRICE_FIELDS = (("stck_oprc", "open"), ("stck_clpr", "close"),
                ("stck_hgpr", "high"), ("stck_lwpr", "low"))
NA = "n/a"
THIN = "\u2009"

FOOTER = ("Leaders, year-over-year changes and the Undervalued/Growth buckets follow fixed rules "
          "defined by this tool (sector-mean comparison, strictly rising EPS, a band of one "
          "standard deviation above the sector PER mean). They formalize qualitative screening "
          "language and are not investment advice.")

SCREEN_RULES = (
    "Undervalued: mean PER below the sector PER mean, mean PBR below the sector PBR mean, "
    "and every reported EPS positive. "
    "Growth: not Undervalued, EPS strictly rising over at least two years, and mean PER at "
    "most the sector PER mean plus one standard deviation. "
    "Sector means and standard deviations are averaged over the years in the table.")

NUMBER_TOKEN = re.compile(r"-?\d+(?:\u2009\d{3})*(?:\.\d+)?")


# -- formatting ------------------------------------------------------------

def _clean_zero(text: str) -> str:
    return text[1:] if re.fullmatch(r"-0(\.0+)?", text) else text


def fmt_ratio(x) -> str:
    return NA if x is None else _clean_zero(f"{x:.2f}")


def fmt_currency(x) -> str:
    if x is None:
        return NA
    return _clean_zero(f"{int(round(x)):,}".replace(",", THIN))


def fmt_pct(x) -> str:
    return NA if x is None else _clean_zero(f"{x:.2f}") + "%"


def fmt_int(x) -> str:
    return NA if x is None else str(int(x))


def _num(value):
    """Numeric cell or None; anything else is a shape problem."""
    if value is None:
        return None
    if V.is_number(value):
        if isinstance(value, float) and math.isnan(value):
            return None
        return float(value)
    raise ShapeMismatch(f"expected a number, got {value!r}")


# -- report types ----------------------------------------------------------

@dataclass(frozen=True)
class TrendStat:
    company: str
    metric: str
    year: int
    value: float
    yoy_pct: float | None = None

    def to_json(self) -> dict:
        return {"company": self.company, "metric": self.metric, "year": self.year,
                "value": self.value, "yoy_pct": self.yoy_pct}


@dataclass(frozen=True)
class ScreenClassification:
    company_code: str
    company_name: str
    bucket: str  # Undervalued | Growth | Neither
    evidence: dict

    def to_json(self) -> dict:
        return {"company_code": self.company_code, "company_name": self.company_name,
                "bucket": self.bucket, "evidence": self.evidence}


@dataclass
class Section:
    heading: str
    narrative: list
    table: ResultTable | None = None

    def to_json(self) -> dict:
        table = None if self.table is None else {"columns": list(self.table.columns),
                                                  "rows": [list(r) for r in self.table.rows]}
        return {"heading": self.heading, "narrative": list(self.narrative), "table": table}

    def to_text(self) -> str:
        lines = [f"== {self.heading} =="]
        lines.extend(self.narrative)
        if self.table is not None:
            lines.append("")
            lines.append(self.table.to_text())
        return "\n".join(lines)


@dataclass
class AnswerReport:
    question: str
    intent: dict
    sections: list
    provenance: dict
    classifications: list = field(default_factory=list)
    trends: list = field(default_factory=list)
    footer: str = FOOTER

    def to_json(self) -> dict:
        return {
            "question": self.question,
            "intent": self.intent,
            "sections": [s.to_json() for s in self.sections],
            "classifications": [c.to_json() for c in self.classifications],
            "trends": [t.to_json() for t in self.trends],
            "provenance": self.provenance,
            "footer": self.footer,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), ensure_ascii=False, indent=2)

    def to_text(self) -> str:
        out = [f"Question: {self.question}", f"Intent: {self.intent.get('kind')}", ""]
        for section in self.sections:
            out.append(section.to_text())
            out.append("")
        out.append("== Provenance ==")
        out.append(f"Source: {self.provenance.get('source')}")
        out.append(f"Rows returned: {self.provenance.get('rows')}")
        for note in self.provenance.get("notes", []):
            out.append(f"Note: {note}")
        if self.provenance.get("query"):
            out.append("Query:")
            out.extend("  " + line for line in self.provenance["query"].splitlines())
        out.append("")
        out.append(self.footer)
        return "\n".join(out) + "\n"


def check_faithfulness(report: AnswerReport) -> list[str]:
    """Narrative numbers that do not appear in any attached table cell."""
    cell_tokens = set()
    for section in report.sections:
        if section.table is None:
            continue
        for row in section.table.rows:
            for cell in row:
                cell_tokens.update(NUMBER_TOKEN.findall(str(cell)))
    problems = []
    for section in report.sections:
        for sentence in section.narrative:
            for token in NUMBER_TOKEN.findall(sentence):
                if token not in cell_tokens:
                    problems.append(f"{section.heading}: {token!r} in {sentence!r}")
    return problems


def _slice(columns, rows) -> ResultTable:
    return ResultTable(list(columns), [list(r) for r in rows])


# -- sector statistics -----------------------------------------------------

def sector_stats(table: ResultTable) -> dict:
    """(year, metric) -> (mean, population std) over non-Null cells."""
    need = ("year", "per", "pbr", "eps")
    missing = [c for c in need if c not in table.columns]
    if missing:
        raise MissingColumns(f"missing columns: {', '.join(missing)}")
    groups: dict = {}
    for rec in table.records():
        year = rec["year"]
        for metric in ("per", "pbr", "eps"):
            try:
                v = _num(rec[metric])
            except ShapeMismatch:
                v = None
            if v is not None:
                groups.setdefault((year, metric), []).append(v)
    out = {}
    for key in sorted(groups, key=lambda k: (V.sort_key(k[0]), k[1])):
        arr = np.asarray(groups[key], dtype=np.float64)
        out[key] = (float(arr.mean()), float(arr.std(ddof=0)))
    return out


def _mean(xs):
    xs = [x for x in xs if x is not None]
    return float(np.mean(xs)) if xs else None


# -- comparison ------------------------------------------------------------

def _long_format(table: ResultTable):
    if "year" not in table.columns:
        raise ShapeMismatch("comparison table needs a year column")
    prefixes = [c[: -len("_stock_abbrv")] for c in table.columns if c.endswith("_stock_abbrv")]
    if not prefixes:
        raise ShapeMismatch("comparison table needs <prefix>_stock_abbrv columns")
    metrics = [m for m in METRICS if any(f"{p}_{m}" in table.columns for p in prefixes)]
    if not metrics:
        raise ShapeMismatch("comparison table has no metric columns")
    companies, years, values = [], [], {}
    for rec in table.records():
        year = rec["year"]
        if not V.is_number(year) or isinstance(year, float):
            raise ShapeMismatch(f"year must be an integer, got {year!r}")
        if year not in years:
            years.append(year)
        for p in prefixes:
            name = rec[f"{p}_stock_abbrv"]
            name = name if isinstance(name, str) else p
            if name not in companies:
                companies.append(name)
            for m in metrics:
                col = f"{p}_{m}"
                if col in rec:
                    values.setdefault((name, m, year), _num(rec[col]))
    return companies, sorted(years), metrics, values


def _leader(companies, metric, year, values):
    present = [(c, values.get((c, metric, year))) for c in companies]
    present = [(c, v) for c, v in present if v is not None]
    if not present:
        return None, None
    top = max(v for _, v in present)
    winners = [c for c, v in present if v == top]
    return ("tied" if len(winners) > 1 else winners[0]), top


def _yoy(values, company, metric, year):
    prev = values.get((company, metric, year - 1))
    cur = values.get((company, metric, year))
    if prev is None or cur is None or prev == 0:
        return None
    return 100.0 * (cur - prev) / abs(prev)


def summarize_comparison(table: ResultTable) -> tuple[list, list]:
    """Sections and TrendStats for a year x company metric table."""
    companies, years, metrics, values = _long_format(table)
    sections, trends = [], []
    for metric in metrics:
        label = METRIC_LABELS[metric]
        rows, narrative, leaders = [], [], {}
        for year in years:
            leader, top = _leader(companies, metric, year, values)
            leaders[year] = leader
            for c in companies:
                v = values.get((c, metric, year))
                pct = _yoy(values, c, metric, year)
                rows.append([fmt_int(year), c, fmt_currency(v), fmt_pct(pct), leader or NA])
                if v is not None:
                    trends.append(TrendStat(c, metric, year, v, pct))
            if leader is None:
                narrative.append(f"In {year}, no company reported {label}.")
            elif leader == "tied":
                narrative.append(f"In {year}, {label} was tied at {fmt_currency(top)}.")
            else:
                narrative.append(f"In {year}, {leader} led {label} with {fmt_currency(top)}.")
            for c in companies:
                if values.get((c, metric, year)) is None:
                    narrative.append(f"{c} has no {label} value for {year}; "
                                     f"it is excluded from that comparison.")
        for c in companies:
            for year in years:
                pct = _yoy(values, c, metric, year)
                if pct is not None:
                    narrative.append(f"{c} {label} changed by {fmt_pct(pct)} "
                                     f"from {year - 1} to {year}.")
        if len(years) >= 2:
            first, last = leaders[years[0]], leaders[years[-1]]
            if first is not None and last is not None and first != last:
                def who(x):
                    return "a tie" if x == "tied" else x
                narrative.append(f"Leadership in {label} changed from {who(first)} in {years[0]} "
                                 f"to {who(last)} in {years[-1]}.")
        heading = label[0].upper() + label[1:]
        sections.append(Section(heading, narrative,
                                _slice(("year", "company", metric, "yoy_pct", "leader"), rows)))
    if "revenue" in metrics:
        totals = {}
        for c in companies:
            vals = [values.get((c, "revenue", y)) for y in years]
            vals = [v for v in vals if v is not None]
            if vals:
                totals[c] = (float(np.sum(vals)), len(vals))
        if totals:
            top = max(t for t, _ in totals.values())
            winners = [c for c, (t, _) in totals.items() if t == top]
            rows = [[c, fmt_currency(t), fmt_int(n)] for c, (t, n) in totals.items()]
            if len(winners) > 1:
                sentence = f"Total revenue is tied at {fmt_currency(top)}."
            else:
                size = "larger" if len(totals) == 2 else "largest"
                sentence = (f"{winners[0]} has the {size} overall revenue scale, "
                            f"with {fmt_currency(top)} in total revenue.")
            sections.append(Section("Revenue scale", [sentence],
                                    _slice(("company", "total_revenue", "years_counted"), rows)))
    return sections, trends


# -- screening -------------------------------------------------------------

def _baseline_average(stats: dict, metric: str):
    entries = [v for (y, m), v in stats.items() if m == metric]
    if not entries:
        return None, None
    return _mean([mu for mu, _ in entries]), _mean([sd for _, sd in entries])


def classify(evidence: dict) -> str:
    """Apply the bucket rules to one company's evidence."""
    mu_per, sd_per = evidence["baseline"]["per"]
    mu_pbr, _ = evidence["baseline"]["pbr"]
    mean_per, mean_pbr = evidence["mean_per"], evidence["mean_pbr"]
    years = sorted(evidence["years"], key=int)
    eps = [evidence["years"][y]["eps"] for y in years]
    eps = [e for e in eps if e is not None]
    undervalued = (mean_per is not None and mu_per is not None and mean_per < mu_per
                   and mean_pbr is not None and mu_pbr is not None and mean_pbr < mu_pbr
                   and len(eps) > 0 and all(e > 0 for e in eps))
    if undervalued:
        return "Undervalued"
    rising = len(eps) >= 2 and all(a < b for a, b in zip(eps, eps[1:]))
    if (rising and mean_per is not None and mu_per is not None and sd_per is not None
            and mean_per <= mu_per + sd_per):
        return "Growth"
    return "Neither"


def summarize_screen(table: ResultTable) -> tuple[list, list]:
    """Sections and ScreenClassifications for a company x year indicator table."""
    if "stock_code" not in table.columns and "stock_abbrv" not in table.columns:
        raise ShapeMismatch("screen table needs stock_code or stock_abbrv")
    try:
        stats = sector_stats(table)
    except MissingColumns as exc:
        raise ShapeMismatch(str(exc)) from exc
    per_company: dict = {}
    names: dict = {}
    for rec in table.records():
        code = rec.get("stock_code")
        name = rec.get("stock_abbrv")
        key = code if isinstance(code, str) else name
        if not isinstance(key, str):
            continue
        names.setdefault(key, name if isinstance(name, str) else key)
        year = rec["year"]
        if not V.is_number(year) or isinstance(year, float):
            raise ShapeMismatch(f"year must be an integer, got {year!r}")
        slot = per_company.setdefault(key, {}).setdefault(year, {"per": [], "pbr": [], "eps": []})
        for metric in ("per", "pbr", "eps"):
            v = _num(rec[metric])
            if v is not None:
                slot[metric].append(v)
    baseline = {m: _baseline_average(stats, m) for m in ("per", "pbr", "eps")}
    classes = []
    for key in sorted(per_company):
        by_year = {str(y): {m: _mean(vals) for m, vals in d.items()}
                   for y, d in sorted(per_company[key].items())}
        evidence = {
            "years": by_year,
            "mean_per": _mean([d["per"] for d in by_year.values()]),
            "mean_pbr": _mean([d["pbr"] for d in by_year.values()]),
            "baseline": {m: list(baseline[m]) for m in ("per", "pbr")},
        }
        classes.append(ScreenClassification(key, names[key], classify(evidence), evidence))

    def by_per(c):
        mp = c.evidence["mean_per"]
        return (mp is None, mp if mp is not None else 0.0, c.company_code)

    classes.sort(key=by_per)

    base_rows = [[fmt_int(y), m.upper(), fmt_ratio(mu), fmt_ratio(sd)]
                 for (y, m), (mu, sd) in stats.items()]
    for m in ("per", "pbr", "eps"):
        mu, sd = baseline[m]
        if mu is not None:
            base_rows.append(["all years", m.upper(), fmt_ratio(mu), fmt_ratio(sd)])
    base_narr = ["Sector means and population standard deviations are computed per year "
                 "over the returned rows."]
    if baseline["per"][0] is not None:
        base_narr.append(f"Averaged over the years, the sector PER mean is "
                         f"{fmt_ratio(baseline['per'][0])} with standard deviation "
                         f"{fmt_ratio(baseline['per'][1])}.")
    if baseline["pbr"][0] is not None:
        base_narr.append(f"The sector PBR mean is {fmt_ratio(baseline['pbr'][0])}.")
    sections = [Section("Sector baselines", base_narr,
                        _slice(("year", "indicator", "mean", "std"), base_rows))]

    mu_per, sd_per = baseline["per"]
    mu_pbr = baseline["pbr"][0]
    for bucket in ("Undervalued", "Growth", "Neither"):
        members = [c for c in classes if c.bucket == bucket]
        rows, narrative = [], []
        for c in members:
            ev = c.evidence
            for y, d in ev["years"].items():
                rows.append([c.company_code, c.company_name, y, fmt_ratio(d["per"]),
                             fmt_ratio(d["pbr"]), fmt_ratio(d["eps"])])
            rows.append([c.company_code, c.company_name, "mean", fmt_ratio(ev["mean_per"]),
                         fmt_ratio(ev["mean_pbr"]), NA])
            label = f"{c.company_name} ({c.company_code})"
            if bucket == "Undervalued":
                narrative.append(f"{label}: mean PER {fmt_ratio(ev['mean_per'])} and mean PBR "
                                 f"{fmt_ratio(ev['mean_pbr'])} are below the sector means "
                                 f"{fmt_ratio(mu_per)} and {fmt_ratio(mu_pbr)}, and EPS is "
                                 f"positive in every reported year.")
            elif bucket == "Growth":
                eps = [d["eps"] for _, d in sorted(ev["years"].items()) if d["eps"] is not None]
                narrative.append(f"{label}: EPS rises every year from {fmt_ratio(eps[0])} to "
                                 f"{fmt_ratio(eps[-1])}, and mean PER "
                                 f"{fmt_ratio(ev['mean_per'])} is at most one standard "
                                 f"deviation above the sector mean.")
        if bucket == "Neither" and members:
            narrative.append("Not classified: " + ", ".join(
                f"{c.company_name} ({c.company_code})" for c in members) + ".")
        if not members:
            narrative.append(f"No company meets the {bucket.lower()} rule."
                             if bucket != "Neither" else "Every company was classified.")
        sections.append(Section(
            bucket if bucket != "Neither" else "Not classified", narrative,
            _slice(("stock_code", "stock_abbrv", "year", "per", "pbr", "eps"), rows)
            if rows else None))
    sections.append(Section("Screening rules", [SCREEN_RULES]))
    return sections, classes


# -- price lookup ----------------------------------------------------------

def summarize_price(table: ResultTable) -> list:
    recs = table.records()
    price = next((r.get("sp") for r in recs if isinstance(r.get("sp"), Node)), None)
    company = next((r.get("c") for r in recs if isinstance(r.get("c"), Node)), None)
    date = next((r.get("d") for r in recs if isinstance(r.get("d"), Node)), None)
    if price is None or company is None or date is None:
        raise ShapeMismatch("price lookup table needs c, sp and d node columns")
    code = company.props.get("stock_code", NA)
    name = company.props.get("stock_abbrv") or company.props.get("stock_nm") or code
    day = date.props.get("date", NA)
    facts = [["stock_code", code], ["date", day]]
    for prop, label in PRICE_FIELDS:
        v = price.props.get(prop)
        facts.append([label, fmt_currency(_num(v)) if v is not None else NA])
    vals = {label: value for label, value in facts}
    sentence = (f"On {day}, {name} ({code}) opened at {vals['open']}, closed at {vals['close']}, "
                f"and traded between {vals['low']} and {vals['high']}.")
    sections = [Section("Price facts", [sentence], _slice(("field", "value"), facts))]

    seen, counts = set(), {}
    for r in recs:
        edge = r.get("r")
        if isinstance(edge, Edge) and edge.id not in seen:
            seen.add(edge.id)
            counts[edge.type] = counts.get(edge.type, 0) + 1
    if counts:
        rows = [[t, str(n)] for t, n in sorted(counts.items())]
        total = sum(counts.values())
        rows.append(["total", str(total)])
        sections.append(Section("Connected entities",
                                [f"{name} has {total} relationships in the result."],
                                _slice(("relationship", "count"), rows)))
    return sections


# -- dispatch --------------------------------------------------------------

def _provenance(translation: TranslationResult | None, table: ResultTable | None) -> dict:
    return {
        "source": translation.source if translation else "none",
        "query": translation.query_text if translation else "",
        "rows": len(table) if table is not None else 0,
        "columns": list(table.columns) if table is not None else [],
        "notes": list(translation.notes) if translation else [],
    }


def unsupported_report(question: str, reason: str) -> AnswerReport:
    return AnswerReport(question, {"kind": "Unsupported", "reason": reason},
                        [Section("Unsupported question", [reason])], _provenance(None, None))


def _generic(table: ResultTable) -> list:
    rows = [[str(c) if isinstance(c, str) else json.dumps(
        c.to_json() if isinstance(c, (Node, Edge)) else (list(c) if isinstance(c, tuple) else c),
        ensure_ascii=False) for c in row] for row in table.rows]
    return [Section("Query result", ["The rows returned by the query are listed below."],
                    _slice(table.columns, rows))]


def compose(question: str, translation: TranslationResult | None,
            table: ResultTable | None) -> AnswerReport:
    """Build the report for ``question`` from its translation and result table."""
    intent = translation.intent if translation else Unsupported("no translation")
    if isinstance(intent, Unsupported):
        report = unsupported_report(question, intent.reason)
        report.provenance = _provenance(translation, table)
        return report
    prov = _provenance(translation, table)
    ij = intent_to_json(intent)
    if table is None or len(table) == 0:
        return AnswerReport(question, ij, [Section(
            "No matching data", ["The query returned no matching data."])], prov)
    classes, trends = [], []
    try:
        if isinstance(intent, CompetitorFinancialComparison):
            sections, trends = summarize_comparison(table)
        elif isinstance(intent, SectorIndicatorScreen):
            sections, classes = summarize_screen(table)
        elif isinstance(intent, PriceLookup):
            sections = summarize_price(table)
        else:
            sections = _generic(table)
    except ShapeMismatch:
        # externally generated queries may return any shape
        if translation.source != "external":
            raise
        sections = _generic(table)
    return AnswerReport(question, ij, sections, prov, classes, trends)
