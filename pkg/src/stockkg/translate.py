"""Rule-based question -> Cypher translation, plus an optional external generator.

The rule table (see ``RULES_TEXT``) recognises three kinds of question:

* multi-year financial comparison of a company against its competitors,
* sector indicator screening on PER / PBR / EPS,
* a price lookup for one company on one date.

Anything else is :class:`Unsupported`.  Generated query text is always
parsed, bound and checked against the schema before it is returned.
"""

from __future__ import annotations

import json
import re
import socket
import urllib.error
import urllib.request
from dataclasses import dataclass, field

from .cypher import ast as A
from .cypher import parse, render
from .cypher.binder import bind
from .errors import (
    BackendTimeout,
    BackendUnreachable,
    BadDate,
    CypherSyntaxError,
    EntityNotFound,
    GeneratedQueryInvalid,
    TemplateGap,
    UnsupportedQuestion,
)
from .graph import PropertyGraph
from .schema import CATALOG, SchemaCatalog

METRICS = ("revenue", "operating_income", "net_income")
INDICATORS = ("per", "pbr", "eps")


# -- intents ---------------------------------------------------------------

@dataclass(frozen=True)
class CompanyRef:
    code: str | None = None
    name: str | None = None
    resolved_id: int | None = None

    def __post_init__(self):
        if self.code is None and self.name is None:
            raise ValueError("a company reference needs a code or a name")

    def __str__(self) -> str:
        if self.code and self.name:
            return f"{self.name} ({self.code})"
        return self.code or self.name


@dataclass(frozen=True)
class SectorRef:
    name: str
    resolved_id: int | None = None

    def __str__(self) -> str:
        return f"sector {self.name}"


@dataclass(frozen=True)
class Threshold:
    metric: str
    op: str
    value: float


DEFAULT_SCREEN = (Threshold("per", "<", 10), Threshold("pbr", "<", 1), Threshold("eps", ">", 0))


@dataclass(frozen=True)
class CompetitorFinancialComparison:
    anchor: CompanyRef
    competitors: tuple = ()
    years: tuple = ()
    metrics: tuple = METRICS

    def __post_init__(self):
        if not self.metrics:
            object.__setattr__(self, "metrics", METRICS)
        if not self.years:
            raise ValueError("years must be non-empty")


@dataclass(frozen=True)
class SectorIndicatorScreen:
    anchor: CompanyRef | SectorRef
    years: tuple = ()
    predicate: tuple = DEFAULT_SCREEN

    def __post_init__(self):
        if not self.years:
            raise ValueError("years must be non-empty")


@dataclass(frozen=True)
class PriceLookup:
    company: CompanyRef
    date: str


@dataclass(frozen=True)
class Unsupported:
    reason: str


@dataclass
class TranslationResult:
    intent: object
    query_text: str
    ast: A.Query
    notes: list = field(default_factory=list)
    source: str = "template"

    def to_json(self) -> dict:
        return {"intent": intent_to_json(self.intent), "query": self.query_text,
                "notes": list(self.notes), "source": self.source}


def intent_to_json(intent) -> dict:
    def ref(r):
        if isinstance(r, CompanyRef):
            return {"company": {"code": r.code, "name": r.name}}
        if isinstance(r, SectorRef):
            return {"sector": r.name}
        return None

    kind = type(intent).__name__
    if isinstance(intent, CompetitorFinancialComparison):
        return {"kind": kind, "anchor": ref(intent.anchor),
                "competitors": [ref(c) for c in intent.competitors],
                "years": list(intent.years), "metrics": list(intent.metrics)}
    if isinstance(intent, SectorIndicatorScreen):
        return {"kind": kind, "anchor": ref(intent.anchor), "years": list(intent.years),
                "predicate": [[t.metric, t.op, t.value] for t in intent.predicate]}
    if isinstance(intent, PriceLookup):
        return {"kind": kind, "company": ref(intent.company), "date": intent.date}
    return {"kind": kind, "reason": getattr(intent, "reason", "")}


# -- lexicon ---------------------------------------------------------------

@dataclass(frozen=True)
class CompanyEntry:
    code: str
    node_id: int
    abbrv: str
    names: tuple


@dataclass
class Lexicon:
    companies: dict  # code -> CompanyEntry
    names: dict  # lower-cased name -> sorted codes
    sectors: dict  # lower-cased name -> (name, node_id)

    @classmethod
    def from_graph(cls, graph: PropertyGraph) -> Lexicon:
        companies, names, sectors = {}, {}, {}
        for node in graph.nodes("Company"):
            code = node.props.get("stock_code")
            if not isinstance(code, str):
                continue
            surface = tuple(dict.fromkeys(
                v for k in ("stock_nm", "stock_abbrv", "stock_nm_eng")
                if isinstance(v := node.props.get(k), str) and v.strip()))
            companies[code] = CompanyEntry(code, node.id, node.props.get("stock_abbrv") or code,
                                           surface)
            for name in surface:
                names.setdefault(name.lower(), set()).add(code)
        for node in graph.nodes("Sector"):
            name = node.props.get("stock_sector_nm")
            if isinstance(name, str):
                sectors[name.lower()] = (name, node.id)
        return cls(companies, {k: sorted(v) for k, v in names.items()}, sectors)

    def resolve(self, ref: CompanyRef) -> CompanyEntry:
        if ref.code is not None:
            entry = self.companies.get(ref.code)
            if entry is None:
                raise EntityNotFound(ref)
            return entry
        codes = self.names.get(ref.name.lower())
        if not codes:
            raise EntityNotFound(ref)
        return self.companies[codes[0]]

    def resolve_sector(self, ref: SectorRef) -> tuple:
        hit = self.sectors.get(ref.name.lower())
        if hit is None:
            raise EntityNotFound(ref)
        return hit


# -- classification --------------------------------------------------------

RULES_TEXT = """\
Question rules (evaluated in order):
1. Forecasting vocabulary (predict, forecast, will ... be, tomorrow, next week/month/year)
   -> unsupported: the graph holds historical data only.
2. A comparison cue (compare, comparing, comparison, competitor(s), versus, vs, performance trend)
   plus at least one financial-statement metric (revenue/sales, operating income/profit,
   net income/profit) -> competitor financial comparison.  The first company mentioned is the
   anchor; further companies are the competitors.  With no named competitor the query follows
   COMPETES_WITH edges.
3. A sector cue (same industry/sector, sector, industry, undervalued, growth potential) plus at
   least one indicator (PER, PBR, EPS) -> sector indicator screen.  The anchor is the first
   company mentioned, else a sector name.  Thresholds such as "PER below 8" replace the default
   screen (per < 10 OR pbr < 1 OR eps > 0).
4. A company, a single date (YYYYMMDD or YYYY-MM-DD) and price vocabulary -> price lookup.
5. Anything else is unsupported.
Entities: an explicit "(stock code: XXXXXX)" always wins over name matching; names match
case-insensitively and exactly against stock_nm, stock_abbrv and stock_nm_eng.
Years: standalone four-digit years and ranges such as 2023-2025.  Rules 2 and 3 need years.
Query conventions: labels Company, Sector, Indicator, StockPrice, FinancialStatements, Date,
Quarter, Year; dates are YYYYMMDD text; use only MATCH, OPTIONAL MATCH, WHERE, WITH, RETURN,
ORDER BY; string literals in double quotes.
"""

_FORECAST = re.compile(r"\b(predict\w*|forecast\w*|tomorrow|next\s+(week|month|year|quarter)|"
                       r"will\b.*\bbe)\b", re.IGNORECASE)
_COMPARE = re.compile(r"\b(compare|comparing|comparison|competitors?|versus|vs\.?|"
                      r"performance\s+trends?)\b", re.IGNORECASE)
_SECTOR = re.compile(r"\b(same\s+(industry|sector)|sector|industry|undervalued|"
                     r"growth\s+potential)\b", re.IGNORECASE)
_PRICE = re.compile(r"\b(price|prices|close|closing|open|opening|high|low|trading)\b", re.IGNORECASE)
_METRIC_TERMS = {
    "revenue": re.compile(r"\b(revenues?|sales)\b", re.IGNORECASE),
    "operating_income": re.compile(r"\boperating\s+(income|profits?)\b", re.IGNORECASE),
    "net_income": re.compile(r"\bnet\s+(income|profits?|earnings)\b", re.IGNORECASE),
}
_INDICATOR_TERMS = {
    "per": re.compile(r"\bPER\b|\bP/E\b|[Pp]rice[- ]to[- ]earnings"),
    "pbr": re.compile(r"\bPBR\b|\bP/B\b|[Pp]rice[- ]to[- ]book"),
    "eps": re.compile(r"\bEPS\b|earnings\s+per\s+share", re.IGNORECASE),
}
_CODE_SPAN = re.compile(r"\(\s*stock\s+code\s*:\s*([0-9A-Z]{6})\s*\)", re.IGNORECASE)
_YEAR = re.compile(r"(?<![\d-])((?:19|2\d)\d{2})(?![\d-])")
_YEAR_RANGE = re.compile(r"\b((?:19|2\d)\d{2})\s*(?:-|–|to|through)\s*((?:19|2\d)\d{2})\b")
_DATE8 = re.compile(r"\b(\d{8})\b")
_DATE_DASH = re.compile(r"\b(\d{4})-(\d{2})-(\d{2})\b")
_THRESHOLD = re.compile(
    r"\b(PER|PBR|EPS)\s*(<=|>=|<|>|below|under|less\s+than|above|over|greater\s+than|"
    r"at\s+most|at\s+least)\s*(-?\d+(?:\.\d+)?)", re.IGNORECASE)
_OPS = {"below": "<", "under": "<", "less than": "<", "above": ">", "over": ">",
        "greater than": ">", "at most": "<=", "at least": ">="}


def _years(question: str) -> list[int]:
    years = set()
    for m in _YEAR_RANGE.finditer(question):
        a, b = int(m.group(1)), int(m.group(2))
        if a <= b and b - a <= 50:
            years.update(range(a, b + 1))
    for m in _YEAR.finditer(question):
        years.add(int(m.group(1)))
    return sorted(years)


def _dates(question: str) -> list[str]:
    from .ingest import parse_date
    found = []
    for m in _DATE8.finditer(question):
        found.append(m.group(1))
    for m in _DATE_DASH.finditer(question):
        found.append("".join(m.groups()))
    valid = []
    for d in found:
        try:
            parse_date(d)
        except BadDate:
            continue
        if d not in valid:
            valid.append(d)
    return valid


def _company_mentions(question: str, lexicon: Lexicon) -> list[CompanyRef]:
    """Company references in order of appearance, one per distinct code."""
    mentions = []  # (position, CompanyRef)
    taken = []  # character ranges already claimed
    spans = list(_CODE_SPAN.finditer(question))
    for m in spans:
        mentions.append((m.start(), m.group(1).upper(), None))
        taken.append((m.start(), m.end()))
    lowered = question.lower()
    for name in sorted(lexicon.names, key=lambda n: (-len(n), n)):
        start = 0
        pattern = re.compile(r"(?<!\w)" + re.escape(name) + r"(?!\w)")
        for m in pattern.finditer(lowered, start):
            s, e = m.span()
            if any(s < te and ts < e for ts, te in taken):
                continue
            taken.append((s, e))
            follow = _CODE_SPAN.match(question, e + len(question[e:]) - len(question[e:].lstrip()))
            surface = question[s:e]
            if follow is not None:
                # the name labels an explicit code span; the code wins
                for i, (pos, code, _) in enumerate(mentions):
                    if pos == follow.start():
                        mentions[i] = (pos, code, surface)
                continue
            mentions.append((s, lexicon.names[name][0], surface))
    mentions.sort(key=lambda t: t[0])
    refs, seen = [], set()
    for _, code, surface in mentions:
        if code in seen:
            continue
        seen.add(code)
        refs.append(CompanyRef(code=code, name=surface))
    return refs


def _sector_mention(question: str, lexicon: Lexicon) -> SectorRef | None:
    lowered = question.lower()
    best = None
    for key, (name, _) in lexicon.sectors.items():
        m = re.search(r"(?<!\w)" + re.escape(key) + r"(?!\w)", lowered)
        if m and (best is None or m.start() < best[0]):
            best = (m.start(), name)
    return SectorRef(best[1]) if best else None


def _thresholds(question: str) -> tuple:
    out = []
    for m in _THRESHOLD.finditer(question):
        op = m.group(2).lower()
        op = _OPS.get(re.sub(r"\s+", " ", op), op)
        value = float(m.group(3))
        out.append(Threshold(m.group(1).lower(), op, int(value) if value.is_integer() else value))
    return tuple(out)


def classify_and_extract(question: str, lexicon: Lexicon):
    """Map a question onto one intent of the supported taxonomy."""
    if _FORECAST.search(question):
        return Unsupported("no prediction capability: the graph holds historical data only")
    companies = _company_mentions(question, lexicon)
    years = tuple(_years(question))
    metrics = tuple(m for m in METRICS if _METRIC_TERMS[m].search(question))
    indicators = [i for i in INDICATORS if _INDICATOR_TERMS[i].search(question)]

    if _COMPARE.search(question) and metrics:
        if not companies:
            return Unsupported("no company identified for the comparison")
        if not years:
            return Unsupported("no years given for the comparison")
        return CompetitorFinancialComparison(companies[0], tuple(companies[1:]), years, metrics)

    if _SECTOR.search(question) and indicators:
        anchor = companies[0] if companies else _sector_mention(question, lexicon)
        if anchor is None:
            return Unsupported("no company or sector identified for the screen")
        if not years:
            return Unsupported("no years given for the screen")
        return SectorIndicatorScreen(anchor, years, _thresholds(question) or DEFAULT_SCREEN)

    dates = _dates(question)
    if companies and len(dates) == 1 and _PRICE.search(question):
        return PriceLookup(companies[0], dates[0])

    return Unsupported("question does not match a supported question type")


# -- templates -------------------------------------------------------------

def _lit(value) -> str:
    return json.dumps(value, ensure_ascii=False)


def _slug(text: str, taken: set) -> str:
    slug = re.sub(r"[^a-z0-9]", "", text.lower()) or "company"
    if slug[0].isdigit():
        slug = "c" + slug
    base, n = slug, 2
    while slug in taken:
        slug = f"{base}{n}"
        n += 1
    taken.add(slug)
    return slug


def _years_list(years) -> str:
    return "[" + ", ".join(str(int(y)) for y in years) + "]"


def _comparison_query(anchor: CompanyEntry, competitors: list, years, metrics) -> str:
    taken: set = set()
    prefixes = [_slug(anchor.abbrv, taken)] + [_slug(c.abbrv, taken) for c in competitors]
    entries = [anchor] + competitors
    lines = []
    for i, entry in enumerate(entries, start=1):
        year = "(y:Year)" if i == 1 else "(y)"
        lines.append(f"MATCH (c{i}:Company {{stock_code: {_lit(entry.code)}}})"
                     f"-[:HAS_FINANCIAL_STATEMENTS]->(fs{i}:FinancialStatements)"
                     f"-[:FOR_YEAR]->{year}")
    lines.append(f"WHERE y.year IN {_years_list(years)}")
    items = ["y.year AS year"]
    for i, prefix in enumerate(prefixes, start=1):
        items.append(f"c{i}.stock_abbrv AS {prefix}_stock_abbrv")
        items.extend(f"fs{i}.{m} AS {prefix}_{m}" for m in metrics)
    lines.append("RETURN " + ",\n  ".join(items))
    lines.append("ORDER BY y.year ASC")
    return "\n".join(lines)


def _competes_query(anchor: CompanyEntry, years, metrics) -> str:
    prefix = _slug(anchor.abbrv, {"competitor"})
    items = ["y.year AS year", f"c1.stock_abbrv AS {prefix}_stock_abbrv"]
    items += [f"fs1.{m} AS {prefix}_{m}" for m in metrics]
    items += ["c2.stock_code AS competitor_stock_code", "c2.stock_abbrv AS competitor_stock_abbrv"]
    items += [f"fs2.{m} AS competitor_{m}" for m in metrics]
    return "\n".join([
        f"MATCH (c1:Company {{stock_code: {_lit(anchor.code)}}})-[:HAS_FINANCIAL_STATEMENTS]"
        f"->(fs1:FinancialStatements)-[:FOR_YEAR]->(y:Year)",
        "MATCH (c1)-[:COMPETES_WITH]->(c2:Company)-[:HAS_FINANCIAL_STATEMENTS]"
        "->(fs2:FinancialStatements)-[:FOR_YEAR]->(y)",
        f"WHERE y.year IN {_years_list(years)}",
        "RETURN " + ",\n  ".join(items),
        "ORDER BY y.year ASC, c2.stock_code ASC",
    ])


def _predicate_text(predicate) -> str:
    terms = []
    for t in predicate:
        if t.metric not in INDICATORS or t.op not in A.CMP_OPS:
            raise TemplateGap(f"unsupported screen threshold {t}")
        terms.append(f"ind.{t.metric} {t.op} {t.value!r}" if isinstance(t.value, float)
                     else f"ind.{t.metric} {t.op} {t.value}")
    return "(" + " OR ".join(terms) + ")"


def _screen_query(head: str, years, predicate) -> str:
    return "\n".join([
        head,
        "WITH c",
        "MATCH (c)-[:HAS_INDICATOR]->(ind:Indicator)-[:MEASURED_ON]->(d:Date)",
        f"WHERE d.year IN {_years_list(years)}",
        "WITH c, ind, d",
        f"WHERE {_predicate_text(predicate)}",
        "RETURN c.stock_code AS stock_code, c.stock_abbrv AS stock_abbrv,",
        "  d.year AS year, ind.per AS per, ind.pbr AS pbr, ind.eps AS eps",
        "ORDER BY d.year, ind.per ASC, ind.pbr ASC, ind.eps DESC",
    ])


def _price_query(entry: CompanyEntry, date: str) -> str:
    return "\n".join([
        f"MATCH (c:Company {{stock_code: {_lit(entry.code)}}})-[:HAS_STOCK_PRICE]"
        f"->(sp:StockPrice)-[:RECORDED_ON]->(d:Date {{date: {_lit(date)}}})",
        "OPTIONAL MATCH (d)-[:IN_YEAR]->(y:Year)",
        "OPTIONAL MATCH (d)-[:IN_QUARTER]->(q:Quarter)",
        "OPTIONAL MATCH (c)-[r]-(connected)",
        "RETURN c, r, connected, sp, d, y, q",
    ])


def translate(intent, lexicon: Lexicon, catalog: SchemaCatalog = CATALOG) -> TranslationResult:
    """Instantiate the query template for ``intent``; entities must resolve."""
    notes = []
    if isinstance(intent, Unsupported):
        raise UnsupportedQuestion(intent.reason)
    if isinstance(intent, CompetitorFinancialComparison):
        anchor = lexicon.resolve(intent.anchor)
        competitors, refs = [], []
        for ref in intent.competitors:
            entry = lexicon.resolve(ref)
            if entry.code != anchor.code and entry not in competitors:
                competitors.append(entry)
                refs.append(CompanyRef(entry.code, ref.name, entry.node_id))
        intent = CompetitorFinancialComparison(
            CompanyRef(anchor.code, intent.anchor.name, anchor.node_id),
            tuple(refs), intent.years, intent.metrics)
        if competitors:
            text = _comparison_query(anchor, competitors, intent.years, intent.metrics)
        else:
            notes.append("no competitor named: following COMPETES_WITH relationships")
            text = _competes_query(anchor, intent.years, intent.metrics)
    elif isinstance(intent, SectorIndicatorScreen):
        if intent.predicate == DEFAULT_SCREEN:
            notes.append("default screen applied: per < 10 OR pbr < 1 OR eps > 0")
        if isinstance(intent.anchor, CompanyRef):
            anchor = lexicon.resolve(intent.anchor)
            intent = SectorIndicatorScreen(CompanyRef(anchor.code, intent.anchor.name, anchor.node_id),
                                           intent.years, intent.predicate)
            head = (f"MATCH (anchor:Company {{stock_code: {_lit(anchor.code)}}})-[:BELONGS_TO]"
                    f"->(s:Sector)<-[:BELONGS_TO]-(c:Company)\n"
                    f"WHERE c.stock_code <> anchor.stock_code")
        elif isinstance(intent.anchor, SectorRef):
            name, node_id = lexicon.resolve_sector(intent.anchor)
            intent = SectorIndicatorScreen(SectorRef(name, node_id), intent.years, intent.predicate)
            head = f"MATCH (s:Sector {{stock_sector_nm: {_lit(name)}}})<-[:BELONGS_TO]-(c:Company)"
        else:
            raise TemplateGap(f"screen anchor {intent.anchor!r}")
        text = _screen_query(head, intent.years, intent.predicate)
    elif isinstance(intent, PriceLookup):
        entry = lexicon.resolve(intent.company)
        intent = PriceLookup(CompanyRef(entry.code, intent.company.name, entry.node_id), intent.date)
        text = _price_query(entry, intent.date)
    else:
        raise TemplateGap(f"no template for intent {type(intent).__name__}")
    ast = parse(text)
    problems = check_against_catalog(ast, catalog)
    if problems:
        raise TemplateGap("; ".join(problems))
    return TranslationResult(intent, text, ast, notes)


def translate_question(question: str, lexicon: Lexicon,
                       catalog: SchemaCatalog = CATALOG) -> TranslationResult:
    return translate(classify_and_extract(question, lexicon), lexicon, catalog)


# -- validation ------------------------------------------------------------

def check_against_catalog(query: A.Query, catalog: SchemaCatalog = CATALOG) -> list[str]:
    """Schema names a query uses that the catalog does not know."""
    problems = []
    var_labels: dict[str, set] = {}
    for clause in query.clauses:
        if not isinstance(clause, A.Match):
            continue
        for pattern in clause.patterns:
            for node in pattern.nodes:
                for label in node.labels:
                    if label not in catalog.node_types:
                        problems.append(f"unknown label {label}")
                if node.var and node.labels:
                    var_labels.setdefault(node.var, set()).update(node.labels)
                allowed = set().union(*(catalog.property_names(l) for l in node.labels)) \
                    if node.labels else catalog.property_names()
                for key, _ in node.props:
                    if key not in allowed:
                        problems.append(f"unknown property {key}")
            for rel in pattern.rels:
                for t in rel.types:
                    if t not in catalog.rel_types:
                        problems.append(f"unknown relationship type {t}")
    all_props = catalog.property_names()
    exprs = []
    for clause in query.clauses:
        if isinstance(clause, (A.Match, A.With)) and clause.where is not None:
            exprs.append(clause.where)
        if isinstance(clause, (A.With, A.Return)):
            exprs.extend(item.expr for item in clause.items)
        if isinstance(clause, A.OrderBy):
            exprs.extend(k.expr for k in clause.keys)
    for expr in exprs:
        for sub in A.walk_exprs(expr):
            if isinstance(sub, A.PropAccess):
                labels = var_labels.get(sub.var)
                allowed = (set().union(*(catalog.property_names(l) for l in labels))
                           if labels else all_props)
                if sub.prop not in allowed:
                    problems.append(f"unknown property {sub.var}.{sub.prop}")
    return list(dict.fromkeys(problems))


def validate_generated(text: str, catalog: SchemaCatalog = CATALOG) -> A.Query:
    """Parse, bind and schema-check ``text``; raise GeneratedQueryInvalid on any failure."""
    if not isinstance(text, str) or not text.strip():
        raise GeneratedQueryInvalid("backend returned no query text")
    try:
        ast = parse(text)
        bind(ast)
    except CypherSyntaxError as exc:
        raise GeneratedQueryInvalid(f"generated query rejected: {exc}", [str(exc)]) from exc
    problems = check_against_catalog(ast, catalog)
    if problems:
        raise GeneratedQueryInvalid("generated query uses names outside the schema", problems)
    return ast


# -- external generator ----------------------------------------------------

@dataclass(frozen=True)
class BackendConfig:
    url: str
    timeout_s: float = 30

    def __post_init__(self):
        if self.timeout_s < 1:
            raise ValueError("timeout_s must be >= 1")


def external_generate(question: str, schema_text: str, backend: BackendConfig,
                      catalog: SchemaCatalog = CATALOG) -> tuple[str, A.Query]:
    """POST {schema, question, rules} to the backend and validate the returned query.

    The query is returned only after it parses, binds and uses schema names;
    the caller never sees unvalidated text.
    """
    payload = json.dumps({"schema": schema_text, "question": question,
                          "rules": RULES_TEXT}).encode("utf-8")
    request = urllib.request.Request(backend.url, data=payload, method="POST",
                                     headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(request, timeout=backend.timeout_s) as resp:
            body = resp.read()
    except urllib.error.HTTPError as exc:
        raise BackendUnreachable(f"backend answered HTTP {exc.code}") from exc
    except urllib.error.URLError as exc:
        if isinstance(exc.reason, (socket.timeout, TimeoutError)):
            raise BackendTimeout(f"backend timed out after {backend.timeout_s}s") from exc
        raise BackendUnreachable(f"backend unreachable: {exc.reason}") from exc
    except TimeoutError as exc:
        raise BackendTimeout(f"backend timed out after {backend.timeout_s}s") from exc
    except OSError as exc:
        raise BackendUnreachable(f"backend unreachable: {exc}") from exc
    try:
        reply = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise GeneratedQueryInvalid("backend reply is not JSON") from exc
    text = reply.get("query") if isinstance(reply, dict) else None
    ast = validate_generated(text, catalog)
    return text, ast


def normalized(query: A.Query) -> str:
    return render(query)
