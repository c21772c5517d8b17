"""Deterministic synthetic market data standing in for live exchange APIs.

Values are synthetic.  They are shaped so the demo tells a coherent story
(a large incumbent, a recovering competitor, value and growth names in one
sector) but carry no real market figures.
"""

from __future__ import annotations

import csv
import io
import json
import re
import zlib
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import BadDate, BadSpec
from .ingest import (
    COMPANIES_FILE,
    COMPANY_COLUMNS,
    INDICATOR_COLUMNS,
    INDICATORS_FILE,
    PRICE_COLUMNS,
    PRICES_FILE,
    STATEMENTS_FILE,
    parse_date,
)

PROFILES = ("large", "value", "growth", "distressed", "random")


@dataclass
class CompanySpec:
    code: str
    name: str
    sector: str
    abbrv: str | None = None
    name_eng: str | None = None
    market: str = "KOSPI"
    kospi200: bool = False
    listing_dt: str = "20000101"
    competitors: tuple = ()
    profile: str = "random"
    revenue_base: float | None = None
    revenue_trend: tuple | None = None  # multiplier per fixture year
    op_margin: tuple | None = None  # operating margin per fixture year
    shares: int | None = None


@dataclass
class FixtureSpec:
    companies: list
    years: tuple = (2023, 2024, 2025)
    price_dates: tuple = ()
    indicator_dates: tuple | None = None  # default: March 31st of each year
    indicators_per_year: int = 1
    quarterly: bool = False
    annual: bool = True

    def check(self) -> None:
        if not self.companies:
            raise BadSpec("fixture needs at least one company")
        codes = [c.code for c in self.companies]
        if len(set(codes)) != len(codes):
            raise BadSpec("duplicate company codes")
        for c in self.companies:
            if not re.fullmatch(r"[0-9A-Z]{6}", c.code):
                raise BadSpec(f"bad company code {c.code!r}")
            if c.profile not in PROFILES:
                raise BadSpec(f"unknown profile {c.profile!r}")
            n = len(self.years)
            for name in ("revenue_trend", "op_margin"):
                v = getattr(c, name)
                if v is not None and len(v) != n:
                    raise BadSpec(f"{c.code}: {name} needs one entry per year")
        if not self.years or any(not 1900 <= y <= 2999 for y in self.years):
            raise BadSpec("years must be non-empty and within 1900-2999")
        try:
            for d in (*self.price_dates, *(self.indicator_dates or ())):
                parse_date(d)
        except BadDate as exc:
            raise BadSpec(str(exc)) from exc

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> FixtureSpec:
        try:
            companies = [CompanySpec(**{k: tuple(v) if isinstance(v, list) else v
                                        for k, v in c.items()})
                         for c in obj["companies"]]
            rest = {k: tuple(v) if isinstance(v, list) else v
                    for k, v in obj.items() if k != "companies"}
            spec = cls(companies=companies, **rest)
        except (KeyError, TypeError) as exc:
            raise BadSpec(f"invalid fixture spec: {exc}") from exc
        spec.check()
        return spec


SEMICONDUCTOR = "Semiconductor"


def demo_spec() -> FixtureSpec:
    """Twelve-company semiconductor sector used throughout docs and tests."""
    def co(code, name, profile, **kw):
        return CompanySpec(code=code, name=name, sector=SEMICONDUCTOR, profile=profile, **kw)

    companies = [
        co("005930", "Samsung Electronics", "large", abbrv="Samsung",
           kospi200=True, listing_dt="19750611", competitors=("000660",),
           revenue_base=2.589e14, revenue_trend=(1.0, 1.162, 1.121),
           op_margin=(0.025, 0.109, 0.082), shares=5_969_782_550),
        co("000660", "SK Hynix", "large", abbrv="SK Hynix", kospi200=True,
           listing_dt="19961226", competitors=("005930",),
           revenue_base=3.28e13, revenue_trend=(1.0, 2.021, 2.612),
           op_margin=(-0.237, 0.351, 0.418), shares=728_002_365),
        co("038060", "Lumens", "value", market="KOSDAQ"),
        co("153490", "Woori E&L", "value", market="KOSDAQ"),
        co("108320", "LX Semicon", "value", kospi200=True),
        co("080520", "Oditek", "value", market="KOSDAQ"),
        co("036170", "HM Nex", "value", market="KOSDAQ"),
        co("078350", "Hanyang Digitech", "growth", market="KOSDAQ"),
        co("000990", "DB HiTek", "growth", kospi200=True),
        co("149010", "IK Semicon", "growth", market="KOSDAQ"),
        co("077360", "Duksan HiMetal", "growth", market="KOSDAQ"),
        co("020760", "Iljin Display", "growth"),
    ]
    return FixtureSpec(companies=companies, years=(2023, 2024, 2025),
                       price_dates=("20230306", "20240305", "20250305"))


_SYLLABLES = ("ka", "ra", "mi", "so", "tel", "non", "vex", "ion", "dar", "lum",
              "cor", "tek", "sin", "hal", "pro", "zen", "mar", "qui", "bel", "ost")
_SECTORS = ("Semiconductor", "Automobiles", "Chemicals", "Banking", "Pharmaceuticals",
            "Retail", "Shipbuilding", "Telecom", "Steel", "Software")


def _synthetic_name(rng: np.random.Generator) -> str:
    words = []
    for _ in range(int(rng.integers(1, 3))):
        parts = rng.choice(len(_SYLLABLES), size=int(rng.integers(2, 4)))
        words.append("".join(_SYLLABLES[i] for i in parts).capitalize())
    return " ".join(words)


def synthetic_spec(n_companies: int, seed: int, years=(2023, 2024, 2025),
                   n_sectors: int = 10, competitor_rate: float = 0.3,
                   price_dates=(), indicators: bool = False,
                   unresolved_rate: float = 0.0, quarterly: bool = False) -> FixtureSpec:
    """Random universe of ``n_companies`` with distinct codes and names."""
    rng = np.random.default_rng(seed)
    codes = rng.choice(1_000_000, size=n_companies, replace=False)
    codes = [f"{int(c):06d}" for c in codes]
    sectors = [_SECTORS[i % len(_SECTORS)] if i < len(_SECTORS) else f"Sector {chr(65 + i % 26)}{i}"
               for i in range(max(1, n_sectors))]
    names = set()
    companies = []
    for i, code in enumerate(codes):
        name = _synthetic_name(rng)
        while name in names:
            name = f"{name} {_synthetic_name(rng)}"
        names.add(name)
        comps = []
        if n_companies > 1 and rng.random() < competitor_rate:
            for j in rng.choice(n_companies, size=int(rng.integers(1, 3)), replace=False):
                if int(j) != i:
                    comps.append(codes[int(j)])
        if rng.random() < unresolved_rate:
            comps.append("Z" + code[1:])
        companies.append(CompanySpec(
            code=code, name=name, sector=sectors[int(rng.integers(len(sectors)))],
            kospi200=bool(rng.random() < 0.1), competitors=tuple(comps),
            profile=PROFILES[int(rng.integers(4))],
        ))
    return FixtureSpec(companies=companies, years=tuple(years), price_dates=tuple(price_dates),
                       indicator_dates=None if indicators else (), quarterly=quarterly)


# -- value generation ------------------------------------------------------

def _company_rng(seed: int, code: str) -> np.random.Generator:
    return np.random.default_rng([seed, zlib.crc32(code.encode())])


def _round(x: float, digits: int = 0) -> float:
    return float(round(float(x), digits))


@dataclass
class _Profile:
    per: tuple
    pbr: tuple
    eps_start: tuple
    eps_growth: tuple  # per-year multiplicative growth range
    margin: tuple


_PROFILE_PARAMS = {
    "large": _Profile((8, 20), (1.0, 2.0), (2000, 6000), (0.85, 1.4), (0.05, 0.2)),
    "value": _Profile((3.0, 7.5), (0.3, 0.85), (400, 3000), (0.9, 1.15), (0.06, 0.15)),
    "growth": _Profile((10.5, 16.0), (1.2, 2.4), (150, 1200), (1.25, 1.6), (0.08, 0.2)),
    "distressed": _Profile((25, 60), (1.5, 3.5), (-800, -50), (0.9, 1.1), (-0.15, -0.02)),
}


def _profile_of(c: CompanySpec, rng) -> str:
    if c.profile == "random":
        return ("large", "value", "growth", "distressed")[int(rng.integers(4))]
    return c.profile


def generate_records(spec: FixtureSpec, seed: int) -> dict[str, list]:
    """Generate record rows per file name; a pure function of (spec, seed)."""
    spec.check()
    years = list(spec.years)
    out = {COMPANIES_FILE: [], PRICES_FILE: [], INDICATORS_FILE: [], STATEMENTS_FILE: []}
    for c in spec.companies:
        rng = _company_rng(seed, c.code)
        prof = _PROFILE_PARAMS[_profile_of(c, rng)]
        shares = c.shares if c.shares is not None else int(rng.integers(5, 500)) * 1_000_000
        out[COMPANIES_FILE].append({
            "stock_code": c.code, "stock_nm": c.name, "stock_abbrv": c.abbrv or c.name,
            "stock_nm_eng": c.name_eng or c.name, "listing_dt": c.listing_dt,
            "market_nm": c.market, "sector": c.sector, "outstanding_shares": shares,
            "kospi200_item_yn": "Y" if c.kospi200 else "N",
            "competitors": ";".join(c.competitors),
        })

        revenue_base = c.revenue_base or float(rng.uniform(5e10, 5e12))
        trend = c.revenue_trend or tuple(np.cumprod(rng.uniform(0.9, 1.25, size=len(years))))
        margins = c.op_margin or tuple(rng.uniform(*prof.margin, size=len(years)))
        capital = _round(revenue_base * rng.uniform(0.01, 0.05))
        if spec.annual:
            for y, t, m in zip(years, trend, margins):
                out[STATEMENTS_FILE].append(_statement(c.code, y, None, revenue_base * t, m,
                                                       capital, rng))
        if spec.quarterly:
            for y, t, m in zip(years, trend, margins):
                for q in (1, 2, 3, 4):
                    out[STATEMENTS_FILE].append(_statement(c.code, y, q, revenue_base * t / 4,
                                                           m, capital, rng))

        eps = float(rng.uniform(*prof.eps_start))
        ind_dates = spec.indicator_dates
        if ind_dates is None:
            ind_dates = tuple(f"{y}{m:02d}31" if m == 3 else f"{y}{m:02d}30"
                              for y in years for m in (3, 9)[:spec.indicators_per_year])
        for i, d in enumerate(ind_dates):
            if i:
                eps *= float(rng.uniform(*prof.eps_growth))
            per = _round(rng.uniform(*prof.per), 2)
            out[INDICATORS_FILE].append({
                "stock_code": c.code, "date": d,
                "per": "" if eps < 0 else repr(per),
                "pbr": repr(_round(rng.uniform(*prof.pbr), 2)),
                "eps": repr(_round(eps)),
            })

        price = float(rng.uniform(2_000, 150_000))
        for d in spec.price_dates:
            price *= float(rng.uniform(0.8, 1.25))
            open_ = _round(price * rng.uniform(0.97, 1.03))
            close = _round(price)
            high = _round(max(open_, close) * rng.uniform(1.0, 1.04))
            low = _round(min(open_, close) * rng.uniform(0.96, 1.0))
            out[PRICES_FILE].append({"stock_code": c.code, "date": d, "open": repr(open_),
                                     "close": repr(close), "high": repr(high), "low": repr(low)})
    return out


def _statement(code, year, quarter, revenue, margin, capital, rng) -> dict:
    revenue = _round(revenue * rng.uniform(0.98, 1.02))
    op = _round(revenue * margin)
    net = _round(op * rng.uniform(0.6, 0.85)) if op > 0 else _round(op * rng.uniform(1.0, 1.3))
    assets = _round(revenue * rng.uniform(1.2, 2.0))
    liabilities = _round(assets * rng.uniform(0.2, 0.6))
    rec = {"stock_code": code, "year": year}
    if quarter is not None:
        rec["quarter"] = quarter
    rec.update({"revenue": revenue, "operating_income": op, "net_income": net,
                "total_assets": assets, "total_liabilities": liabilities,
                "total_equity": _round(assets - liabilities), "capital_stock": capital})
    return rec


def _csv_text(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def render_files(spec: FixtureSpec, seed: int) -> dict[str, str]:
    """File name -> exact file contents."""
    recs = generate_records(spec, seed)
    return {
        COMPANIES_FILE: _csv_text(COMPANY_COLUMNS, recs[COMPANIES_FILE]),
        PRICES_FILE: _csv_text(PRICE_COLUMNS, recs[PRICES_FILE]),
        INDICATORS_FILE: _csv_text(INDICATOR_COLUMNS, recs[INDICATORS_FILE]),
        STATEMENTS_FILE: "".join(json.dumps(r, sort_keys=True) + "\n"
                                 for r in recs[STATEMENTS_FILE]),
    }


def generate_fixture(spec: FixtureSpec, rng_seed: int, out_dir) -> list[Path]:
    """Write the record files for ``spec`` into ``out_dir``; identical inputs give identical bytes."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, text in render_files(spec, rng_seed).items():
        path = out_dir / name
        path.write_bytes(text.encode("utf-8"))
        paths.append(path)
    return paths


def load_spec(source: str) -> FixtureSpec:
    """``demo`` or a path to a JSON fixture spec."""
    if source == "demo":
        return demo_spec()
    try:
        with open(source, encoding="utf-8") as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise BadSpec(f"cannot read fixture spec {source}: {exc}") from exc
    return FixtureSpec.from_json(obj)


def demo_graph(seed: int = 42):
    """Ingest the demo fixture straight into a fresh graph (no files)."""
    import tempfile

    from .ingest import ingest_directory
    with tempfile.TemporaryDirectory() as tmp:
        generate_fixture(demo_spec(), seed, tmp)
        return ingest_directory(tmp)
