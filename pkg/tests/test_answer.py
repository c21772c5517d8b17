import json
import os
import statistics

import pytest
from conftest import CASE1_QUESTION, CASE2_QUESTION, GOLDEN, listing
from hypothesis import given, settings
from hypothesis import strategies as st

from stockkg.answer import (
    NA,
    THIN,
    AnswerReport,
    check_faithfulness,
    classify,
    compose,
    fmt_currency,
    fmt_pct,
    fmt_ratio,
    sector_stats,
    summarize_comparison,
    summarize_screen,
)
from stockkg.errors import MissingColumns, ShapeMismatch
from stockkg.executor import ResultTable, run
from stockkg.translate import (
    CompanyRef,
    CompetitorFinancialComparison,
    TranslationResult,
    Unsupported,
)

REGEN = os.environ.get("STOCKKG_REGEN_GOLDEN") == "1"


class TestFormatting:
    def test_currency_groups_with_thin_space(self):
        assert fmt_currency(1234567.4) == f"1{THIN}234{THIN}567"
        assert fmt_currency(-1000) == f"-1{THIN}000"
        assert fmt_currency(-0.3) == "0"
        assert fmt_currency(None) == NA

    def test_ratio_and_pct(self):
        assert fmt_ratio(3.14159) == "3.14"
        assert fmt_ratio(-0.001) == "0.00"
        assert fmt_pct(12.345) == "12.35%"  # binary 12.345 sits just above the midpoint
        assert fmt_pct(None) == NA


def screen_table(rows):
    return ResultTable(["stock_code", "stock_abbrv", "year", "per", "pbr", "eps"],
                       [list(r) for r in rows])


class TestSectorStats:
    def test_population_statistics(self):
        t = screen_table([("A", "A", 2024, 4.0, 0.5, 100.0),
                          ("B", "B", 2024, 8.0, 1.5, 200.0),
                          ("C", "C", 2024, 12.0, None, -50.0),
                          ("A", "A", 2025, 6.0, 0.7, 120.0)])
        stats = sector_stats(t)
        for (year, metric), (mu, sd) in stats.items():
            col = ["year", "per", "pbr", "eps"].index(metric)
            vals = [r[col + 2] for r in t.rows if r[2] == year and r[col + 2] is not None]
            assert mu == pytest.approx(statistics.fmean(vals))
            assert sd == pytest.approx(statistics.pstdev(vals))
        assert stats[(2024, "per")] == pytest.approx((8.0, statistics.pstdev([4, 8, 12])))
        assert stats[(2024, "pbr")] == pytest.approx((1.0, 0.5))
        assert stats[(2025, "per")] == (6.0, 0.0)

    def test_missing_columns(self):
        with pytest.raises(MissingColumns):
            sector_stats(ResultTable(["year", "per"], []))


def comparison_table(rows, prefixes=("a", "b")):
    cols = ["year"]
    for p in prefixes:
        cols += [f"{p}_stock_abbrv", f"{p}_revenue"]
    return ResultTable(cols, [list(r) for r in rows])


class TestComparison:
    def test_lead_change_and_yoy(self):
        t = comparison_table([(2023, "Alpha", 100.0, "Beta", 50.0),
                              (2024, "Alpha", 110.0, "Beta", 150.0)])
        sections, trends = summarize_comparison(t)
        text = " ".join(sections[0].narrative)
        assert "In 2023, Alpha led revenue with 100." in text
        assert "In 2024, Beta led revenue with 150." in text
        assert "Beta revenue changed by 200.00% from 2023 to 2024." in text
        assert "Alpha revenue changed by 10.00% from 2023 to 2024." in text
        assert "Leadership in revenue changed from Alpha in 2023 to Beta in 2024." in text
        assert sections[1].heading == "Revenue scale"
        # totals: Alpha 210, Beta 200
        assert "Alpha has the larger overall revenue scale, with 210 " in sections[1].narrative[0]
        assert {(s.company, s.year) for s in trends} == {
            ("Alpha", 2023), ("Alpha", 2024), ("Beta", 2023), ("Beta", 2024)}

    def test_tie(self):
        t = comparison_table([(2023, "Alpha", 100.0, "Beta", 100.0),
                              (2024, "Alpha", 120.0, "Beta", 100.0)])
        sections, _ = summarize_comparison(t)
        text = " ".join(sections[0].narrative)
        assert "In 2023, revenue was tied at 100." in text
        assert "changed from a tie in 2023 to Alpha in 2024" in text

    def test_single_year_has_no_trend_sentences(self):
        sections, trends = summarize_comparison(comparison_table([(2024, "A", 1.0, "B", 2.0)]))
        assert not any("changed" in s for s in sections[0].narrative)
        assert [t.yoy_pct for t in trends] == [None, None]

    def test_null_value_excluded(self):
        t = comparison_table([(2023, "Alpha", None, "Beta", 50.0),
                              (2024, "Alpha", 10.0, "Beta", 60.0)])
        text = " ".join(summarize_comparison(t)[0][0].narrative)
        assert "Alpha has no revenue value for 2023" in text
        assert "Alpha revenue changed" not in text

    def test_yoy_needs_consecutive_year(self):
        t = comparison_table([(2022, "A", 10.0, "B", 1.0), (2024, "A", 20.0, "B", 2.0)])
        assert not any("changed by" in s for s in summarize_comparison(t)[0][0].narrative)

    def test_shape_errors(self):
        with pytest.raises(ShapeMismatch):
            summarize_comparison(ResultTable(["year", "x"], [[2024, 1]]))
        with pytest.raises(ShapeMismatch):
            summarize_comparison(comparison_table([(2024, "A", "lots", "B", 1.0)]))


def evidence(years, mean_per, mean_pbr, mu_per=10.0, sd_per=2.0, mu_pbr=1.0):
    return {"years": {str(y): {"per": None, "pbr": None, "eps": e} for y, e in years.items()},
            "mean_per": mean_per, "mean_pbr": mean_pbr,
            "baseline": {"per": [mu_per, sd_per], "pbr": [mu_pbr, 0.1]}}


class TestClassify:
    @pytest.mark.parametrize("years,per,pbr,bucket", [
        ({2023: 1, 2024: 2}, 5.0, 0.5, "Undervalued"),
        ({2023: 1, 2024: -2}, 5.0, 0.5, "Neither"),
        ({2023: 1, 2024: 2}, 5.0, 1.0, "Growth"),          # PBR not strictly below
        ({2023: 1, 2024: 2}, 12.0, 1.5, "Growth"),         # within one std
        ({2023: 1, 2024: 2}, 12.01, 1.5, "Neither"),       # just above the band
        ({2023: 2, 2024: 2}, 11.0, 1.5, "Neither"),        # not strictly rising
        ({2024: 5}, 11.0, 1.5, "Neither"),                 # one year is not a trend
        ({2023: None, 2024: 3}, 5.0, 0.5, "Undervalued"),  # nulls skipped
        ({2023: None}, 5.0, 0.5, "Neither"),
        ({2023: 1, 2024: 2}, None, None, "Neither"),
    ])
    def test_rules(self, years, per, pbr, bucket):
        assert classify(evidence(years, per, pbr)) == bucket


opt_num = st.one_of(st.none(), st.floats(-50, 50, allow_nan=False).map(lambda x: round(x, 2)))
screen_rows = st.lists(
    st.tuples(st.sampled_from(["000001", "000002", "000003", "000004"]),
              st.sampled_from([2023, 2024, 2025]), opt_num, opt_num, opt_num),
    min_size=1, max_size=14)


def _independent_bucket(ev):
    """Bucket rules restated from the evidence, without the library helper."""
    (mu_per, sd_per), (mu_pbr, _) = ev["baseline"]["per"], ev["baseline"]["pbr"]
    eps = [ev["years"][y]["eps"] for y in sorted(ev["years"])]
    eps = [e for e in eps if e is not None]
    mp, mb = ev["mean_per"], ev["mean_pbr"]
    if None not in (mp, mb, mu_per, mu_pbr) and mp < mu_per and mb < mu_pbr \
            and eps and min(eps) > 0:
        return "Undervalued"
    if len(eps) >= 2 and all(x < y for x, y in zip(eps, eps[1:])) \
            and None not in (mp, mu_per, sd_per) and mp <= mu_per + sd_per:
        return "Growth"
    return "Neither"


@settings(max_examples=150, deadline=None)
@given(screen_rows)
def test_screen_is_sound_and_faithful_under_nulls(rows):
    t = screen_table([(c, c, y, per, pbr, eps) for c, y, per, pbr, eps in rows])
    sections, classes = summarize_screen(t)
    codes = {r[0] for r in rows}
    assert {c.company_code for c in classes} == codes
    for c in classes:
        assert c.bucket == _independent_bucket(c.evidence)
        # evidence means are recomputable from the rows
        pers = [per for code, _, per, _, _ in rows if code == c.company_code and per is not None]
        if not pers:
            assert c.evidence["mean_per"] is None
    assert check_faithfulness(AnswerReport("q", {}, sections, {})) == []


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.sampled_from([2022, 2023, 2024]), opt_num, opt_num),
                min_size=1, max_size=3, unique_by=lambda r: r[0]))
def test_comparison_faithful_under_nulls(rows):
    t = comparison_table([(y, "Alpha", a, "Beta", b) for y, a, b in rows])
    sections, _ = summarize_comparison(t)
    assert check_faithfulness(AnswerReport("q", {}, sections, {})) == []


class TestCompose:
    def test_unsupported(self):
        t = TranslationResult(Unsupported("no"), "", None)
        report = compose("q", t, None)
        assert report.intent["kind"] == "Unsupported"

    def test_empty_table(self):
        intent = CompetitorFinancialComparison(CompanyRef("1"), (), (2024,))
        report = compose("q", TranslationResult(intent, "x", None), ResultTable(["year"], []))
        assert report.sections[0].heading == "No matching data"

    def test_shape_mismatch_fallback_only_for_external(self):
        intent = CompetitorFinancialComparison(CompanyRef("1"), (), (2024,))
        table = ResultTable(["n"], [[1]])
        with pytest.raises(ShapeMismatch):
            compose("q", TranslationResult(intent, "x", None), table)
        report = compose("q", TranslationResult(intent, "x", None, source="external"), table)
        assert report.sections[0].heading == "Query result"

    def test_faithfulness_detects_invented_number(self, engine):
        report = engine.ask(CASE1_QUESTION)
        report.sections[0].narrative.append("Revenue grew by 987.65% somehow.")
        assert check_faithfulness(report)


def _check_golden(name, report):
    path = GOLDEN / f"{name}.json"
    text = report.dumps() + "\n"
    if REGEN or not path.exists():
        path.write_text(text, encoding="utf-8")
    assert text == path.read_text(encoding="utf-8")


class TestCaseStudies:
    def test_case1_facts_match_raw_rows(self, engine, demo):
        report = engine.ask(CASE1_QUESTION)
        assert check_faithfulness(report) == []
        raw = run(demo, listing("case1")).records()
        last = raw[-1]
        for metric in ("operating_income", "net_income"):
            leader = ("SK Hynix" if last[f"skhynix_{metric}"] > last[f"samsung_{metric}"]
                      else "Samsung")
            label = metric.replace("_", " ")
            assert any(s.startswith(f"In 2025, {leader} led {label}")
                       for sec in report.sections for s in sec.narrative)
        total = {p: sum(r[f"{p}_revenue"] for r in raw) for p in ("samsung", "skhynix")}
        bigger = "Samsung" if total["samsung"] > total["skhynix"] else "SK Hynix"
        scale = next(s for s in report.sections if s.heading == "Revenue scale")
        assert scale.narrative[0].startswith(f"{bigger} has the larger overall revenue scale")
        _check_golden("case1", report)

    def test_case2_buckets_match_independent_rules(self, engine, demo):
        report = engine.ask(CASE2_QUESTION)
        assert check_faithfulness(report) == []
        for c in report.classifications:
            assert c.bucket == _independent_bucket(c.evidence)
        rows = run(demo, listing("case2")).records()
        assert {c.company_code for c in report.classifications} == {r["stock_code"] for r in rows}
        json.loads(report.dumps())
        _check_golden("case2", report)

    def test_price_report(self, engine):
        report = engine.ask("What was the closing price of Samsung Electronics on 20240305?")
        assert [s.heading for s in report.sections] == ["Price facts", "Connected entities"]
        assert check_faithfulness(report) == []
        _check_golden("price", report)
