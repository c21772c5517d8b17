# %% [markdown]
# # Screening a sector on PER, PBR and EPS
#
# Find peers of SK Hynix that look undervalued or show steady earnings
# growth. The query returns every indicator row passing a loose filter;
# the report then applies stricter bucket rules against sector baselines.

# %%
import numpy as np

from stockkg import Engine
from stockkg.answer import SCREEN_RULES, sector_stats
from stockkg.fixtures import demo_graph

graph, _ = demo_graph(42)
engine = Engine(graph)
question = ("Within the same industry as SK Hynix, identify companies with high growth "
            "potential or undervalued stocks based on PER, PBR, and EPS for the years "
            "2023, 2024, and 2025.")

translation = engine.translate(question)
print(translation.query_text)
print(translation.notes)

# %%
table = engine.query(translation.query_text)
print(len(table), "indicator rows")
print(table.to_text())

# %% [markdown]
# Sector baselines are per-year means and population standard deviations.
# Recomputing one of them by hand with numpy should agree.

# %%
stats = sector_stats(table)
per_2024 = np.array([r["per"] for r in table.records()
                     if r["year"] == 2024 and r["per"] is not None])
print("2024 PER mean/std:", stats[(2024, "per")])
print("by hand:          ", (per_2024.mean(), per_2024.std()))
assert np.allclose(stats[(2024, "per")], (per_2024.mean(), per_2024.std()))

# %%
print(SCREEN_RULES)

# %%
report = engine.ask(question)
for c in report.classifications:
    eps = [d["eps"] for _, d in sorted(c.evidence["years"].items())]
    print(f"{c.bucket:12s} {c.company_code} {c.company_name:18s} "
          f"mean PER {c.evidence['mean_per']:6.2f}  EPS {eps}")

# %% [markdown]
# The full text report, including provenance and the exact query.

# %%
print(report.to_text())

# %% [markdown]
# Thresholds in the question replace the default filter.

# %%
strict = engine.ask("Which companies in the same sector as SK Hynix are undervalued with "
                    "PER below 7 and PBR under 0.6 in 2024-2025?")
print(strict.provenance["query"])
print([(c.company_code, c.bucket) for c in strict.classifications])
