# %% [markdown]
# # Comparing two competitors
#
# A question about revenue, operating income and net income for Samsung
# Electronics and SK Hynix goes through the whole pipeline: classify,
# fill a query template, execute, and write a report whose numbers can be
# traced back to table cells.

# %%
import numpy as np

from stockkg import Engine
from stockkg.answer import check_faithfulness
from stockkg.fixtures import demo_graph

graph, _ = demo_graph(42)
engine = Engine(graph)

question = ("Analyze the performance trends by comparing the revenue, operating income, "
            "and net income of Samsung Electronics (stock code: 005930) with its competitor "
            "SK Hynix (stock code: 000660) for the years 2023, 2024, and 2025.")

# %% [markdown]
# The translator picks an intent and the entities it mentions. The explicit
# stock codes win over name matching.

# %%
translation = engine.translate(question)
print(translation.to_json()["intent"])
print()
print(translation.query_text)

# %% [markdown]
# The raw result has one row per year and one column group per company.

# %%
table = engine.query(translation.query_text)
print(table.to_text())

# %% [markdown]
# Operating margins are not part of the report, but they are one line of
# numpy away and help read it.

# %%
rec = table.records()
rev = np.array([[r["samsung_revenue"], r["skhynix_revenue"]] for r in rec])
op = np.array([[r["samsung_operating_income"], r["skhynix_operating_income"]] for r in rec])
margins = op / rev
for year, (s, k) in zip(table.column("year"), margins):
    print(f"{year}: Samsung {s:6.1%}   SK Hynix {k:6.1%}")

# %% [markdown]
# The composed report. Each narrative sentence is filled from the same
# formatted values as the table slice under it.

# %%
report = engine.ask(question)
print(report.to_text())

# %%
problems = check_faithfulness(report)
print("unsupported numbers in the narrative:", problems or "none")
for t in report.trends:
    if t.metric == "operating_income" and t.yoy_pct is not None:
        print(f"{t.company:10s} {t.year}  {t.yoy_pct:+.1f}%")
