import json
import sys
from pathlib import Path

import pytest

HERE = Path(__file__).parent
sys.path.insert(0, str(HERE))

from stockkg.core import Engine
from stockkg.fixtures import demo_graph

DATA = HERE / "data"
GOLDEN = HERE / "golden"

QUESTIONS = json.loads((DATA / "questions.json").read_text(encoding="utf-8"))
CASE1_QUESTION = QUESTIONS["case1"]
CASE2_QUESTION = QUESTIONS["case2"]


def listing(name: str) -> str:
    return (DATA / f"listing_{name}.cypher").read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def demo():
    graph, report = demo_graph(42)
    return graph


@pytest.fixture(scope="session")
def demo_report():
    return demo_graph(42)[1]


@pytest.fixture(scope="session")
def engine(demo):
    return Engine(demo)
