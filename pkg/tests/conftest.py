import sys

import hypothesis
import pytest

from neuroindex.classical import build_classical
from neuroindex.config import EngineConfig
from neuroindex.corpus import Corpus
from neuroindex.engine import build_engine
from neuroindex.iann import TrainConfig, train_iann

hypothesis.settings.register_profile("default", deadline=None, max_examples=50)
hypothesis.settings.register_profile("fast", deadline=None, max_examples=10)
hypothesis.settings.load_profile("default")

# Five files, two scripted queries each; every query's terms sit adjacent
# and in direct order in exactly one file. Other files hold at most one of
# the terms or both in reverse order.
RELEVANCE_TEXTS = {
    "a_travel.txt": "cheap flights to warm beaches for the winter holiday",
    "b_bakery.txt": "fresh bread and strong coffee every morning at the corner bakery",
    "c_garden.txt": "the garden needs rain after a long dry summer",
    "d_sales.txt": "holiday winter sales on coffee makers and bread machines",
    "e_weather.txt": "summer rain and flights delayed by dry cheap weather",
}
RELEVANCE_QUERIES = {
    "cheap flights": "a_travel.txt",
    "winter holiday": "a_travel.txt",
    "strong coffee": "b_bakery.txt",
    "corner bakery": "b_bakery.txt",
    "dry summer": "c_garden.txt",
    "garden needs": "c_garden.txt",
    "coffee makers": "d_sales.txt",
    "bread machines": "d_sales.txt",
    "flights delayed": "e_weather.txt",
    "cheap weather": "e_weather.txt",
}

TOBE = ["to", "be", "or", "not", "to", "be"]


@pytest.fixture(scope="session")
def tobe_corpus():
    return Corpus.from_tokens([("tobe.txt", list(TOBE))])


@pytest.fixture(scope="session")
def tobe_cdx(tobe_corpus):
    return build_classical(TOBE, tobe_corpus.dictionary, 0)


@pytest.fixture(scope="session")
def tobe_iann(tobe_cdx, tobe_corpus):
    return train_iann(tobe_cdx, tobe_corpus.dictionary, TrainConfig(seed=42))


@pytest.fixture(scope="session")
def relevance_corpus():
    return Corpus.from_texts(RELEVANCE_TEXTS.items())


@pytest.fixture(scope="session")
def relevance_engine(relevance_corpus):
    return build_engine(relevance_corpus, EngineConfig(seed=42))


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("tests.test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(results):
        ok, line = results[key]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {key}: {line}")
