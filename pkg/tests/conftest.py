import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from kgraph.builders import (  # noqa: E402
    full_shift_document,
    ledrappier_document,
    random_product_document,
    single_vertex_document,
)
from kgraph.graph import load_kgraph  # noqa: E402
from kgraph.spectral import perron_frobenius  # noqa: E402

# the fixture family every whole-graph property is checked on
FIXTURES = {
    "ledrappier": ledrappier_document,
    "full_shift_2": lambda: full_shift_document(2),
    "full_shift_3": lambda: full_shift_document(3),
    "multi_loop": lambda: single_vertex_document([2, 3]),
    "random_01": lambda: random_product_document(0),
}

_graphs = {}


def graph(name):
    if name not in _graphs:
        g = load_kgraph(FIXTURES[name]())
        _graphs[name] = (g, perron_frobenius(g))
    return _graphs[name]


@pytest.fixture(params=sorted(FIXTURES))
def fixture_graph(request):
    return (request.param,) + graph(request.param)


@pytest.fixture
def ledrappier():
    return graph("ledrappier")


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
