import numpy as np
import pytest
from hypothesis import strategies as st

from signed_bipartite.graph import SignedBipartiteGraph

_ACCEPTANCE = []


@pytest.fixture
def criterion():
    """Record one acceptance line: ``criterion(name, ok, detail)``; returns ``ok``."""
    def record(name, ok, detail=""):
        _ACCEPTANCE.append((name, bool(ok), detail))
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")


@st.composite
def signed_matrices(draw, max_buyers=8, max_sellers=8, min_side=1):
    nb = draw(st.integers(min_side, max_buyers))
    ns = draw(st.integers(min_side, max_sellers))
    cells = draw(st.lists(st.sampled_from([-1, 0, 0, 1]), min_size=nb * ns, max_size=nb * ns))
    return np.array(cells, dtype=int).reshape(nb, ns)


@st.composite
def signed_graphs(draw, **kwargs):
    return SignedBipartiteGraph.from_matrix(draw(signed_matrices(**kwargs)))


@pytest.fixture
def square_positive():
    return SignedBipartiteGraph.from_matrix([[1, 1], [1, 1]])
