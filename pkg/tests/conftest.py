"""Shared hypothesis strategies for the test suite."""

from hypothesis import strategies as st

from qconsensus.graphs import Graph


@st.composite
def connected_graphs(draw, min_n: int = 2, max_n: int = 12):
    """A uniform-ish random connected graph: a random tree plus extra edges."""
    n = draw(st.integers(min_n, max_n))
    edges = set()
    for i in range(1, n):
        parent = draw(st.integers(0, i - 1))
        edges.add((parent, i))
    extra = draw(st.lists(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)),
                          max_size=2 * n))
    for u, v in extra:
        if u != v:
            edges.add((min(u, v), max(u, v)))
    return Graph.from_edges(n, sorted(edges))
