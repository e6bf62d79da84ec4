import math

import numpy as np
import pytest

from gifsdim.graph import DirectedMultigraph, full_shift
from gifsdim.specfile import data_path, load_spec


@pytest.fixture
def spec():
    def _load(name):
        return load_spec(data_path(name + ".gifs"))

    return _load


def random_strong_graph(rng, max_edges=5, max_vertices=3):
    """Random multigraph whose edge shift is irreducible."""
    from scipy.sparse.csgraph import connected_components

    while True:
        nv = int(rng.integers(1, max_vertices + 1))
        ne = int(rng.integers(max(nv, 1), max_edges + 1))
        verts = [f"v{k}" for k in range(nv)]
        edges = [(f"e{k}", verts[rng.integers(nv)], verts[rng.integers(nv)]) for k in range(ne)]
        g = DirectedMultigraph.from_edges(edges, vertices=verts)
        A = g.incidence_matrix()
        n_comp, _ = connected_components(A > 0, directed=True, connection="strong")
        if n_comp == 1:
            return g


def constant_potential(g, value):
    return {e: value for e in g.edges}


@pytest.fixture
def weighted_pair():
    """Two vertices whose weighted vertex matrix is [[1/2, 1/3], [1/4, 0]]."""
    g = DirectedMultigraph.from_edges([("a", "u", "u"), ("b", "u", "w"), ("c", "w", "u")])
    f = {"a": math.log(1 / 2), "b": math.log(1 / 3), "c": math.log(1 / 4)}
    return g, f


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.RESULTS):
        terminalreporter.write_line(line)
