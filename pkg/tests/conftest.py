from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ccnet.complex import build_cc  # noqa: E402
from ccnet.datasets import cycle_vs_clique  # noqa: E402
from ccnet.io import load_off, mesh_to_cc  # noqa: E402
from ccnet.lifting import (  # noqa: E402
    Graph,
    all_triangles,
    coface_cc,
    graph_cc,
    lattice_cc,
    loop_cc,
    n_hop_cc,
    path_cc,
)
from ccnet.mog import agd, make_cover, mog, normalize_scalar  # noqa: E402

FIXTURES = Path(__file__).parents[1] / "src" / "ccnet" / "fixtures"


def example_cc():
    """S = {s0, s1, s2}, {s0,s1} at rank 1 and {s0,s1,s2} at rank 2."""
    return build_cc(3, [((0, 1), 1), ((0, 1, 2), 2)])


def cycle(n: int) -> Graph:
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)])


def path(n: int) -> Graph:
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def random_graph(n: int, p: float, seed: int) -> Graph:
    rng = np.random.default_rng(seed)
    return Graph.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p])


def two_triangles():
    g = Graph.from_edges(4, [(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)])
    return loop_cc(g, [(0, 1, 2), (1, 2, 3)])


def fixture_ccs() -> dict[str, object]:
    """Named complexes covering every construction in the package."""
    p6 = path(6)
    wheel = Graph.from_edges(6, [(0, i) for i in range(1, 6)] + [(i, i % 5 + 1) for i in range(1, 6)])
    rg = random_graph(14, 0.3, 3)
    f = normalize_scalar(agd(rg))
    return {
        "example": example_cc(),
        "loop_c4": loop_cc(cycle(4), [(0, 1, 2, 3)]),
        "loop_triangle": loop_cc(cycle(3), [(0, 1, 2)]),
        "path": path_cc(path(5), [(0, 1, 2), (2, 3, 4), (1, 2, 3)]),
        "nhop_c6": n_hop_cc(cycle(6), 2),
        "coface": coface_cc(two_triangles()),
        "coface_wheel": coface_cc(loop_cc(wheel, all_triangles(wheel))),
        "lattice_3x3": lattice_cc(3, 3),
        "lattice_4x4_s2": lattice_cc(4, 4, 2, 2),
        "mog_path": mog(p6, np.arange(6) / 5, make_cover(2, 0.3)).augmented_cc,
        "mog_random": mog(rg, f, make_cover(3, 0.4)).augmented_cc,
        "tetrahedron": mesh_to_cc(load_off(FIXTURES / "tetrahedron.off")),
        "clique_ring": cycle_vs_clique(1, seed=5)[1].cc,
        "graph": graph_cc(random_graph(7, 0.5, 1)),
    }


@pytest.fixture
def example():
    return example_cc()


@pytest.fixture
def rng():
    return np.random.default_rng(0)
