"""Small seeded synthetic datasets for desk-scale experiments."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .complex import CombinatorialComplex
from .lifting import Graph, add_cells_dedup, graph_cc, loop_cc
from .nn.train import Sample

__all__ = [
    "LabeledComplex",
    "cycle_vs_clique",
    "pooling_classifier_spec",
    "to_samples",
    "vertex_features",
]


class LabeledComplex(NamedTuple):
    graph: Graph
    cc: CombinatorialComplex
    label: int


def _cycle_item(rng: np.random.Generator, n: int) -> LabeledComplex:
    # a relabelled n-cycle lifted with its single loop as a 2-cell
    order = rng.permutation(n)
    ring = [(int(order[i]), int(order[(i + 1) % n])) for i in range(n)]
    g = Graph.from_edges(n, ring)
    return LabeledComplex(g, loop_cc(g, [order.tolist()]), 0)


def _clique_item(rng: np.random.Generator, n: int) -> LabeledComplex:
    # cliques of size 3-4 chained in a ring, each clique lifted to a 2-cell
    sizes = []
    while sum(sizes) < n:
        sizes.append(int(rng.integers(3, 5)))
    sizes[-1] -= sum(sizes) - n
    if sizes[-1] < 3:
        sizes[-2] += sizes.pop()
    order = rng.permutation(n)
    cliques, start = [], 0
    for s in sizes:
        cliques.append(sorted(int(v) for v in order[start:start + s]))
        start += s
    edges = [(u, v) for c in cliques for i, u in enumerate(c) for v in c[i + 1:]]
    for a, b in zip(cliques, cliques[1:] + cliques[:1]):
        if a is not b:
            edges.append((a[-1], b[0]))
    g = Graph.from_edges(n, edges)
    return LabeledComplex(g, add_cells_dedup(graph_cc(g), cliques, 2), 1)


def cycle_vs_clique(n_per_class: int = 30, n_range: tuple[int, int] = (8, 12), seed: int = 0) -> list[LabeledComplex]:
    """Cycle-lifted (label 0) and clique-lifted (label 1) graphs, interleaved.

    Vertex counts are drawn uniformly from ``n_range`` (inclusive).
    """
    rng = np.random.default_rng(seed)
    items = []
    for _ in range(n_per_class):
        items.append(_cycle_item(rng, int(rng.integers(n_range[0], n_range[1] + 1))))
        items.append(_clique_item(rng, int(rng.integers(n_range[0], n_range[1] + 1))))
    return items


def vertex_features(g: Graph) -> np.ndarray:
    """``[1, degree / 4]`` per vertex."""
    deg = np.zeros(g.vertex_count)
    for u, v in g.edges:
        deg[u] += 1
        deg[v] += 1
    return np.column_stack([np.ones(g.vertex_count), deg / 4.0])


def pooling_classifier_spec(hidden: int = 8, classes: int = 2) -> dict:
    """A pooling CCNN: vertices → edges → faces with a merge at the faces, then a readout."""
    return {
        "nodes": [
            {"id": "x0", "rank": 0, "dim": 2},
            {"id": "x1", "rank": 1, "dim": hidden, "activation": "tanh"},
            {"id": "x2", "rank": 2, "dim": hidden, "activation": "tanh"},
        ],
        "edges": [
            {"src": "x0", "dst": "x1", "selector": "B_{0,1}^T", "kind": "conv", "normalize": True},
            {"src": "x0", "dst": "x2", "selector": "B_{0,2}^T", "kind": "conv", "normalize": True},
            {"src": "x1", "dst": "x2", "selector": "B_{1,2}^T", "kind": "conv", "normalize": True},
        ],
        "readout": {"nodes": ["x2"], "classes": classes},
    }


def to_samples(items) -> list[Sample]:
    return [Sample(it.cc, {"x0": vertex_features(it.graph)}, it.label) for it in items]
