"""Cochains, cochain maps and the parameter-free tensor operations."""

from __future__ import annotations

from collections.abc import Callable, Iterable
from dataclasses import dataclass

import numpy as np

from .complex import CombinatorialComplex
from .errors import EmptyAugmentation, NotAPartition, ShapeMismatch
from .lifting import Graph, add_cells_dedup, graph_cc
from .neighborhoods import NeighborhoodMatrix, incidence

__all__ = [
    "ACTIVATIONS",
    "Cochain",
    "aggregate",
    "apply_map",
    "classify_map",
    "graph_pool_via_clusters",
    "merge_node",
    "push_forward",
    "resolve_activation",
    "split_node",
]


def _leaky_relu(x, slope=0.2):
    return np.where(x > 0, x, slope * x)


ACTIVATIONS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "identity": lambda x: x,
    "tanh": np.tanh,
    "relu": lambda x: np.maximum(x, 0.0),
    "leaky_relu": _leaky_relu,
    "sigmoid": lambda x: 1.0 / (1.0 + np.exp(-x)),
}


def resolve_activation(act) -> Callable[[np.ndarray], np.ndarray]:
    """Accept an activation name, ``None`` (identity) or a callable."""
    if act is None:
        return ACTIVATIONS["identity"]
    if callable(act):
        return act
    try:
        return ACTIVATIONS[act]
    except KeyError:
        raise ValueError(f"unknown activation {act!r}; choose from {sorted(ACTIVATIONS)}") from None


@dataclass(frozen=True)
class Cochain:
    """Feature matrix on the k-cells; row i belongs to the i-th k-cell in canonical order."""

    rank: int
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim == 1:
            data = data[:, None]
        if data.ndim != 2:
            raise ShapeMismatch(f"cochain data must be 2-D, got shape {data.shape}")
        object.__setattr__(self, "data", data)

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def check(self, cc: CombinatorialComplex) -> Cochain:
        if self.data.shape[0] != cc.count(self.rank):
            raise ShapeMismatch(f"{self.data.shape[0]} rows for {cc.count(self.rank)} cells of rank {self.rank}")
        return self

    @classmethod
    def zeros(cls, cc: CombinatorialComplex, rank: int, d: int = 1) -> Cochain:
        return cls(rank, np.zeros((cc.count(rank), d)))


def _check_domain(G: NeighborhoodMatrix, H: Cochain) -> None:
    if H.rank != G.domain_rank or H.data.shape[0] != G.shape[1]:
        raise ShapeMismatch(
            f"{G.kind} maps rank {G.domain_rank} ({G.shape[1]} cells); "
            f"got a rank-{H.rank} cochain with {H.data.shape[0]} rows"
        )


def apply_map(G: NeighborhoodMatrix, H: Cochain) -> Cochain:
    """Left-multiply: ``G·H`` lands at ``G.codomain_rank``."""
    _check_domain(G, H)
    return Cochain(G.codomain_rank, G.matrix @ H.data)


def aggregate(rows: np.ndarray, cols: np.ndarray, values: np.ndarray, n_rows: int, agg: str) -> np.ndarray:
    """Aggregate ``values[cols[e]]`` into ``rows[e]`` for every pattern entry ``e``.

    Rows without entries are zero for every aggregation.
    """
    out = np.zeros((n_rows, values.shape[1]))
    if agg == "sum" or agg == "mean":
        np.add.at(out, rows, values[cols])
        if agg == "mean":
            counts = np.bincount(rows, minlength=n_rows).astype(float)
            out[counts > 0] /= counts[counts > 0, None]
    elif agg == "max":
        out[:] = -np.inf
        np.maximum.at(out, rows, values[cols])
        out[np.isneginf(out)] = 0.0
    else:
        raise ValueError(f"unknown aggregation {agg!r}")
    return out


def _pattern(G: NeighborhoodMatrix) -> tuple[np.ndarray, np.ndarray]:
    coo = G.matrix.tocoo()
    keep = coo.data != 0
    return coo.row[keep].astype(np.int64), coo.col[keep].astype(np.int64)


def push_forward(G: NeighborhoodMatrix, H: Cochain, agg: str = "sum", alpha=None) -> Cochain:
    """Push ``H`` from ``G.domain_rank`` to ``G.codomain_rank``.

    The neighbours of a target cell y are the domain cells x with a non-zero
    (y, x) entry, i.e. the non-zeros of column y of Gᵀ. ``alpha`` is applied
    row-wise before aggregation; matrix weights are not used.
    """
    _check_domain(G, H)
    rows, cols = _pattern(G)
    msgs = resolve_activation(alpha)(H.data)
    return Cochain(G.codomain_rank, aggregate(rows, cols, msgs, G.shape[0], agg))


def merge_node(
    G1: NeighborhoodMatrix,
    G2: NeighborhoodMatrix,
    H1: Cochain,
    H2: Cochain,
    combine: str = "sum",
    beta=None,
    agg: str = "sum",
    alpha1=None,
    alpha2=None,
) -> Cochain:
    """``beta(F_{G1}(H1) ⊗ F_{G2}(H2))`` with ⊗ either ``sum`` or ``concat``."""
    if G1.codomain_rank != G2.codomain_rank or G1.shape[0] != G2.shape[0]:
        raise ShapeMismatch(f"{G1.kind} and {G2.kind} land in different cochain spaces")
    K1 = push_forward(G1, H1, agg, alpha1).data
    K2 = push_forward(G2, H2, agg, alpha2).data
    if combine == "sum":
        if K1.shape != K2.shape:
            raise ShapeMismatch(f"sum-merge needs equal feature dims, got {K1.shape[1]} and {K2.shape[1]}")
        merged = K1 + K2
    elif combine == "concat":
        merged = np.concatenate([K1, K2], axis=1)
    else:
        raise ValueError(f"unknown combine {combine!r}")
    return Cochain(G1.codomain_rank, resolve_activation(beta)(merged))


def split_node(
    G1: NeighborhoodMatrix,
    G2: NeighborhoodMatrix,
    H: Cochain,
    beta1=None,
    beta2=None,
    agg: str = "sum",
) -> tuple[Cochain, Cochain]:
    """``(beta1(F_{G1}(H)), beta2(F_{G2}(H)))``."""
    K1 = push_forward(G1, H, agg)
    K2 = push_forward(G2, H, agg)
    return (
        Cochain(K1.rank, resolve_activation(beta1)(K1.data)),
        Cochain(K2.rank, resolve_activation(beta2)(K2.data)),
    )


def classify_map(G: NeighborhoodMatrix) -> str:
    """``"pooling"`` if it pushes to a higher rank, ``"unpooling"`` if lower."""
    if G.codomain_rank > G.domain_rank:
        return "pooling"
    if G.codomain_rank < G.domain_rank:
        return "unpooling"
    return "rank-preserving"


def graph_pool_via_clusters(
    g: Graph,
    clusters: Iterable[Iterable[int]],
    H0: Cochain,
    agg: str = "sum",
) -> tuple[CombinatorialComplex, Cochain]:
    """Coarsen a vertex signal by pooling through cluster 2-cells.

    Clusters that coincide with an existing vertex or edge are skipped (they
    are already cells); if nothing is left, :class:`EmptyAugmentation`.
    Pooled rows follow the canonical order of the 2-cells.
    """
    clusters = [sorted({int(v) for v in c}) for c in clusters]
    flat = [v for c in clusters for v in c]
    if any(not c for c in clusters) or sorted(flat) != list(range(g.vertex_count)):
        raise NotAPartition("clusters must be non-empty, disjoint and cover every vertex")
    base = graph_cc(g)
    cc = add_cells_dedup(base, clusters, 2)
    if cc.count(2) == 0:
        raise EmptyAugmentation("every cluster coincides with an existing cell")
    pooled = push_forward(incidence(cc, 0, 2).T, H0.check(cc), agg)
    return cc, pooled
