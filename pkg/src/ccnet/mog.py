"""Mapper on graphs (MOG): interval covers, pull-back components, CC pooling."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components, shortest_path

from .cochain import Cochain, push_forward
from .complex import Cell, CombinatorialComplex
from .errors import BadParams, ValidationError
from .lifting import Graph, add_cells_dedup, graph_cc
from .neighborhoods import incidence

__all__ = [
    "MogCover",
    "MogResult",
    "agd",
    "make_cover",
    "mog",
    "mog_pool",
    "normalize_scalar",
]


def _adjacency_csr(g: Graph) -> sp.csr_array:
    if not g.edges:
        return sp.csr_array((g.vertex_count, g.vertex_count))
    e = np.array(g.edges)
    rows = np.concatenate([e[:, 0], e[:, 1]])
    cols = np.concatenate([e[:, 1], e[:, 0]])
    return sp.csr_array((np.ones(len(rows)), (rows, cols)), shape=(g.vertex_count, g.vertex_count))


def agd(g: Graph) -> np.ndarray:
    """Average geodesic distance per vertex, within its connected component.

    ``AGD(v) = Σ_u d(v, u) / |C(v)|`` with unit edge lengths, where ``C(v)``
    is the component of v.
    """
    n = g.vertex_count
    if n == 0:
        return np.zeros(0)
    A = _adjacency_csr(g)
    _, labels = connected_components(A, directed=False)
    dist = shortest_path(A, method="D", directed=False, unweighted=True)
    out = np.zeros(n)
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        out[idx] = dist[np.ix_(idx, idx)].sum(axis=1) / len(idx)
    return out


def normalize_scalar(f) -> np.ndarray:
    """Min-max scale to [0, 1]; a constant function maps to 0.5 everywhere."""
    f = np.asarray(f, dtype=float)
    if not np.all(np.isfinite(f)):
        raise ValidationError("scalar function must be finite")
    if f.size == 0:
        return f
    lo, hi = f.min(), f.max()
    if hi == lo:
        return np.full_like(f, 0.5)
    return (f - lo) / (hi - lo)


@dataclass(frozen=True)
class MogCover:
    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self):
        for lo, hi in self.intervals:
            if not lo < hi:
                raise BadParams(f"interval ({lo}, {hi}) is empty")

    def members(self, f: np.ndarray, t: int) -> np.ndarray:
        """Vertices whose value lies in the closed interval ``t``."""
        lo, hi = self.intervals[t]
        return np.flatnonzero((f >= lo) & (f <= hi))

    def __len__(self) -> int:
        return len(self.intervals)


def make_cover(n_intervals: int, overlap: float) -> MogCover:
    """``n`` intervals of length ``(1 + overlap) / n`` with evenly spaced starts.

    The first starts at 0 and the last ends at 1; with ``n = 1`` the cover is
    ``[(0, 1)]``.
    """
    if n_intervals < 1 or not 0 < overlap < 1:
        raise BadParams(f"need n >= 1 and 0 < overlap < 1, got n={n_intervals}, overlap={overlap}")
    if n_intervals == 1:
        return MogCover(((0.0, 1.0),))
    length = (1.0 + overlap) / n_intervals
    starts = np.arange(n_intervals) * (1.0 - length) / (n_intervals - 1)
    ends = np.minimum(starts + length, 1.0)
    ends[-1] = 1.0  # guard against rounding so f = 1 stays covered
    return MogCover(tuple((float(s), float(e)) for s, e in zip(starts, ends)))


@dataclass(frozen=True)
class MogResult:
    """Components ``(interval index, vertex set)``, their intersection edges and the augmented CC.

    ``cell_of[c]`` is the augmented-CC cell realizing component ``c``; it
    is a rank-(dim+1) cell unless the component coincides with an existing
    vertex or edge, in which case that existing cell is reused.
    """

    components: tuple[tuple[int, Cell], ...]
    mog_edges: tuple[tuple[int, int], ...]
    augmented_cc: CombinatorialComplex
    cell_of: tuple[Cell, ...]
    rank: int

    @property
    def new_cells(self) -> tuple[Cell, ...]:
        return self.augmented_cc.cells_of_rank(self.rank)

    def adjacency(self) -> np.ndarray:
        n = len(self.components)
        A = np.zeros((n, n), dtype=int)
        for i, j in self.mog_edges:
            A[i, j] = A[j, i] = 1
        return A


def _components(g: Graph, members: np.ndarray) -> list[Cell]:
    inside = set(members.tolist())
    adj = g.adjacency_lists()
    seen: set[int] = set()
    out = []
    for s in sorted(inside):
        if s in seen:
            continue
        comp = [s]
        seen.add(s)
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for w in adj[u]:
                if w in inside and w not in seen:
                    seen.add(w)
                    comp.append(w)
                    queue.append(w)
        out.append(tuple(sorted(comp)))
    return out


def mog(g: Graph, f, cover: MogCover, base: CombinatorialComplex | None = None) -> MogResult:
    """Run the mapper on ``g`` with scalar ``f`` (values in [0, 1]) and interval cover.

    Components are ordered by (interval index, smallest vertex); a vertex set
    found in several intervals is kept once, at its first interval. The
    components are added to ``base`` (default: the graph's own CC) at rank
    ``base.dim + 1`` under the lifting dedup rule.
    """
    f = np.asarray(f, dtype=float)
    if f.shape != (g.vertex_count,):
        raise ValidationError(f"scalar function has shape {f.shape}, expected ({g.vertex_count},)")
    if np.any(f < 0) or np.any(f > 1):
        raise ValidationError("scalar function must take values in [0, 1]; see normalize_scalar")
    comps: list[tuple[int, Cell]] = []
    seen: set[Cell] = set()
    for t in range(len(cover)):
        for c in _components(g, cover.members(f, t)):
            if c not in seen:
                seen.add(c)
                comps.append((t, c))
    sets = [set(c) for _, c in comps]
    edges = tuple(
        (i, j) for i in range(len(comps)) for j in range(i + 1, len(comps)) if sets[i] & sets[j]
    )
    base = graph_cc(g) if base is None else base
    rank = max(base.dim, 0) + 1
    cc = add_cells_dedup(base, [c for _, c in comps], rank)
    return MogResult(tuple(comps), edges, cc, tuple(c for _, c in comps), rank)


def mog_pool(g: Graph, H0: Cochain, f, cover: MogCover, agg: str = "sum") -> tuple[MogResult, Cochain]:
    """Pool a vertex cochain onto the new MOG cells through ``B_{0,r}ᵀ``."""
    res = mog(g, f, cover)
    cc = res.augmented_cc
    if cc.count(res.rank) == 0:
        return res, Cochain(res.rank, np.zeros((0, np.asarray(H0.data).shape[1])))
    return res, push_forward(incidence(cc, 0, res.rank).T, H0.check(cc), agg)
