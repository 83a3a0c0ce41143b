"""Lifting graphs, simplicial complexes and image grids to combinatorial complexes."""

from __future__ import annotations

from collections import deque
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from itertools import combinations

from .complex import Cell, CombinatorialComplex, as_cell, build_cc
from .errors import (
    BadWindow,
    ChordPresent,
    DuplicateCell,
    NotACycle,
    NotAPath,
    NotTwoDimensional,
    SelfLoop,
    StrictContainmentViolation,
    TooShort,
    ValidationError,
)
from .neighborhoods import coadjacency

__all__ = [
    "Graph",
    "add_cells_dedup",
    "all_triangles",
    "augment",
    "coface_cc",
    "graph_cc",
    "lattice_cc",
    "loop_cc",
    "n_hop_cc",
    "path_cc",
]


@dataclass(frozen=True)
class Graph:
    """Undirected simple graph on ``range(vertex_count)``."""

    vertex_count: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        seen = set()
        for u, v in self.edges:
            if u == v:
                raise SelfLoop(f"self-loop at {u}")
            if not (0 <= u < self.vertex_count and 0 <= v < self.vertex_count):
                raise ValidationError(f"edge ({u}, {v}) outside 0..{self.vertex_count - 1}")
            if u > v:
                raise ValidationError(f"edge ({u}, {v}) is not sorted; use Graph.from_edges")
            if (u, v) in seen:
                raise ValidationError(f"duplicate edge ({u}, {v})")
            seen.add((u, v))

    @classmethod
    def from_edges(cls, vertex_count: int, edges: Iterable[tuple[int, int]]) -> Graph:
        """Sort endpoints, drop duplicates; self-loops raise :class:`SelfLoop`."""
        pairs = set()
        for u, v in edges:
            u, v = int(u), int(v)
            if u == v:
                raise SelfLoop(f"self-loop at {u}")
            pairs.add((min(u, v), max(u, v)))
        return cls(int(vertex_count), tuple(sorted(pairs)))

    def adjacency_lists(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.vertex_count)]
        for u, v in self.edges:
            adj[u].append(v)
            adj[v].append(u)
        for nbrs in adj:
            nbrs.sort()
        return adj

    def has_edge(self, u: int, v: int) -> bool:
        return (min(u, v), max(u, v)) in self._edge_set

    @property
    def _edge_set(self) -> frozenset[tuple[int, int]]:
        # cached lazily on the frozen instance
        try:
            return self.__dict__["_es"]
        except KeyError:
            es = frozenset(self.edges)
            object.__setattr__(self, "_es", es)
            return es


def graph_cc(g: Graph) -> CombinatorialComplex:
    """Vertices at rank 0, edges at rank 1."""
    return build_cc(g.vertex_count, [(e, 1) for e in g.edges])


def add_cells_dedup(cc: CombinatorialComplex, candidates: Iterable[Iterable[int]], rank: int) -> CombinatorialComplex:
    """Add ``candidates`` at ``rank``, skipping any vertex set already present.

    A candidate equal to an existing cell (at any rank) keeps the existing
    rank. A candidate strictly inside an existing cell of lower rank would
    break order preservation and raises :class:`StrictContainmentViolation`.
    """
    new: dict[Cell, int] = {}
    for raw in candidates:
        c = as_cell(raw)
        if c in cc.cells or c in new:
            continue
        for y in cc.supersets(c):
            if cc.cells[y] < rank:
                raise StrictContainmentViolation(f"{c} lies inside {y} of lower rank {cc.cells[y]}")
        new[c] = rank
    return cc.with_cells(new.items()) if new else cc


def augment(cc: CombinatorialComplex, new_cells: Iterable[Iterable[int]]) -> CombinatorialComplex:
    """Highest-rank augmentation: every new cell gets rank ``dim + 1``.

    Unlike the lifting constructions, this is strict: a new cell equal to an
    existing cell (or repeated) raises :class:`DuplicateCell`, and a new cell
    strictly inside an existing cell raises :class:`StrictContainmentViolation`.
    """
    rank = cc.dim + 1
    seen: set[Cell] = set()
    for raw in new_cells:
        c = as_cell(raw)
        if c in cc.cells or c in seen:
            raise DuplicateCell(f"{c} is already a cell")
        if cc.supersets(c):
            raise StrictContainmentViolation(f"{c} lies strictly inside {cc.supersets(c)[0]}")
        seen.add(c)
    return cc.with_cells((c, rank) for c in seen)


def _ball(adj: Sequence[Sequence[int]], center: int, radius: int) -> set[int]:
    dist = {center: 0}
    queue = deque([center])
    while queue:
        u = queue.popleft()
        if dist[u] == radius:
            continue
        for w in adj[u]:
            if w not in dist:
                dist[w] = dist[u] + 1
                queue.append(w)
    return set(dist)


def n_hop_cc(g: Graph, n: int) -> CombinatorialComplex:
    """Graph plus one rank-n cell per n-hop ball (center included), deduplicated."""
    if n < 2:
        raise ValidationError("n-hop lifting needs n >= 2")
    adj = g.adjacency_lists()
    balls = [_ball(adj, v, n) for v in range(g.vertex_count)]
    return add_cells_dedup(graph_cc(g), balls, n)


def path_cc(g: Graph, paths: Iterable[Sequence[int]]) -> CombinatorialComplex:
    """Graph plus a 2-cell for the vertex set of each walk of two or more edges.

    Walks may revisit vertices; the cell is their vertex set.
    """
    cells = []
    for p in paths:
        p = [int(v) for v in p]
        if len(p) < 3:
            raise TooShort(f"path {p} has fewer than two edges")
        for u, v in zip(p, p[1:]):
            if u == v or not g.has_edge(u, v):
                raise NotAPath(f"({u}, {v}) is not an edge of the graph")
        cells.append(p)
    return add_cells_dedup(graph_cc(g), cells, 2)


def _check_loop(g: Graph, loop: Sequence[int]) -> Cell:
    loop = [int(v) for v in loop]
    if len(loop) < 3 or len(set(loop)) != len(loop):
        raise NotACycle(f"{loop} is not a cycle on distinct vertices")
    ring = {(min(u, v), max(u, v)) for u, v in zip(loop, loop[1:] + loop[:1])}
    for u, v in ring:
        if not g.has_edge(u, v):
            raise NotACycle(f"({u}, {v}) is not an edge of the graph")
    inside = {(u, v) for u, v in combinations(sorted(loop), 2) if g.has_edge(u, v)}
    extra = inside - ring
    if extra:
        raise ChordPresent(f"loop {loop} has chord(s) {sorted(extra)}")
    return as_cell(loop)


def loop_cc(g: Graph, loops: Iterable[Sequence[int]]) -> CombinatorialComplex:
    """Graph plus a 2-cell per chordless cycle."""
    return add_cells_dedup(graph_cc(g), [_check_loop(g, lp) for lp in loops], 2)


def all_triangles(g: Graph) -> list[tuple[int, int, int]]:
    """All 3-cliques of ``g`` in lexicographic order."""
    adj = [set(n) for n in g.adjacency_lists()]
    out = []
    for u, v in g.edges:
        for w in sorted(adj[u] & adj[v]):
            if w > v:
                out.append((u, v, w))
    return out


def coface_cc(sc: CombinatorialComplex) -> CombinatorialComplex:
    """Add a 3-cell per triangle: its vertices plus those of its 1-coadjacent triangles."""
    if sc.dim != 2:
        raise NotTwoDimensional(f"coface lifting needs a 2-dimensional complex, got dim {sc.dim}")
    tris = sc.cells_of_rank(2)
    for t in tris:
        if len(t) != 3:
            raise NotTwoDimensional(f"2-cell {t} is not a triangle")
    co = coadjacency(sc, 2, 1).matrix
    candidates = []
    for i, t in enumerate(tris):
        verts = set(t)
        for j in co.indices[co.indptr[i]:co.indptr[i + 1]]:
            verts.update(tris[j])
        candidates.append(verts)
    return add_cells_dedup(sc, candidates, 3)


def lattice_cc(height: int, width: int, window: int = 2, stride: int = 1) -> CombinatorialComplex:
    """Pixel grid: 4-neighbour edges at rank 1 and window×window blocks at rank 2.

    Pixel (r, c) is vertex ``r * width + c``.
    """
    if window < 2 or window > min(height, width) or stride < 1:
        raise BadWindow(f"window={window}, stride={stride} invalid for a {height}x{width} grid")
    vid = lambda r, c: r * width + c  # noqa: E731
    edges = [((vid(r, c), vid(r, c + 1)), 1) for r in range(height) for c in range(width - 1)]
    edges += [((vid(r, c), vid(r + 1, c)), 1) for r in range(height - 1) for c in range(width)]
    blocks = [
        ([vid(r + i, c + j) for i in range(window) for j in range(window)], 2)
        for r in range(0, height - window + 1, stride)
        for c in range(0, width - window + 1, stride)
    ]
    return build_cc(height * width, edges + blocks)
