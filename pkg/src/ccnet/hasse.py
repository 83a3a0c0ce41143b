"""Hasse graphs, augmented Hasse graphs and the reduction of diagrams to graph message passing."""

from __future__ import annotations

from collections import defaultdict
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .cochain import Cochain
from .complex import Cell, CombinatorialComplex, build_cc
from .errors import ValidationError
from .lifting import Graph
from .neighborhoods import NeighborhoodMatrix, incidence
from .nn.autodiff import _ACT
from .nn.diagram import TensorDiagram, resolve_selector

__all__ = [
    "HasseGraph",
    "augment_hasse",
    "hasse",
    "permute_cochain",
    "permute_operator",
    "random_rank_permutation",
    "reduce_and_run",
    "representation_graph",
    "structure_fingerprint",
    "to_dot",
    "vertex_induced_permutation",
]

Key = tuple[int, int]  # (rank, canonical index)


@dataclass(frozen=True)
class HasseGraph:
    """Cells as vertices keyed by ``(rank, index)``.

    ``edges`` are the directed cover relations ``x → y`` with ``x ⊊ y`` and
    ``rk(x) = rk(y) - 1``. ``channels`` maps a selector tag to directed
    weighted edges ``(from, to, weight)``: a non-zero at (row r, column c) of
    an operator sends a message from cell c to cell r.
    """

    cc: CombinatorialComplex
    vertices: tuple[Key, ...]
    edges: tuple[tuple[Key, Key], ...]
    channels: Mapping[str, tuple[tuple[Key, Key, float], ...]] = field(default_factory=dict)

    def cell(self, key: Key) -> Cell:
        return self.cc.cells_of_rank(key[0])[key[1]]

    @property
    def edge_set(self) -> frozenset[frozenset[Key]]:
        """Undirected, deduplicated union of cover edges and augmented edges (no loops)."""
        out = {frozenset(e) for e in self.edges}
        for chan in self.channels.values():
            out.update(frozenset((u, v)) for u, v, _ in chan if u != v)
        return frozenset(out)

    @property
    def augmented_edges(self) -> frozenset[frozenset[Key]]:
        core = {frozenset(e) for e in self.edges}
        return frozenset(self.edge_set - core)

    def is_acyclic(self) -> bool:
        # cover edges raise rank by one, so a topological order is by rank
        return all(u[0] + 1 == v[0] for u, v in self.edges)


def hasse(cc: CombinatorialComplex) -> HasseGraph:
    vertices = tuple((r, i) for r in cc.ranks for i in range(cc.count(r)))
    edges = []
    for r in cc.ranks:
        if r + 1 in cc.ranks:
            B = incidence(cc, r, r + 1).matrix.tocoo()
            edges += [((r, int(i)), (r + 1, int(j))) for i, j in zip(B.row, B.col)]
    return HasseGraph(cc, vertices, tuple(sorted(edges)))


def _channel(G: NeighborhoodMatrix) -> tuple[tuple[Key, Key, float], ...]:
    m = G.matrix
    out = []
    for r in range(m.shape[0]):
        for p in range(m.indptr[r], m.indptr[r + 1]):
            if m.data[p] != 0:
                out.append(((G.col_rank, int(m.indices[p])), (G.row_rank, r), float(m.data[p])))
    return tuple(out)


def augment_hasse(
    cc: CombinatorialComplex,
    selectors: Iterable[str | NeighborhoodMatrix | tuple[str, NeighborhoodMatrix]],
) -> HasseGraph:
    """Hasse graph plus one tagged channel per selector.

    Selectors are strings (``"A_{0,1}"``), matrices (tagged by their kind) or
    explicit ``(tag, matrix)`` pairs; repeated tags get a ``#n`` suffix.
    """
    base = hasse(cc)
    channels: dict[str, tuple] = {}
    for sel in selectors:
        if isinstance(sel, str):
            tag, G = sel, resolve_selector(cc, sel)
        elif isinstance(sel, tuple):
            tag, G = sel
        else:
            tag, G = sel.kind, sel
        t, n = tag, 1
        while t in channels:
            n += 1
            t = f"{tag}#{n}"
        channels[t] = _channel(G)
    return HasseGraph(cc, base.vertices, base.edges, channels)


# -- reduction ---------------------------------------------------------------
def _act(name) -> Callable:
    if name is None or callable(name):
        return name or (lambda x: x)
    return _ACT[name][0]


def _inbox(chan) -> dict[Key, list[tuple[Key, float]]]:
    box: dict[Key, list] = defaultdict(list)
    for u, v, w in chan:
        box[v].append((u, w))
    return box


def _softmax(scores: list[float]) -> list[float]:
    m = max(scores)
    ex = [np.exp(s - m) for s in scores]
    tot = sum(ex)
    return [e / tot for e in ex]


def reduce_and_run(diagram: TensorDiagram, inputs: Mapping, hasse_graph: HasseGraph | None = None) -> dict[str, Cochain]:
    """Evaluate ``diagram`` by vertex message passing on its augmented Hasse graph.

    Each diagram edge becomes a channel; every cell keeps one state vector
    per diagram node of its rank, and each receiving cell combines only the
    messages arriving on its incoming channel edges. Softmax attention is
    supported; ``plain`` normalization and ``max``/``mean`` aggregation too.
    """
    hg = hasse_graph or augment_hasse(
        diagram.cc, [(f"{e.slot}:{e.selector}", G) for e, G in zip(diagram.edges, diagram.operators)]
    )
    tags = list(hg.channels)
    P = diagram.store
    cc = diagram.cc
    state: dict[str, dict[Key, np.ndarray]] = {}

    for name in diagram.order:
        node = diagram.nodes[name]
        keys = [(node.rank, i) for i in range(cc.count(node.rank))]
        incoming = [(k, e) for k, e in enumerate(diagram.edges) if e.dst == name]
        if not incoming:
            x = inputs[name]
            x = np.asarray(x.data if isinstance(x, Cochain) else x, dtype=float).reshape(len(keys), -1)
            state[name] = {k: x[k[1]] for k in keys}
            continue
        msgs: dict[Key, list[np.ndarray]] = {k: [] for k in keys}
        for k, e in incoming:
            box = _inbox(hg.channels[tags[k]])
            src = state[e.src]
            d_out = e.out_dim
            if e.kind == "conv":
                W = P[f"{e.slot}.W"]
                local = {y: h @ W for y, h in src.items()}
                for x in keys:
                    acc = np.zeros(d_out)
                    for y, w in box.get(x, ()):
                        acc = acc + w * local[y]
                    msgs[x].append(acc)
            elif e.kind == "attention":
                W, a = P[f"{e.slot}.W"], P[f"{e.slot}.a"].ravel()
                a1, a2 = a[:d_out], a[d_out:]
                local = {y: h @ W for y, h in src.items()}
                phi = _act(e.phi)
                if e.query:
                    Wt = P[f"{e.slot}.W_t"]
                    qloc = {x: h @ Wt for x, h in state[e.query].items()}
                    score = lambda x, y: phi(a1 @ local[y] + a2 @ qloc[x])  # noqa: E731
                else:
                    score = lambda x, y: phi(a1 @ local[x] + a2 @ local[y])  # noqa: E731
                for x in keys:
                    nbrs = box.get(x, ())
                    acc = np.zeros(d_out)
                    if nbrs:
                        s = [score(x, y) for y, _ in nbrs]
                        if e.normalization == "softmax":
                            att = _softmax(s)
                        else:
                            tot = sum(s)
                            att = [v / tot for v in s]
                        for (y, w), t in zip(nbrs, att):
                            acc = acc + (t * w) * local[y]
                    msgs[x].append(acc)
            else:
                for x in keys:
                    nbrs = box.get(x, ())
                    vals = [src[y] for y, _ in nbrs]
                    if e.agg is None:
                        acc = np.zeros(d_out)
                        for (y, w) in nbrs:
                            acc = acc + w * src[y]
                    elif not vals:
                        acc = np.zeros(d_out)
                    elif e.agg == "sum":
                        acc = np.sum(vals, axis=0)
                    elif e.agg == "mean":
                        acc = np.mean(vals, axis=0)
                    else:
                        acc = np.max(vals, axis=0)
                    msgs[x].append(acc)
            if e.activation is not None:
                f = _act(e.activation)
                for x in keys:
                    msgs[x][-1] = f(msgs[x][-1])
        f = _act(node.activation)
        if node.combine == "concat":
            state[name] = {x: f(np.concatenate(m)) for x, m in msgs.items()}
        else:
            state[name] = {x: f(sum(m[1:], m[0])) for x, m in msgs.items()}

    out = {}
    for name in diagram.targets:
        node = diagram.nodes[name]
        rows = [state[name][(node.rank, i)] for i in range(cc.count(node.rank))]
        out[name] = Cochain(node.rank, np.array(rows).reshape(len(rows), -1) if rows else np.zeros((0, node.dim)))
    return out


# -- structure ---------------------------------------------------------------
def structure_fingerprint(cc: CombinatorialComplex) -> str:
    """Canonical text form of all incidence patterns between present ranks.

    Since every vertex is a 0-cell, ``B_{0,k}`` fixes each k-cell's vertex
    set, so equal fingerprints mean equal complexes.
    """
    parts = [f"n={cc.vertex_count}", "counts=" + ",".join(f"{r}:{cc.count(r)}" for r in cc.ranks)]
    ranks = [r for r in cc.ranks]
    for i, r in enumerate(ranks):
        for k in ranks[i + 1:]:
            coo = incidence(cc, r, k).matrix.tocoo()
            pairs = sorted(zip(coo.row.tolist(), coo.col.tolist()))
            parts.append(f"B{r},{k}=" + ";".join(f"{a}.{b}" for a, b in pairs))
    return "|".join(parts)


def representation_graph(
    cc: CombinatorialComplex, k: int, sim: Callable[[Cell, Cell], float] | NeighborhoodMatrix
) -> tuple[Graph, dict[tuple[int, int], float]]:
    """Graph on the k-cells with an edge wherever the similarity is non-zero."""
    cells = cc.cells_of_rank(k)
    weights: dict[tuple[int, int], float] = {}
    if isinstance(sim, NeighborhoodMatrix):
        if sim.shape != (len(cells), len(cells)):
            raise ValidationError(f"{sim.kind} is not a square operator on rank {k}")
        coo = sp.coo_array(sim.matrix)
        for i, j, v in zip(coo.row, coo.col, coo.data):
            if i < j and v != 0:
                weights[(int(i), int(j))] = float(v)
    else:
        for i in range(len(cells)):
            for j in range(i + 1, len(cells)):
                v = float(sim(cells[i], cells[j]))
                if v != 0:
                    weights[(i, j)] = v
    return Graph(len(cells), tuple(sorted(weights))), weights


# -- permutations --------------------------------------------------------------
def random_rank_permutation(cc: CombinatorialComplex, rng: np.random.Generator) -> dict[int, np.ndarray]:
    """Independent uniform permutation of the cells of each rank; ``perm[r][i]`` is the new index of cell i."""
    return {r: rng.permutation(cc.count(r)) for r in cc.ranks}


def _perm_matrix(perm: np.ndarray) -> sp.csr_array:
    n = len(perm)
    return sp.csr_array((np.ones(n), (perm, np.arange(n))), shape=(n, n))


def permute_cochain(H, perm: np.ndarray) -> np.ndarray:
    """``P·H``: row i moves to row ``perm[i]``."""
    H = np.asarray(H.data if isinstance(H, Cochain) else H)
    out = np.empty_like(H)
    out[perm] = H
    return out


def permute_operator(G: NeighborhoodMatrix, perms: Mapping[int, np.ndarray]) -> NeighborhoodMatrix:
    """``P_j · G · P_iᵀ`` for an operator from rank i to rank j."""
    pr, pc = perms[G.row_rank], perms[G.col_rank]
    m = _perm_matrix(pr) @ G.matrix @ _perm_matrix(pc).T
    m = sp.csr_array(m)
    m.sort_indices()
    rows = [None] * len(pr)
    for i, c in enumerate(G.rows):
        rows[pr[i]] = c
    cols = [None] * len(pc)
    for i, c in enumerate(G.cols):
        cols[pc[i]] = c
    return NeighborhoodMatrix(G.kind, G.row_rank, G.col_rank, tuple(rows), tuple(cols), m)


def vertex_induced_permutation(
    cc: CombinatorialComplex, sigma: Sequence[int]
) -> tuple[CombinatorialComplex, dict[int, np.ndarray]]:
    """Relabel vertices by ``sigma`` and return the new complex with the induced per-rank permutations."""
    sigma = [int(s) for s in sigma]
    if sorted(sigma) != list(range(cc.vertex_count)):
        raise ValidationError("sigma must be a permutation of the vertices")
    image = {c: tuple(sorted(sigma[v] for v in c)) for c in cc}
    new = build_cc(cc.vertex_count, [(image[c], r) for c, r in cc.cells.items()])
    perms = {r: np.array([new.index(image[c]) for c in cc.cells_of_rank(r)]) for r in cc.ranks}
    return new, perms


def to_dot(hg: HasseGraph, name: str = "hasse") -> str:
    """DOT text: cover edges solid and directed, augmented edges dashed and labelled."""
    lines = [f"digraph {name} {{", "  rankdir=BT;"]
    for key in hg.vertices:
        label = "{" + ",".join(map(str, hg.cell(key))) + "}"
        lines.append(f'  "{key[0]}_{key[1]}" [label="{label}", rank={key[0]}];')
    for u, v in hg.edges:
        lines.append(f'  "{u[0]}_{u[1]}" -> "{v[0]}_{v[1]}";')
    core = {frozenset(e) for e in hg.edges}
    for tag, chan in hg.channels.items():
        seen = set()
        for u, v, _ in chan:
            e = frozenset((u, v))
            if u == v or e in core or e in seen:
                continue
            seen.add(e)
            lines.append(f'  "{u[0]}_{u[1]}" -> "{v[0]}_{v[1]}" [dir=none, style=dashed, label="{tag}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
