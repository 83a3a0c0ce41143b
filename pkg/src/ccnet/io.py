"""Text formats, triangle meshes, mesh features and kNN graphs.

Every format is line-oriented ASCII; ``#`` starts a comment. Floats are
written with 17 significant digits so a save/load round trip is exact.
"""

from __future__ import annotations

import os
from collections.abc import Iterable
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp
from scipy.spatial.distance import cdist

from .cochain import Cochain
from .complex import CombinatorialComplex, build_cc
from .errors import BadK, DegenerateFace, NonManifoldEdge, NonTriangleFace, ParseError
from .lifting import Graph
from .neighborhoods import NeighborhoodMatrix

__all__ = [
    "FIXTURE_ENV",
    "Mesh",
    "fixture_path",
    "format_float",
    "knn_graph",
    "load_cc",
    "load_cochain",
    "load_edge_list",
    "load_off",
    "load_scalar",
    "load_triplets",
    "mesh_features",
    "mesh_to_cc",
    "save_cc",
    "save_cochain",
    "save_edge_list",
    "save_off",
    "save_scalar",
    "save_triplets",
]

FIXTURE_ENV = "CCNET_FIXTURES"
_BUNDLED = Path(__file__).parent / "fixtures"


def fixture_path(name: str | os.PathLike) -> Path:
    """Resolve ``name`` as given, else under ``$CCNET_FIXTURES``, else among the bundled fixtures."""
    p = Path(name)
    if p.exists():
        return p
    for root in (os.environ.get(FIXTURE_ENV), _BUNDLED):
        if root and (Path(root) / p).exists():
            return Path(root) / p
    return p


def format_float(x: float) -> str:
    return format(float(x), ".17g")


def _lines(source):
    """Yield ``(lineno, tokens)`` for non-blank, non-comment lines."""
    if isinstance(source, (str, os.PathLike)):
        with open(fixture_path(source)) as fh:
            text = fh.read()
    else:
        text = source.read()
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield no, line.split()


def _write(target, text: str) -> None:
    if isinstance(target, (str, os.PathLike)):
        Path(target).write_text(text)
    else:
        target.write(text)


def _ints(tokens, no):
    try:
        return [int(t) for t in tokens]
    except ValueError:
        raise ParseError(f"line {no}: expected integers, got {' '.join(tokens)!r}") from None


def _floats(tokens, no):
    try:
        return [float(t) for t in tokens]
    except ValueError:
        raise ParseError(f"line {no}: expected numbers, got {' '.join(tokens)!r}") from None


# -- edge lists --------------------------------------------------------------
def load_edge_list(source) -> Graph:
    """``u v`` pairs; duplicates collapse, ``vertex_count`` is the largest index + 1.

    A ``vertices n`` line raises the vertex count to keep isolated vertices.
    """
    edges, n = [], 0
    for no, tok in _lines(source):
        if tok[0] == "vertices":
            if len(tok) != 2:
                raise ParseError(f"line {no}: expected 'vertices n'")
            n = max(n, _ints(tok[1:], no)[0])
            continue
        if len(tok) != 2:
            raise ParseError(f"line {no}: expected 'u v', got {' '.join(tok)!r}")
        u, v = _ints(tok, no)
        if u < 0 or v < 0:
            raise ParseError(f"line {no}: negative vertex id")
        edges.append((u, v))
        n = max(n, u + 1, v + 1)
    return Graph.from_edges(n, edges)


def save_edge_list(g: Graph, target) -> None:
    lines = [f"vertices {g.vertex_count}"] + [f"{u} {v}" for u, v in g.edges]
    _write(target, "\n".join(lines) + "\n")


# -- complexes ---------------------------------------------------------------
def load_cc(source) -> CombinatorialComplex:
    """``n <vertex_count>`` followed by ``rank v1 v2 ...`` per cell; singletons are implied."""
    n, cells = None, []
    for no, tok in _lines(source):
        if tok[0] == "n":
            n = _ints(tok[1:2], no)[0]
            continue
        vals = _ints(tok, no)
        if len(vals) < 2:
            raise ParseError(f"line {no}: expected 'rank v1 [v2 ...]'")
        cells.append((vals[1:], vals[0]))
    if n is None:
        n = 1 + max((max(c) for c, _ in cells), default=-1)
    return build_cc(n, cells)


def save_cc(cc: CombinatorialComplex, target) -> None:
    lines = [f"n {cc.vertex_count}"]
    for r in cc.ranks:
        for c in cc.cells_of_rank(r):
            if len(c) > 1 or r != 0:
                lines.append(" ".join(map(str, (r, *c))))
    _write(target, "\n".join(lines) + "\n")


# -- sparse triplets ---------------------------------------------------------
def save_triplets(G: NeighborhoodMatrix | sp.sparray, target) -> None:
    """Header ``rows cols nnz`` then ``i j v`` per stored non-zero, row-major."""
    m = sp.csr_array(G.matrix if isinstance(G, NeighborhoodMatrix) else G)
    m.sort_indices()
    coo = m.tocoo()
    keep = coo.data != 0
    r, c, v = coo.row[keep], coo.col[keep], coo.data[keep]
    lines = [f"{m.shape[0]} {m.shape[1]} {len(v)}"]
    lines += [f"{i} {j} {format_float(x)}" for i, j, x in zip(r, c, v)]
    _write(target, "\n".join(lines) + "\n")


def load_triplets(source) -> sp.csr_array:
    it = iter(_lines(source))
    try:
        no, head = next(it)
    except StopIteration:
        raise ParseError("empty triplet file") from None
    if len(head) != 3:
        raise ParseError(f"line {no}: expected 'rows cols nnz'")
    nr, nc, nnz = _ints(head, no)
    rows, cols, vals = [], [], []
    for no, tok in it:
        if len(tok) != 3:
            raise ParseError(f"line {no}: expected 'i j v'")
        i, j = _ints(tok[:2], no)
        if not (0 <= i < nr and 0 <= j < nc):
            raise ParseError(f"line {no}: entry ({i}, {j}) outside {nr}x{nc}")
        rows.append(i)
        cols.append(j)
        vals.append(_floats(tok[2:], no)[0])
    if len(vals) != nnz:
        raise ParseError(f"header announces {nnz} entries, found {len(vals)}")
    m = sp.csr_array((np.array(vals, dtype=float), (np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64))), shape=(nr, nc))
    m.sort_indices()
    return m


# -- cochains ----------------------------------------------------------------
def save_cochain(H: Cochain, target) -> None:
    """Header ``rank d rows`` then one row of ``d`` reals per cell."""
    data = H.data
    lines = [f"{H.rank} {data.shape[1]} {data.shape[0]}"]
    lines += [" ".join(format_float(x) for x in row) for row in data]
    _write(target, "\n".join(lines) + "\n")


def load_cochain(source) -> Cochain:
    it = iter(_lines(source))
    try:
        no, head = next(it)
    except StopIteration:
        raise ParseError("empty cochain file") from None
    if len(head) != 3:
        raise ParseError(f"line {no}: expected 'rank d rows'")
    rank, d, n = _ints(head, no)
    rows = []
    for no, tok in it:
        if len(tok) != d:
            raise ParseError(f"line {no}: expected {d} values, got {len(tok)}")
        rows.append(_floats(tok, no))
    if len(rows) != n:
        raise ParseError(f"header announces {n} rows, found {len(rows)}")
    return Cochain(rank, np.array(rows, dtype=float).reshape(n, d))


def load_scalar(source) -> np.ndarray:
    """One real per line (or whitespace separated)."""
    vals = []
    for no, tok in _lines(source):
        vals += _floats(tok, no)
    return np.array(vals, dtype=float)


def save_scalar(f: Iterable[float], target) -> None:
    _write(target, "\n".join(format_float(x) for x in f) + "\n")


# -- meshes --------------------------------------------------------------------
@dataclass(frozen=True)
class Mesh:
    vertices: np.ndarray  # (n, 3)
    faces: np.ndarray  # (m, 3) int

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float).reshape(-1, 3)
        f = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            raise ParseError("face refers to a missing vertex")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)

    def edges(self) -> list[tuple[int, int]]:
        """Unique undirected face edges, sorted."""
        es = {tuple(sorted((int(f[i]), int(f[(i + 1) % 3])))) for f in self.faces for i in range(3)}
        return sorted(es)


def _face_area2(v: np.ndarray, f) -> np.ndarray:
    return np.cross(v[f[1]] - v[f[0]], v[f[2]] - v[f[0]])


def load_off(source) -> Mesh:
    """Standard OFF: ``OFF``, ``nv nf ne``, vertex rows, ``3 i j k`` face rows."""
    it = iter(_lines(source))
    try:
        no, tok = next(it)
    except StopIteration:
        raise ParseError("empty OFF file") from None
    if tok[0] != "OFF":
        raise ParseError(f"line {no}: missing OFF header")
    tok = tok[1:]
    if not tok:
        try:
            no, tok = next(it)
        except StopIteration:
            raise ParseError("missing counts line") from None
    counts = _ints(tok, no)
    if len(counts) < 2:
        raise ParseError(f"line {no}: expected 'nv nf [ne]'")
    nv, nf = counts[:2]
    verts, faces = [], []
    for _ in range(nv):
        try:
            no, tok = next(it)
        except StopIteration:
            raise ParseError(f"expected {nv} vertices") from None
        xyz = _floats(tok, no)
        if len(xyz) < 3:
            raise ParseError(f"line {no}: vertex needs 3 coordinates")
        verts.append(xyz[:3])
    for _ in range(nf):
        try:
            no, tok = next(it)
        except StopIteration:
            raise ParseError(f"expected {nf} faces") from None
        idx = _ints(tok, no)
        if idx[0] != 3 or len(idx) < 4:
            raise NonTriangleFace(f"line {no}: face with {idx[0]} vertices")
        if any(not 0 <= i < nv for i in idx[1:4]):
            raise ParseError(f"line {no}: vertex index out of range")
        faces.append(idx[1:4])
    v = np.array(verts, dtype=float).reshape(-1, 3)
    for k, f in enumerate(faces):
        if len(set(f)) < 3 or np.linalg.norm(_face_area2(v, f)) == 0.0:
            raise DegenerateFace(f"face {k} {tuple(f)} has zero area")
    return Mesh(v, np.array(faces, dtype=np.int64).reshape(-1, 3))


def save_off(m: Mesh, target) -> None:
    lines = ["OFF", f"{len(m.vertices)} {len(m.faces)} {len(m.edges())}"]
    lines += [" ".join(format_float(x) for x in p) for p in m.vertices]
    lines += ["3 " + " ".join(map(str, f)) for f in m.faces]
    _write(target, "\n".join(lines) + "\n")


def mesh_to_cc(m: Mesh) -> CombinatorialComplex:
    cells = [(e, 1) for e in m.edges()] + [(tuple(f), 2) for f in m.faces.tolist()]
    return build_cc(len(m.vertices), cells)


def _angle(u: np.ndarray, w: np.ndarray) -> float:
    # atan2 form is accurate near 0 and π
    return float(np.arctan2(np.linalg.norm(np.cross(u, w)), np.dot(u, w)))


def mesh_features(m: Mesh) -> tuple[Cochain, Cochain, Cochain]:
    """Geometric cochains in the canonical cell order of :func:`mesh_to_cc`.

    * vertices (6): position, unit area-weighted normal
    * edges (6): length, dihedral angle, the inner angle opposite the edge
      in each adjacent face, and per adjacent face the ratio of the edge
      length to the mean of the face's other two edge lengths. Faces are
      taken in canonical order; a boundary edge has dihedral π and zeros
      for the missing face.
    * faces (7): area, unit normal, inner angles at the face's vertices in
      ascending vertex order
    """
    cc = mesh_to_cc(m)
    v = m.vertices
    faces = cc.cells_of_rank(2)
    edges = cc.cells_of_rank(1)
    # face normals follow the file's winding
    wound = {tuple(sorted(f)): tuple(f) for f in m.faces.tolist()}
    F = np.zeros((len(faces), 7))
    normals = np.zeros((len(faces), 3))
    vnorm = np.zeros((len(v), 3))
    angle_at: list[dict[int, float]] = []
    for k, f in enumerate(faces):
        a, b, c = wound[f]
        cr = _face_area2(v, (a, b, c))
        area = 0.5 * np.linalg.norm(cr)
        n = cr / (2.0 * area)
        normals[k] = n
        for i in (a, b, c):
            vnorm[i] += area * n
        ang = {}
        for i in f:
            j, l = [x for x in f if x != i]
            ang[i] = _angle(v[j] - v[i], v[l] - v[i])
        angle_at.append(ang)
        F[k] = [area, *n, *(ang[i] for i in f)]
    lens = np.linalg.norm(vnorm, axis=1)
    vnorm[lens > 0] /= lens[lens > 0, None]
    V = np.hstack([v, vnorm])

    incident: dict[tuple[int, int], list[int]] = {e: [] for e in edges}
    for k, f in enumerate(faces):
        for e in ((f[0], f[1]), (f[0], f[2]), (f[1], f[2])):
            incident[e].append(k)
    E = np.zeros((len(edges), 6))
    for idx, e in enumerate(edges):
        fs = incident[e]
        if len(fs) > 2:
            raise NonManifoldEdge(f"edge {e} borders {len(fs)} faces")
        length = float(np.linalg.norm(v[e[1]] - v[e[0]]))
        dihedral = np.pi if len(fs) < 2 else np.pi - _angle(normals[fs[0]], normals[fs[1]])
        opp, ratio = [0.0, 0.0], [0.0, 0.0]
        for t, k in enumerate(fs):
            (w,) = [x for x in faces[k] if x not in e]
            opp[t] = angle_at[k][w]
            others = np.linalg.norm(v[w] - v[e[0]]) + np.linalg.norm(v[w] - v[e[1]])
            ratio[t] = length / (0.5 * others)
        E[idx] = [length, dihedral, *opp, *ratio]
    return Cochain(0, V), Cochain(1, E), Cochain(2, F)


def knn_graph(points, k: int) -> Graph:
    """Symmetrized k-nearest-neighbour graph; ties go to the lower index."""
    X = np.asarray(points, dtype=float)
    n = len(X)
    if not 1 <= k < n:
        raise BadK(f"k must satisfy 1 <= k < n = {n}, got {k}")
    D = cdist(X, X)
    edges = []
    for i in range(n):
        order = np.argsort(D[i], kind="stable")
        nbrs = [int(j) for j in order if j != i][:k]
        edges += [(i, j) for j in nbrs]
    return Graph.from_edges(n, edges)

