"""Neighborhood functions and their matrix representations.

All matrices are ``scipy.sparse.csr_array`` with sorted indices. A matrix
with ``row_rank`` j and ``col_rank`` i acts as a cochain map C^i -> C^j by
left multiplication, so ``B_{0,1}`` maps 1-cochains to 0-cochains and its
transpose pools 0-cochains onto edges.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from itertools import combinations

import numpy as np
import scipy.sparse as sp

from .complex import Cell, CombinatorialComplex, as_cell
from .errors import NotOrientable, RankOutOfRange, UnknownCell

__all__ = [
    "NeighborhoodMatrix",
    "adjacency",
    "coadjacency",
    "custom",
    "down_incidence",
    "hodge_laplacian_1",
    "identity",
    "incidence",
    "signed_incidence",
    "up_down_incidence_sets",
    "up_incidence",
]

DENSE_LIMIT = 10**6


def _csr(rows, cols, vals, shape) -> sp.csr_array:
    m = sp.csr_array(
        (np.asarray(vals, dtype=float), (np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64))),
        shape=shape,
    )
    m.sum_duplicates()
    m.sort_indices()
    return m


@dataclass(frozen=True)
class NeighborhoodMatrix:
    """Sparse operator between the cochain spaces of two ranks.

    ``kind`` is a short label such as ``"B_{0,1}"`` or ``"A_{1,1}^T"``; it is
    informational and used as the selector tag for augmented Hasse graphs.
    """

    kind: str
    row_rank: int
    col_rank: int
    rows: tuple[Cell, ...]
    cols: tuple[Cell, ...]
    matrix: sp.csr_array

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    @property
    def nnz(self) -> int:
        return int(self.matrix.nnz)

    @property
    def domain_rank(self) -> int:
        return self.col_rank

    @property
    def codomain_rank(self) -> int:
        return self.row_rank

    @property
    def T(self) -> NeighborhoodMatrix:
        kind = self.kind[:-2] if self.kind.endswith("^T") else self.kind + "^T"
        m = sp.csr_array(self.matrix.T)
        m.sort_indices()
        return NeighborhoodMatrix(kind, self.col_rank, self.row_rank, self.cols, self.rows, m)

    def toarray(self) -> np.ndarray:
        r, c = self.shape
        if r * c > DENSE_LIMIT:
            raise ValueError(f"refusing dense conversion of a {r}x{c} matrix")
        return self.matrix.toarray()

    def pattern(self) -> set[tuple[int, int]]:
        coo = self.matrix.tocoo()
        return {(int(i), int(j)) for i, j, v in zip(coo.row, coo.col, coo.data) if v != 0}

    def entries(self):
        """Yield ``(row, col, value)`` for every stored non-zero, row-major."""
        m = self.matrix
        for i in range(m.shape[0]):
            for p in range(m.indptr[i], m.indptr[i + 1]):
                if m.data[p] != 0:
                    yield i, int(m.indices[p]), float(m.data[p])

    def with_matrix(self, matrix, kind: str | None = None) -> NeighborhoodMatrix:
        m = sp.csr_array(matrix, dtype=float)
        if m.shape != self.shape:
            raise ValueError(f"shape {m.shape} != {self.shape}")
        m.sort_indices()
        return replace(self, matrix=m, kind=kind or self.kind)

    def normalized(self) -> NeighborhoodMatrix:
        """``D_r^{-1/2} |G| D_c^{-1/2}`` weighting of ``G`` with row/column-sum degrees.

        For symmetric square matrices both degree vectors coincide and this
        is the usual symmetric normalization. Zero-degree rows stay zero.
        """
        a = abs(self.matrix)
        dr = np.asarray(a.sum(axis=1)).ravel()
        dc = np.asarray(a.sum(axis=0)).ravel()
        with np.errstate(divide="ignore"):
            ir = np.where(dr > 0, 1.0 / np.sqrt(dr), 0.0)
            ic = np.where(dc > 0, 1.0 / np.sqrt(dc), 0.0)
        m = sp.diags_array(ir) @ self.matrix @ sp.diags_array(ic)
        return self.with_matrix(m, kind=f"norm({self.kind})")


def _check_rank(cc: CombinatorialComplex, *ranks: int) -> None:
    for r in ranks:
        if r < 0 or r > cc.dim:
            raise RankOutOfRange(f"rank {r} outside 0..{cc.dim}")


def custom(kind: str, cc: CombinatorialComplex, row_rank: int, col_rank: int, matrix) -> NeighborhoodMatrix:
    """Wrap an arbitrary (e.g. learned) matrix between two ranks."""
    rows, cols = cc.cells_of_rank(row_rank), cc.cells_of_rank(col_rank)
    m = sp.csr_array(matrix, dtype=float)
    if m.shape != (len(rows), len(cols)):
        raise RankOutOfRange(f"matrix shape {m.shape} != ({len(rows)}, {len(cols)})")
    m.sort_indices()
    return NeighborhoodMatrix(kind, row_rank, col_rank, rows, cols, m)


def identity(cc: CombinatorialComplex, r: int) -> NeighborhoodMatrix:
    _check_rank(cc, r)
    cells = cc.cells_of_rank(r)
    n = len(cells)
    return NeighborhoodMatrix(f"Id_{r}", r, r, cells, cells, _csr(range(n), range(n), np.ones(n), (n, n)))


def incidence(cc: CombinatorialComplex, r: int, k: int) -> NeighborhoodMatrix:
    """``B_{r,k}``: entry (i, j) is 1 iff the i-th r-cell is a proper subset of the j-th k-cell."""
    if not 0 <= r < k <= cc.dim:
        raise RankOutOfRange(f"incidence needs 0 <= r < k <= dim, got r={r}, k={k}, dim={cc.dim}")
    rows, cols = cc.cells_of_rank(r), cc.cells_of_rank(k)
    ri, ci = [], []
    for j, y in enumerate(cols):
        for x in cc.subsets(y):
            if cc.cells[x] == r:
                ri.append(cc.index(x))
                ci.append(j)
    return NeighborhoodMatrix(f"B_{{{r},{k}}}", r, k, rows, cols, _csr(ri, ci, np.ones(len(ri)), (len(rows), len(cols))))


def up_down_incidence_sets(cc: CombinatorialComplex, x, k: int) -> tuple[set[Cell], set[Cell]]:
    """k-down and k-up incidence neighborhoods of cell ``x``."""
    c = as_cell(x)
    if c not in cc.cells:
        raise UnknownCell(f"{c} is not a cell")
    rx = cc.cells[c]
    down = {y for y in cc.subsets(c) if cc.cells[y] == rx - k}
    up = {y for y in cc.supersets(c) if cc.cells[y] == rx + k}
    return down, up


def down_incidence(cc: CombinatorialComplex, x) -> set[Cell]:
    """All cells strictly below ``x`` in rank that it contains."""
    c = as_cell(x)
    return {y for y in cc.subsets(c) if cc.cells[y] < cc.cells[c]}


def up_incidence(cc: CombinatorialComplex, x) -> set[Cell]:
    c = as_cell(x)
    return {y for y in cc.supersets(c) if cc.cells[y] > cc.cells[c]}


def _pairs_matrix(groups, n: int) -> sp.csr_array:
    ri, ci = [], []
    for members in groups:
        for a, b in combinations(sorted(set(members)), 2):
            ri += [a, b]
            ci += [b, a]
    m = _csr(ri, ci, np.ones(len(ri)), (n, n))
    m.data[:] = 1.0  # repeated bridges collapse to a binary entry
    return m


def adjacency(cc: CombinatorialComplex, r: int, k: int) -> NeighborhoodMatrix:
    """``A_{r,k}``: r-cells sharing a bridge cell of rank r+k that strictly contains both."""
    if r < 0 or k < 1 or r + k > cc.dim:
        raise RankOutOfRange(f"adjacency needs r >= 0, k >= 1, r+k <= dim; got r={r}, k={k}, dim={cc.dim}")
    cells = cc.cells_of_rank(r)
    groups = (
        [cc.index(x) for x in cc.subsets(z) if cc.cells[x] == r] for z in cc.cells_of_rank(r + k)
    )
    return NeighborhoodMatrix(f"A_{{{r},{k}}}", r, r, cells, cells, _pairs_matrix(groups, len(cells)))


def coadjacency(cc: CombinatorialComplex, r: int, k: int) -> NeighborhoodMatrix:
    """``coA_{r,k}``: r-cells that both strictly contain a common cell of rank r-k."""
    if not 1 <= k <= r <= cc.dim:
        raise RankOutOfRange(f"coadjacency needs 1 <= k <= r <= dim; got r={r}, k={k}, dim={cc.dim}")
    cells = cc.cells_of_rank(r)
    groups = (
        [cc.index(y) for y in cc.supersets(z) if cc.cells[y] == r] for z in cc.cells_of_rank(r - k)
    )
    return NeighborhoodMatrix(f"coA_{{{r},{k}}}", r, r, cells, cells, _pairs_matrix(groups, len(cells)))


def signed_incidence(cc: CombinatorialComplex, r: int) -> NeighborhoodMatrix:
    """Oriented boundary ``B_r`` from (r+1)-cells to r-cells.

    Each (r+1)-cell must be a simplex on r+2 vertices whose rank-r sub-cells
    are exactly its codimension-one faces. Removing the vertex at position i
    of the sorted tuple gives a face with sign ``(-1)**i``.
    """
    if not 0 <= r < cc.dim:
        raise RankOutOfRange(f"signed incidence needs 0 <= r < dim, got r={r}, dim={cc.dim}")
    rows, cols = cc.cells_of_rank(r), cc.cells_of_rank(r + 1)
    ri, ci, vals = [], [], []
    for j, y in enumerate(cols):
        if len(y) != r + 2:
            raise NotOrientable(f"{y} is not an {r + 1}-simplex")
        faces = [y[:i] + y[i + 1:] for i in range(len(y))]
        below = {x for x in cc.subsets(y) if cc.cells[x] == r}
        if below != set(faces):
            raise NotOrientable(f"rank-{r} cells inside {y} are not its simplicial faces")
        for i, f in enumerate(faces):
            ri.append(cc.index(f))
            ci.append(j)
            vals.append(-1.0 if i % 2 else 1.0)
    return NeighborhoodMatrix(f"S_{{{r}}}", r, r + 1, rows, cols, _csr(ri, ci, vals, (len(rows), len(cols))))


def hodge_laplacian_1(cc: CombinatorialComplex) -> np.ndarray:
    """Dense ``L1 = B0ᵀB0 + B1B1ᵀ`` with signed incidences.

    The second term is present only when the complex has 2-cells, which
    must then be triangles (otherwise :class:`NotOrientable` propagates).
    """
    if cc.dim < 1:
        raise RankOutOfRange("the 1-Hodge Laplacian needs dim >= 1")
    b0 = signed_incidence(cc, 0).matrix
    lap = (b0.T @ b0).toarray()
    if cc.dim >= 2 and cc.count(2):
        b1 = signed_incidence(cc, 1).matrix
        lap = lap + (b1 @ b1.T).toarray()
    return lap
