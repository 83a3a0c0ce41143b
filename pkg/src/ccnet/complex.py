"""Combinatorial complexes, sub-complexes and CC-homomorphisms.

Vertices are dense integers ``0..vertex_count-1``. A cell is stored as the
sorted tuple of its vertices, so Python's tuple ordering gives the canonical
(lexicographic) ordering used for every matrix layout in the package.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from typing import NamedTuple

from .errors import DuplicateCell, EmptyCell, OrderViolation, UnknownCell, ValidationError

Cell = tuple[int, ...]

__all__ = [
    "Cell",
    "CombinatorialComplex",
    "HomomorphismCheck",
    "SubCC",
    "as_cell",
    "build_cc",
    "check_homomorphism",
    "induced_cell_map",
    "induced_sub_cc",
    "skeleton",
    "validate_ranks",
]


def as_cell(vertices: Iterable[int]) -> Cell:
    """Return the canonical cell for a collection of vertex ids."""
    cell = tuple(sorted({int(v) for v in vertices}))
    if not cell:
        raise EmptyCell("cells must be non-empty")
    return cell


def _containment_index(cells: Iterable[Cell]) -> dict[int, list[Cell]]:
    index: dict[int, list[Cell]] = {}
    for c in cells:
        for v in c:
            index.setdefault(v, []).append(c)
    return index


def _strict_supersets(x: Cell, index: Mapping[int, list[Cell]]) -> Iterable[Cell]:
    # every superset of x contains its first vertex; scan the shortest list
    candidates = min((index.get(v, ()) for v in x), key=len)
    sx = set(x)
    for y in candidates:
        if len(y) > len(x) and sx.issubset(y):
            yield y


def validate_ranks(cells: Mapping[Cell, int]) -> None:
    """Raise :class:`OrderViolation` unless ``x ⊆ y`` implies ``rk(x) <= rk(y)``."""
    index = _containment_index(cells)
    for x, rx in cells.items():
        for y in _strict_supersets(x, index):
            if rx > cells[y]:
                raise OrderViolation(
                    f"cell {x} has rank {rx} but is contained in {y} of rank {cells[y]}"
                )


class CombinatorialComplex:
    """Immutable combinatorial complex on the vertex set ``range(vertex_count)``.

    Build instances with :func:`build_cc`; the constructor trusts its input.
    """

    __slots__ = ("vertex_count", "_rank", "_by_rank", "_index", "_containing")

    def __init__(self, vertex_count: int, ranks: Mapping[Cell, int]):
        self.vertex_count = int(vertex_count)
        self._rank: dict[Cell, int] = dict(ranks)
        by_rank: dict[int, list[Cell]] = {}
        for c, r in self._rank.items():
            by_rank.setdefault(r, []).append(c)
        self._by_rank = {r: tuple(sorted(cs)) for r, cs in sorted(by_rank.items())}
        self._index = {c: i for cs in self._by_rank.values() for i, c in enumerate(cs)}
        self._containing = _containment_index(self._rank)

    # -- basic queries -------------------------------------------------
    @property
    def dim(self) -> int:
        """Maximal rank; ``-1`` for the empty complex."""
        return max(self._by_rank, default=-1)

    @property
    def cells(self) -> Mapping[Cell, int]:
        return self._rank

    @property
    def ranks(self) -> tuple[int, ...]:
        return tuple(self._by_rank)

    def cells_of_rank(self, k: int) -> tuple[Cell, ...]:
        return self._by_rank.get(k, ())

    def count(self, k: int) -> int:
        return len(self._by_rank.get(k, ()))

    def rank(self, cell: Iterable[int]) -> int:
        c = as_cell(cell)
        try:
            return self._rank[c]
        except KeyError:
            raise UnknownCell(f"{c} is not a cell") from None

    def index(self, cell: Iterable[int]) -> int:
        """Position of ``cell`` in the canonical ordering of its rank."""
        c = as_cell(cell)
        try:
            return self._index[c]
        except KeyError:
            raise UnknownCell(f"{c} is not a cell") from None

    def key(self, cell: Iterable[int]) -> tuple[int, int]:
        c = as_cell(cell)
        return self.rank(c), self._index[c]

    def __contains__(self, cell) -> bool:
        try:
            return as_cell(cell) in self._rank
        except (EmptyCell, TypeError):
            return False

    def __len__(self) -> int:
        return len(self._rank)

    def __iter__(self):
        for cs in self._by_rank.values():
            yield from cs

    def __eq__(self, other) -> bool:
        if not isinstance(other, CombinatorialComplex):
            return NotImplemented
        return self.vertex_count == other.vertex_count and self._rank == other._rank

    def __hash__(self) -> int:
        return hash((self.vertex_count, frozenset(self._rank.items())))

    def __repr__(self) -> str:
        counts = ", ".join(f"{r}:{len(cs)}" for r, cs in self._by_rank.items())
        return f"CombinatorialComplex(n={self.vertex_count}, cells={{{counts}}})"

    # -- containment ---------------------------------------------------
    def supersets(self, cell: Iterable[int]) -> list[Cell]:
        """Cells strictly containing ``cell`` (which need not be a cell itself)."""
        c = as_cell(cell)
        return sorted(_strict_supersets(c, self._containing), key=lambda y: (self._rank[y], y))

    def subsets(self, cell: Iterable[int]) -> list[Cell]:
        """Cells strictly contained in ``cell``."""
        c = as_cell(cell)
        sc = set(c)
        found = {x for v in c for x in self._containing.get(v, ()) if len(x) < len(c) and sc.issuperset(x)}
        return sorted(found, key=lambda x: (self._rank[x], x))

    def with_cells(self, extra: Iterable[tuple[Iterable[int], int]]) -> CombinatorialComplex:
        """New validated complex with ``extra`` (cell, rank) pairs added."""
        return build_cc(self.vertex_count, [*self._rank.items(), *extra])


def build_cc(vertex_count: int, ranked_cells: Iterable[tuple[Iterable[int], int]] = ()) -> CombinatorialComplex:
    """Validate ``ranked_cells`` and build a :class:`CombinatorialComplex`.

    Singletons missing from ``ranked_cells`` are inserted at rank 0.

    Raises
    ------
    EmptyCell
        A supplied cell has no vertices.
    DuplicateCell
        The same vertex set is supplied with two different ranks.
    OrderViolation
        Some ``x ⊆ y`` has ``rk(x) > rk(y)``, or a singleton has non-zero rank.
    """
    n = int(vertex_count)
    if n < 0:
        raise ValidationError("vertex_count must be non-negative")
    ranks: dict[Cell, int] = {}
    for raw, r in ranked_cells:
        c = as_cell(raw)
        r = int(r)
        if r < 0:
            raise ValidationError(f"negative rank {r} for {c}")
        if c[0] < 0 or c[-1] >= n:
            raise ValidationError(f"cell {c} has a vertex outside 0..{n - 1}")
        if c in ranks and ranks[c] != r:
            raise DuplicateCell(f"cell {c} given ranks {ranks[c]} and {r}")
        if len(c) == 1 and r != 0:
            raise OrderViolation(f"singleton {c} must have rank 0, got {r}")
        ranks[c] = r
    for v in range(n):
        ranks.setdefault((v,), 0)
    validate_ranks(ranks)
    return CombinatorialComplex(n, ranks)


@dataclass(frozen=True)
class SubCC:
    """Cells retained from ``parent`` with the restricted rank function."""

    parent: CombinatorialComplex
    cells: Mapping[Cell, int]
    vertices: frozenset[int] = field(default_factory=frozenset)

    @property
    def dim(self) -> int:
        return max(self.cells.values(), default=-1)

    def __len__(self) -> int:
        return len(self.cells)

    def __contains__(self, cell) -> bool:
        return as_cell(cell) in self.cells

    def cells_of_rank(self, k: int) -> tuple[Cell, ...]:
        return tuple(sorted(c for c, r in self.cells.items() if r == k))

    def validate(self) -> None:
        """Check the sub-CC is itself a valid CC on ``vertices``."""
        for c, r in self.cells.items():
            if self.parent.cells.get(c) != r:
                raise ValidationError(f"{c} does not carry its parent rank")
            if not self.vertices.issuperset(c):
                raise ValidationError(f"{c} uses vertices outside the sub-CC")
        for v in self.vertices:
            if self.cells.get((v,)) != 0:
                raise ValidationError(f"singleton ({v},) missing from sub-CC")
        validate_ranks(self.cells)

    def to_complex(self) -> tuple[CombinatorialComplex, dict[int, int]]:
        """Relabel vertices densely; returns the complex and the old→new vertex map."""
        relabel = {v: i for i, v in enumerate(sorted(self.vertices))}
        cells = [(tuple(relabel[v] for v in c), r) for c, r in self.cells.items()]
        return build_cc(len(relabel), cells), relabel


def induced_sub_cc(cc: CombinatorialComplex, vertices: Iterable[int]) -> SubCC:
    """Sub-CC of all cells contained in ``vertices``."""
    a = frozenset(int(v) for v in vertices)
    bad = [v for v in a if not 0 <= v < cc.vertex_count]
    if bad:
        raise ValidationError(f"vertices {sorted(bad)} are not in the complex")
    kept = {c: r for c, r in cc.cells.items() if a.issuperset(c)}
    return SubCC(cc, kept, a)


def skeleton(cc: CombinatorialComplex | SubCC, k: int) -> SubCC:
    """The k-skeleton: all cells of rank at most ``k``."""
    if k < 0:
        raise ValidationError("skeleton rank must be non-negative")
    if isinstance(cc, SubCC):
        parent, vertices = cc.parent, cc.vertices
    else:
        parent, vertices = cc, frozenset(range(cc.vertex_count))
    return SubCC(parent, {c: r for c, r in cc.cells.items() if r <= k}, vertices)


class HomomorphismCheck(NamedTuple):
    kind: str  # "embedding" | "homomorphism" | "invalid"
    reason: str | None = None

    @property
    def is_homomorphism(self) -> bool:
        return self.kind != "invalid"


def induced_cell_map(vertex_map: Mapping[int, int], src: CombinatorialComplex) -> dict[Cell, Cell]:
    """Cell map sending each cell of ``src`` to the image of its vertex set."""
    return {c: as_cell(vertex_map[v] for v in c) for c in src}


def check_homomorphism(
    f: Mapping[Iterable[int], Iterable[int]],
    src: CombinatorialComplex,
    dst: CombinatorialComplex,
) -> HomomorphismCheck:
    """Classify a cell map as an embedding, a plain homomorphism, or invalid.

    An image set that is not a cell of ``dst`` makes the map invalid with
    reason ``MissingImageCell``.
    """
    fmap = {as_cell(x): as_cell(y) for x, y in f.items()}
    missing = [c for c in src if c not in fmap]
    if missing:
        return HomomorphismCheck("invalid", f"NotTotal: no image for {missing[0]}")
    for x, y in fmap.items():
        if x not in src.cells:
            return HomomorphismCheck("invalid", f"UnknownCell: {x} is not a source cell")
        if y not in dst.cells:
            return HomomorphismCheck("invalid", f"MissingImageCell: image {y} of {x} is not a cell")
    for x in src:
        if src.cells[x] < dst.cells[fmap[x]]:
            return HomomorphismCheck(
                "invalid",
                f"RankIncrease: rk({x})={src.cells[x]} < rk(f(x))={dst.cells[fmap[x]]}",
            )
    for x in src:
        fx = set(fmap[x])
        for y in src.supersets(x):
            if not fx.issubset(fmap[y]):
                return HomomorphismCheck("invalid", f"InclusionBroken: {x} ⊆ {y} but images are not nested")
    injective = len(set(fmap.values())) == len(fmap)
    rank_preserving = all(src.cells[x] == dst.cells[y] for x, y in fmap.items())
    if injective and rank_preserving:
        return HomomorphismCheck("embedding")
    return HomomorphismCheck("homomorphism")
