import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccnet.cochain import Cochain
from ccnet.errors import BadParams, ValidationError
from ccnet.lifting import Graph
from ccnet.mog import MogCover, agd, make_cover, mog, mog_pool, normalize_scalar

import oracles
from conftest import cycle, path, random_graph

PATH_COVER = MogCover(((0.0, 0.65), (0.35, 1.0)))


def path_example():
    return path(6), np.arange(6) / 5


def test_agd_examples():
    np.testing.assert_array_equal(agd(cycle(4)), np.ones(4))
    np.testing.assert_allclose(agd(path(3)), [1, 2 / 3, 1], atol=1e-12)
    np.testing.assert_array_equal(agd(Graph.from_edges(1, [])), [0.0])
    assert agd(Graph.from_edges(0, [])).shape == (0,)


@pytest.mark.parametrize("g", [cycle(7), Graph.from_edges(5, [(i, j) for i in range(5) for j in range(i + 1, 5)]),
                               Graph.from_edges(8, [(i, j) for i in range(8) for j in range(i + 1, 8)
                                                    if bin(i ^ j).count("1") == 1])],
                         ids=["cycle7", "K5", "cube"])
def test_agd_vertex_transitive_constant(g):
    v = agd(g)
    np.testing.assert_allclose(v, v[0], atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 25), st.floats(0.05, 0.6), st.integers(0, 10_000))
def test_agd_matches_dijkstra(n, p, seed):
    g = random_graph(n, p, seed)
    np.testing.assert_allclose(agd(g), oracles.agd(n, g.edges), atol=1e-12)


def test_agd_disconnected_per_component():
    g = Graph.from_edges(5, [(0, 1), (1, 2), (3, 4)])
    np.testing.assert_allclose(agd(g), [1, 2 / 3, 1, 0.5, 0.5], atol=1e-12)


def test_normalize_scalar():
    np.testing.assert_array_equal(normalize_scalar([1, 2, 3]), [0, 0.5, 1])
    np.testing.assert_array_equal(normalize_scalar([4, 4]), [0.5, 0.5])
    np.testing.assert_array_equal(normalize_scalar([0, 0.25, 1]), [0, 0.25, 1])
    with pytest.raises(ValidationError):
        normalize_scalar([0, np.nan])


def test_make_cover_examples():
    assert make_cover(1, 0.5).intervals == ((0.0, 1.0),)
    np.testing.assert_allclose(make_cover(2, 0.3).intervals, [(0, 0.65), (0.35, 1)], atol=1e-12)
    for n, o in [(0, 0.3), (2, 0.0), (2, 1.0), (3, -0.1)]:
        with pytest.raises(BadParams):
            make_cover(n, o)
    with pytest.raises(BadParams):
        MogCover(((0.5, 0.5),))


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 12), st.floats(0.01, 0.99))
def test_cover_unions_unit_interval(n, overlap):
    iv = make_cover(n, overlap).intervals
    assert iv[0][0] == 0.0 and iv[-1][1] == 1.0
    assert all(lo < hi for lo, hi in iv)
    assert all(iv[i + 1][0] < iv[i][1] for i in range(len(iv) - 1))


def test_mog_path_example():
    g, f = path_example()
    res = mog(g, f, PATH_COVER)
    assert res.components == ((0, (0, 1, 2, 3)), (1, (2, 3, 4, 5)))
    assert res.mog_edges == ((0, 1),)
    assert res.rank == 2 and res.augmented_cc.count(2) == 2
    assert set(res.new_cells) == {(0, 1, 2, 3), (2, 3, 4, 5)}
    np.testing.assert_array_equal(res.adjacency(), [[0, 1], [1, 0]])


def test_mog_disjoint_cover():
    g, f = path_example()
    res = mog(g, f, MogCover(((0.0, 0.4), (0.6, 1.0))))
    assert [c for _, c in res.components] == [(0, 1, 2), (3, 4, 5)]
    assert res.mog_edges == ()


def test_mog_complete_graph_single_interval():
    g = Graph.from_edges(5, [(i, j) for i in range(5) for j in range(i + 1, 5)])
    res = mog(g, normalize_scalar(agd(g)), make_cover(1, 0.5))
    assert res.components == ((0, (0, 1, 2, 3, 4)),) and res.mog_edges == ()


def test_mog_identical_sets_are_merged():
    g, f = path_example()
    res = mog(g, np.full(6, 0.5), MogCover(((0.0, 0.6), (0.4, 1.0))))
    assert res.components == ((0, (0, 1, 2, 3, 4, 5)),)


def test_mog_reuses_existing_edge_cell():
    # a component equal to an existing edge reuses that cell instead of duplicating it
    g, f = path_example()
    res = mog(g, f, MogCover(((0.0, 0.25), (0.3, 1.0))))
    assert res.components[0] == (0, (0, 1))
    assert (0, 1) not in res.new_cells
    assert res.augmented_cc.rank((0, 1)) == 1


def test_mog_errors():
    g, f = path_example()
    with pytest.raises(ValidationError):
        mog(g, f * 2, PATH_COVER)
    with pytest.raises(ValidationError):
        mog(g, f[:3], PATH_COVER)


def test_mog_empty_pullback():
    g, _ = path_example()
    res = mog(g, np.zeros(6), MogCover(((0.5, 1.0),)))
    assert res.components == () and res.augmented_cc.count(2) == 0


def test_mog_pool_examples():
    g, f = path_example()
    res, pooled = mog_pool(g, Cochain(0, np.eye(6)), f, PATH_COVER)
    assert pooled.rank == 2
    np.testing.assert_array_equal(pooled.data.sum(1), [4, 4])
    np.testing.assert_array_equal(pooled.data, [[1, 1, 1, 1, 0, 0], [0, 0, 1, 1, 1, 1]])
    _, mean = mog_pool(g, Cochain(0, np.full((6, 2), 3.0)), f, PATH_COVER, "mean")
    np.testing.assert_array_equal(mean.data, np.full((2, 2), 3.0))
    H = np.arange(12.0).reshape(6, 2)
    _, single = mog_pool(g, Cochain(0, H), f, make_cover(1, 0.5), "max")
    np.testing.assert_array_equal(single.data, [H.max(0)])


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 40), st.floats(0.05, 0.4), st.integers(1, 6), st.floats(0.1, 0.6), st.integers(0, 10_000))
def test_mog_invariants(n, p, intervals, overlap, seed):
    g = random_graph(n, p, seed)
    f = normalize_scalar(agd(g))
    cover = make_cover(intervals, overlap)
    res = mog(g, f, cover)
    for t, comp in res.components:
        # membership is the closed interval and every component is connected
        lo, hi = cover.intervals[t]
        assert all(lo <= f[v] <= hi for v in comp)
        sub = [(u, v) for u, v in g.edges if u in comp and v in comp]
        assert oracles.is_connected(comp, sub)
    # covered vertices are exactly those with f in some interval
    covered = {v for _, c in res.components for v in c}
    assert covered == {v for v in range(n) if any(lo <= f[v] <= hi for lo, hi in cover.intervals)}
    # MOG edges equal the off-diagonal pattern of the shared-vertex product
    cells = [set(c) for c in res.cell_of]
    B = np.array([[1.0 if v in c else 0.0 for c in cells] for v in range(n)]).reshape(n, len(cells))
    P = B.T @ B
    np.fill_diagonal(P, 0)
    assert {tuple(e) for e in np.argwhere(np.triu(P) > 0)} == set(res.mog_edges)
