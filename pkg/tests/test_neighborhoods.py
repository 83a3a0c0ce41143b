import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccnet.complex import build_cc
from ccnet.errors import NotOrientable, RankOutOfRange, UnknownCell
from ccnet.lifting import Graph, graph_cc, loop_cc
from ccnet.neighborhoods import (
    adjacency,
    coadjacency,
    custom,
    down_incidence,
    hodge_laplacian_1,
    identity,
    incidence,
    signed_incidence,
    up_down_incidence_sets,
    up_incidence,
)

import oracles
from conftest import cycle, fixture_ccs, path, two_triangles

FIXTURES = fixture_ccs()


def offdiag_pattern(M):
    P = np.asarray(M) != 0
    np.fill_diagonal(P, False)
    return P


# examples


def test_example_incidences(example):
    B01 = incidence(example, 0, 1)
    assert B01.shape == (3, 1)
    np.testing.assert_array_equal(B01.toarray().ravel(), [1, 1, 0])
    np.testing.assert_array_equal(incidence(example, 1, 2).toarray(), [[1]])
    np.testing.assert_array_equal(incidence(example, 0, 2).toarray().ravel(), [1, 1, 1])


def test_incidence_with_missing_rank_has_zero_columns():
    cc = build_cc(3, [((0, 1, 2), 2)])
    assert incidence(cc, 0, 1).shape == (3, 0)


def test_incidence_rank_errors(example):
    for r, k in [(1, 1), (2, 1), (0, 3), (-1, 1)]:
        with pytest.raises(RankOutOfRange):
            incidence(example, r, k)


def test_up_down_sets(example):
    down, up = up_down_incidence_sets(example, (0, 1, 2), 1)
    assert down == {(0, 1)} and up == set()
    down, up = up_down_incidence_sets(example, (0,), 1)
    assert down == set() and up == {(0, 1)}
    assert up_down_incidence_sets(example, (0,), 2)[1] == {(0, 1, 2)}
    with pytest.raises(UnknownCell):
        up_down_incidence_sets(example, (1, 2), 1)


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_union_of_k_neighborhoods(name):
    cc = FIXTURES[name]
    for x in cc:
        downs = set().union(*(up_down_incidence_sets(cc, x, k)[0] for k in range(1, cc.dim + 1)))
        ups = set().union(*(up_down_incidence_sets(cc, x, k)[1] for k in range(1, cc.dim + 1)))
        assert downs == down_incidence(cc, x)
        assert ups == up_incidence(cc, x)


def test_example_adjacency(example):
    A01 = adjacency(example, 0, 1).toarray()
    assert A01[0, 1] == A01[1, 0] == 1
    assert np.count_nonzero(A01) == 2
    np.testing.assert_array_equal(adjacency(example, 0, 2).toarray(), np.ones((3, 3)) - np.eye(3))
    assert adjacency(example, 1, 1).nnz == 0


def test_adjacency_without_bridges_is_zero():
    cc = graph_cc(Graph.from_edges(3, []))
    assert cc.dim == 0
    cc = build_cc(3, [((0, 1, 2), 2)])
    assert adjacency(cc, 0, 1).nnz == 0


def test_coadjacency_examples(example):
    np.testing.assert_array_equal(coadjacency(example, 2, 1).toarray(), [[0]])
    co = coadjacency(two_triangles(), 2, 1).toarray()
    np.testing.assert_array_equal(co, [[0, 1], [1, 0]])
    co = coadjacency(graph_cc(path(3)), 1, 1).toarray()
    np.testing.assert_array_equal(co, [[0, 1], [1, 0]])


def test_neighborhood_rank_errors(example):
    with pytest.raises(RankOutOfRange):
        adjacency(example, 0, 3)
    with pytest.raises(RankOutOfRange):
        adjacency(example, 0, 0)
    with pytest.raises(RankOutOfRange):
        coadjacency(example, 1, 2)
    with pytest.raises(RankOutOfRange):
        identity(example, 3)


def test_identity_and_custom(example):
    np.testing.assert_array_equal(identity(example, 0).toarray(), np.eye(3))
    G = custom("W", example, 0, 1, [[0.5], [0.0], [2.0]])
    assert G.domain_rank == 1 and G.codomain_rank == 0
    assert G.pattern() == {(0, 0), (2, 0)}
    with pytest.raises(RankOutOfRange):
        custom("W", example, 0, 1, np.ones((2, 2)))


def test_transpose_kind_and_shape(example):
    B = incidence(example, 0, 1)
    assert B.T.kind == "B_{0,1}^T" and B.T.shape == (1, 3)
    assert B.T.T.kind == "B_{0,1}"
    assert B.T.row_rank == 1 and B.T.col_rank == 0


def test_signed_incidence_path():
    B0 = signed_incidence(graph_cc(path(3)), 0).toarray()
    np.testing.assert_array_equal(B0, [[-1, 0], [1, -1], [0, 1]])


def test_single_edge_laplacian():
    cc = graph_cc(path(2))
    B0 = signed_incidence(cc, 0).toarray()
    np.testing.assert_array_equal(B0.T @ B0, [[2]])
    np.testing.assert_array_equal(hodge_laplacian_1(cc), [[2]])


def test_triangle_hodge_laplacian():
    L1 = hodge_laplacian_1(graph_cc(cycle(3)))
    np.testing.assert_array_equal(np.diag(L1), [2, 2, 2])
    off = L1[~np.eye(3, dtype=bool)]
    assert set(np.abs(off)) == {1.0}
    # dense eigensolver oracle: the edge Laplacian of K3 has spectrum {0, 3, 3}
    np.testing.assert_allclose(np.linalg.eigvalsh(L1), [0, 3, 3], atol=1e-12)


def test_filled_triangle_laplacian_is_3I():
    L1 = hodge_laplacian_1(loop_cc(cycle(3), [(0, 1, 2)]))
    np.testing.assert_allclose(L1, 3 * np.eye(3), atol=1e-12)


def test_not_orientable():
    with pytest.raises(NotOrientable):
        signed_incidence(loop_cc(cycle(4), [(0, 1, 2, 3)]), 1)


def test_signed_pattern_matches_incidence():
    cc = FIXTURES["coface_wheel"]
    for r in (0, 1):
        S = signed_incidence(cc, r).toarray()
        np.testing.assert_array_equal(np.abs(S), incidence(cc, r, r + 1).toarray())


def test_normalized_symmetric():
    A = adjacency(graph_cc(path(3)), 0, 1)
    N = A.normalized().toarray()
    s = 1 / np.sqrt(2)
    np.testing.assert_allclose(N, [[0, s, 0], [s, 0, s], [0, s, 0]])
    # isolated rows stay zero
    cc = graph_cc(Graph.from_edges(3, [(0, 1)]))
    N = adjacency(cc, 0, 1).normalized().toarray()
    np.testing.assert_array_equal(N[2], 0)


# invariants


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_matrices_match_brute_force(name):
    cc = FIXTURES[name]
    for r in range(cc.dim + 1):
        for k in range(r + 1, cc.dim + 1):
            np.testing.assert_array_equal(incidence(cc, r, k).toarray(), oracles.incidence(cc, r, k))
        for k in range(1, cc.dim - r + 1):
            A = adjacency(cc, r, k).toarray()
            np.testing.assert_array_equal(A, oracles.adjacency(cc, r, k))
            np.testing.assert_array_equal(A, A.T)
            assert not np.diag(A).any()
        for k in range(1, r + 1):
            C = coadjacency(cc, r, k).toarray()
            np.testing.assert_array_equal(C, oracles.coadjacency(cc, r, k))
            np.testing.assert_array_equal(C, C.T)
            assert not np.diag(C).any()


@pytest.mark.parametrize("name", sorted(FIXTURES))
def test_factorization_identity(name):
    cc = FIXTURES[name]
    for r in range(cc.dim):
        B = incidence(cc, r, r + 1).toarray()
        np.testing.assert_array_equal(offdiag_pattern(B @ B.T), adjacency(cc, r, 1).toarray() != 0)
        C = incidence(cc, r, r + 1).toarray()
        np.testing.assert_array_equal(offdiag_pattern(C.T @ C), coadjacency(cc, r + 1, 1).toarray() != 0)


@pytest.mark.parametrize("name", ["coface_wheel", "loop_triangle", "tetrahedron"])
def test_boundary_of_boundary(name):
    cc = FIXTURES[name]
    B0 = signed_incidence(cc, 0).toarray()
    B1 = signed_incidence(cc, 1).toarray()
    assert np.all(B0 @ B1 == 0)


@pytest.mark.parametrize("name", ["graph", "loop_triangle", "tetrahedron", "coface_wheel"])
def test_hodge_laplacian_psd(name):
    L = hodge_laplacian_1(FIXTURES[name])
    np.testing.assert_array_equal(L, L.T)
    assert np.linalg.eigvalsh(L).min() >= -1e-10


@settings(max_examples=50, deadline=None)
@given(st.integers(3, 9), st.data())
def test_random_graph_factorization(n, data):
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    edges = data.draw(st.lists(st.sampled_from(pairs), unique=True))
    cc = graph_cc(Graph.from_edges(n, edges))
    if cc.dim < 1:
        return
    B = incidence(cc, 0, 1).toarray()
    np.testing.assert_array_equal(offdiag_pattern(B @ B.T), adjacency(cc, 0, 1).toarray() != 0)
    np.testing.assert_array_equal(offdiag_pattern(B.T @ B), coadjacency(cc, 1, 1).toarray() != 0)
    S = signed_incidence(cc, 0).toarray()
    # graph Laplacian from the signed incidence
    np.testing.assert_array_equal(S @ S.T, np.diag(B.sum(1)) - adjacency(cc, 0, 1).toarray())
