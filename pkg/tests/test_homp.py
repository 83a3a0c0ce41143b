import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccnet.errors import ShapeMismatch
from ccnet.neighborhoods import adjacency, coadjacency, identity, incidence
from ccnet.nn.homp import attention_homp_step, homp_step, homp_via_merge, linear_message, project_simplex

from conftest import fixture_ccs

FIXTURES = fixture_ccs()


def features(cc, rng, d=3):
    return {r: rng.normal(size=(cc.count(r), d)) for r in range(cc.dim + 1)}


def neighborhoods(cc):
    return {
        0: [adjacency(cc, 0, 1), incidence(cc, 0, 1)],
        1: [incidence(cc, 0, 1).T, coadjacency(cc, 1, 1), incidence(cc, 1, 2)],
        2: [incidence(cc, 1, 2).T, coadjacency(cc, 2, 1)],
    }


def test_identity_neighborhood_replace_is_identity(example):
    H = features(example, np.random.default_rng(0))
    out = homp_step({0: [identity(example, 0)]}, H, beta="replace")
    np.testing.assert_array_equal(out[0], H[0])
    np.testing.assert_array_equal(out[1], H[1])


def test_single_adjacency_add_matches_dense(example):
    H = features(example, np.random.default_rng(1))
    A = adjacency(example, 0, 1)
    out = homp_step({0: [A]}, H)
    np.testing.assert_allclose(out[0], H[0] + A.toarray() @ H[0], atol=1e-12)


def test_weighted_message_uses_entries(example):
    H = features(example, np.random.default_rng(2))
    A = adjacency(example, 0, 2).with_matrix(np.array([[0, 2.0, 3.0], [1, 0, 0], [0, 0.5, 0]]))
    out = homp_step({0: [A]}, H, alphas="weighted", beta="replace")
    np.testing.assert_allclose(out[0], A.toarray() @ H[0], atol=1e-12)


def test_inter_order_and_callable_beta(example):
    H = features(example, np.random.default_rng(3))
    Ns = {0: [adjacency(example, 0, 1), adjacency(example, 0, 2)]}
    out = homp_step(Ns, H, inter_agg="max", beta=lambda h, m: 2 * h - m)
    m = np.maximum(adjacency(example, 0, 1).toarray() @ H[0], adjacency(example, 0, 2).toarray() @ H[0])
    np.testing.assert_allclose(out[0], 2 * H[0] - m, atol=1e-12)


def test_errors(example):
    H = features(example, np.random.default_rng(4))
    with pytest.raises(ShapeMismatch):
        homp_step({1: [adjacency(example, 0, 1)]}, H)
    with pytest.raises(ShapeMismatch):
        homp_step({0: [adjacency(example, 0, 1)]}, {0: np.ones((2, 1))})
    with pytest.raises(ShapeMismatch):
        homp_step({0: [adjacency(example, 0, 1)]}, H, alphas=["source", "source"])
    with pytest.raises(ValueError):
        homp_step({0: [adjacency(example, 0, 1)]}, H, intra_agg="median")
    with pytest.raises(ValueError):
        homp_via_merge({0: [adjacency(example, 0, 1)]}, H, beta="multiply")


CONFIGS = [
    dict(intra_agg=i, inter_agg=j, beta=b, alphas=a)
    for i in ("sum", "mean", "max")
    for j in ("sum", "mean", "max", "min")
    for b, a in (("add", "source"), ("replace", "weighted"))
]


@pytest.mark.parametrize("name", ["lattice_3x3", "coface_wheel", "mog_random"])
@pytest.mark.parametrize("cfg", CONFIGS, ids=lambda c: "-".join(map(str, c.values())))
def test_homp_equals_merge(name, cfg):
    cc = FIXTURES[name]
    H = features(cc, np.random.default_rng(5))
    Ns = {r: v for r, v in neighborhoods(cc).items() if r <= cc.dim}
    a = homp_step(Ns, H, **cfg)
    b = homp_via_merge(Ns, H, **cfg)
    for r in H:
        np.testing.assert_allclose(a[r], b[r], atol=1e-12, rtol=0)


def test_homp_equals_merge_linear_message():
    cc = FIXTURES["coface_wheel"]
    rng = np.random.default_rng(6)
    H = features(cc, rng)
    alpha = linear_message(rng.normal(size=(3, 4)), rng.normal(size=(3, 4)))
    Ns = {1: [incidence(cc, 0, 1).T, coadjacency(cc, 1, 1)]}
    a = homp_step(Ns, H, alphas=alpha, intra_agg="mean", beta="replace")
    b = homp_via_merge(Ns, H, alphas=alpha, intra_agg="mean", beta="replace")
    assert a[1].shape == (cc.count(1), 4)
    np.testing.assert_allclose(a[1], b[1], atol=1e-12, rtol=0)


@pytest.mark.parametrize("v,expected", [
    ([0.2, 0.3, 0.5], [0.2, 0.3, 0.5]),
    ([1.0, 1.0], [0.5, 0.5]),
    ([3.0, 0.0, -1.0], [1.0, 0.0, 0.0]),
    ([0.6, 0.6, -5.0], [0.5, 0.5, 0.0]),
])
def test_project_simplex(v, expected):
    np.testing.assert_allclose(project_simplex(v), expected, atol=1e-12)


@settings(max_examples=80, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=6))
def test_project_simplex_properties(v):
    p = project_simplex(v)
    assert np.all(p >= 0)
    assert abs(p.sum() - 1) <= 1e-12
    # the projection is idempotent and no feasible point is closer
    np.testing.assert_allclose(project_simplex(p), p, atol=1e-12)
    e = np.eye(len(v))
    assert all(np.linalg.norm(p - v) <= np.linalg.norm(e[i] - v) + 1e-12 for i in range(len(v)))


def test_attention_single_neighborhood_reduces(example):
    H = features(example, np.random.default_rng(7))
    Ns = {0: [adjacency(example, 0, 2)]}
    att = attention_homp_step(Ns, H, attention="uniform")
    np.testing.assert_allclose(att[0], homp_step(Ns, H, intra_agg="mean")[0], atol=1e-12)


def test_attention_uniform_equals_mean():
    cc = FIXTURES["lattice_3x3"]
    H = features(cc, np.random.default_rng(8))
    Ns = {1: [incidence(cc, 0, 1).T, coadjacency(cc, 1, 1), incidence(cc, 1, 2)]}
    att = attention_homp_step(Ns, H, attention="uniform")
    ref = homp_step(Ns, H, intra_agg="mean", inter_agg="mean")
    np.testing.assert_allclose(att[1], ref[1], atol=1e-12)


def test_attention_one_hot_b_ignores_others():
    cc = FIXTURES["lattice_3x3"]
    H = features(cc, np.random.default_rng(9))
    Ns = {1: [incidence(cc, 0, 1).T, coadjacency(cc, 1, 1)]}
    att = attention_homp_step(Ns, H, attention="uniform", b={1: [0.0, 1.0]})
    ref = homp_step({1: [Ns[1][1]]}, H, intra_agg="mean")
    np.testing.assert_allclose(att[1], ref[1], atol=1e-12)


def test_attention_callable_weights(example):
    H = features(example, np.random.default_rng(10))
    A = adjacency(example, 0, 2)

    def softmax_scores(hx, hy, w):
        s = np.exp(hy @ hx.ravel())
        return s / s.sum()

    out = attention_homp_step({0: [A]}, H, attention=[softmax_scores], beta="replace")
    for x in range(3):
        nb = [y for y in range(3) if y != x]
        s = np.exp(H[0][nb] @ H[0][x])
        np.testing.assert_allclose(out[0][x], (s / s.sum()) @ H[0][nb], atol=1e-12)
    with pytest.raises(ShapeMismatch):
        attention_homp_step({0: [A]}, H, attention=["uniform", "uniform"])
