"""Parameterized push-forwards: convolution and higher-order attention.

Every layer takes an optional ``ops`` (:class:`~ccnet.nn.autodiff.Eval` by
default) so the same code runs eagerly or on a recording tape. Operands may
be arrays, :class:`~ccnet.cochain.Cochain` objects or tape variables; a
:class:`Cochain` input yields a :class:`Cochain` output.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ..cochain import Cochain
from ..errors import ShapeMismatch
from ..neighborhoods import NeighborhoodMatrix
from .autodiff import Eval, value

__all__ = [
    "attention_cross_rank",
    "attention_same_rank",
    "conv_merge",
    "conv_push_forward",
    "edge_list",
]

EVAL = Eval()


def _unwrap(H, rank: int | None = None):
    if isinstance(H, Cochain):
        if rank is not None and H.rank != rank:
            raise ShapeMismatch(f"expected a rank-{rank} cochain, got rank {H.rank}")
        return H.data, True
    return H, False


def _rows(H) -> int:
    return np.shape(value(H))[0]


def _check(G: NeighborhoodMatrix, H, what="input"):
    if _rows(H) != G.shape[1]:
        raise ShapeMismatch(f"{G.kind} has {G.shape[1]} columns but the {what} has {_rows(H)} rows")


def _check_w(H, W, name="W"):
    if np.shape(value(H))[1] != np.shape(value(W))[0]:
        raise ShapeMismatch(f"{name} expects {np.shape(value(W))[0]} input features, got {np.shape(value(H))[1]}")


def edge_list(G: NeighborhoodMatrix) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Row indices, column indices and values of the stored non-zeros, row-major."""
    m = G.matrix
    rows = np.repeat(np.arange(m.shape[0]), np.diff(m.indptr))
    keep = m.data != 0
    return rows[keep].astype(np.int64), m.indices[keep].astype(np.int64), m.data[keep].astype(float)


def conv_push_forward(G: NeighborhoodMatrix, H, W, ops=EVAL):
    """``K = G·H·W``."""
    H, wrap = _unwrap(H, G.domain_rank)
    _check(G, H)
    _check_w(H, W)
    K = ops.matmul(G.matrix, ops.matmul(H, W))
    return Cochain(G.codomain_rank, K) if wrap else K


def conv_merge(G1, G2, H1, H2, W1, W2, beta=None, ops=EVAL):
    """``beta(G1·H1·W1 + G2·H2·W2)``."""
    if G1.codomain_rank != G2.codomain_rank or G1.shape[0] != G2.shape[0]:
        raise ShapeMismatch(f"{G1.kind} and {G2.kind} land in different cochain spaces")
    H1, wrap = _unwrap(H1, G1.domain_rank)
    H2, _ = _unwrap(H2, G2.domain_rank)
    K1 = conv_push_forward(G1, H1, W1, ops)
    K2 = conv_push_forward(G2, H2, W2, ops)
    if np.shape(value(K1)) != np.shape(value(K2)):
        raise ShapeMismatch("both branches must produce the same feature dimension")
    K = ops.act(ops.add(K1, K2), beta)
    return Cochain(G1.codomain_rank, K) if wrap else K


def _split_a(a, d1: int, d2: int, ops):
    if not hasattr(a, "tape") and np.ndim(a) == 1:
        a = np.asarray(a, dtype=float)[:, None]
    if np.shape(value(a))[0] != d1 + d2:
        raise ShapeMismatch(f"attention vector has length {np.shape(value(a))[0]}, expected {d1 + d2}")
    a1 = ops.gather(a, np.arange(d1))
    a2 = ops.gather(a, np.arange(d1, d1 + d2))
    return a1, a2


def _normalize(e, seg, n, normalization, ops):
    if normalization == "softmax":
        return ops.segment_softmax(e, seg, n)
    if normalization == "plain":
        return ops.segment_normalize(e, seg, n)
    raise ValueError(f"unknown normalization {normalization!r}")


def _att_matrix(rows, cols, att, shape) -> sp.csr_array:
    m = sp.csr_array((np.asarray(value(att)).ravel(), (rows, cols)), shape=shape)
    m.sort_indices()
    return m


def attention_same_rank(
    G: NeighborhoodMatrix,
    H,
    W,
    a,
    phi="leaky_relu",
    normalization: str = "softmax",
    ops=EVAL,
    return_attention: bool = False,
):
    """``K = (G ⊙ att)·H·W`` with attention over the row pattern of square ``G``.

    With ``P = H·W`` the score of entry (i, j) is ``phi(a1·P_i + a2·P_j)``
    where ``a = [a1 ‖ a2]`` has length ``2 d_out``. ``"softmax"`` normalization
    exponentiates before dividing so scores are positive; ``"plain"`` divides
    the raw scores and raises :class:`DegenerateRow` on a non-positive sum.
    Rows with an empty neighborhood give zero output.
    """
    if G.shape[0] != G.shape[1] or G.row_rank != G.col_rank:
        raise ShapeMismatch(f"same-rank attention needs a square operator, got {G.kind} {G.shape}")
    H, wrap = _unwrap(H, G.domain_rank)
    _check(G, H)
    _check_w(H, W)
    n = G.shape[0]
    P = ops.matmul(H, W)
    d = np.shape(value(P))[1]
    a1, a2 = _split_a(a, d, d, ops)
    rows, cols, g = edge_list(G)
    z = ops.add(ops.gather(ops.matmul(P, a1), rows), ops.gather(ops.matmul(P, a2), cols))
    att = _normalize(ops.act(z, phi), rows, n, normalization, ops)
    K = ops.edge_spmm(rows, cols, ops.mul(att, g[:, None]), P, n)
    out = Cochain(G.codomain_rank, K) if wrap else K
    if return_attention:
        return out, _att_matrix(rows, cols, att, G.shape)
    return out


def attention_cross_rank(
    G: NeighborhoodMatrix,
    H_s,
    H_t,
    W_s,
    W_t,
    a,
    phi="leaky_relu",
    normalization: str = "softmax",
    ops=EVAL,
    return_attention: bool = False,
):
    """Two-way attention across an operator ``G`` from rank s (columns) to rank t (rows).

    Returns ``(K_t, K_s)`` with ``K_t = (G ⊙ att_st)·H_s·W_s`` and
    ``K_s = (Gᵀ ⊙ att_ts)·H_t·W_t``. Each incident pair (t-cell r, s-cell c)
    has a single score ``phi(a_s·(H_s W_s)_c + a_t·(H_t W_t)_r)`` with
    ``a = [a_s ‖ a_t]``; ``att_st`` normalizes it over the rows of ``G`` and
    ``att_ts`` over its columns, which is the same pair score read through the
    block-swapped vector ``[a_t ‖ a_s]``.
    """
    if G.row_rank == G.col_rank:
        raise ShapeMismatch("cross-rank attention needs distinct ranks; use attention_same_rank")
    H_s, wrap = _unwrap(H_s, G.domain_rank)
    H_t, _ = _unwrap(H_t, G.codomain_rank)
    _check(G, H_s, "source cochain")
    if _rows(H_t) != G.shape[0]:
        raise ShapeMismatch(f"{G.kind} has {G.shape[0]} rows but the target cochain has {_rows(H_t)}")
    _check_w(H_s, W_s, "W_s")
    _check_w(H_t, W_t, "W_t")
    n_t, n_s = G.shape
    Ps = ops.matmul(H_s, W_s)
    Pt = ops.matmul(H_t, W_t)
    ds, dt = np.shape(value(Ps))[1], np.shape(value(Pt))[1]
    a_s, a_t = _split_a(a, ds, dt, ops)
    rows, cols, g = edge_list(G)
    z = ops.add(ops.gather(ops.matmul(Ps, a_s), cols), ops.gather(ops.matmul(Pt, a_t), rows))
    e = ops.act(z, phi)
    att_st = _normalize(e, rows, n_t, normalization, ops)
    att_ts = _normalize(e, cols, n_s, normalization, ops)
    K_t = ops.edge_spmm(rows, cols, ops.mul(att_st, g[:, None]), Ps, n_t)
    K_s = ops.edge_spmm(cols, rows, ops.mul(att_ts, g[:, None]), Pt, n_s)
    if wrap:
        K_t, K_s = Cochain(G.codomain_rank, K_t), Cochain(G.domain_rank, K_s)
    if return_attention:
        return (K_t, K_s), (_att_matrix(rows, cols, att_st, G.shape), _att_matrix(cols, rows, att_ts, G.shape[::-1]))
    return K_t, K_s
