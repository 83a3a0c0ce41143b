"""Higher-order message passing (HOMP) and its attention variant.

Neighborhoods are given per target rank as a list of matrices of shape
``|X^j| × |X^i|``; a non-zero at (x, y) means y is a neighbour of x. Ranks
without neighborhoods are returned unchanged.

:func:`homp_step` evaluates the update rules cell by cell. :func:`homp_via_merge`
computes the same update as a composition of merge nodes: one message merge
per neighborhood, a left fold of pairwise inter-neighborhood merges in list
order, and a final merge with the cell's own state.
"""

from __future__ import annotations

from collections.abc import Callable, Mapping, Sequence

import numpy as np

from ..errors import ShapeMismatch
from ..neighborhoods import NeighborhoodMatrix
from .layers import edge_list

__all__ = [
    "attention_homp_step",
    "homp_step",
    "homp_via_merge",
    "linear_message",
    "project_simplex",
]

Message = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def _message_source(hx, hy, w):
    return hy


def _message_weighted(hx, hy, w):
    return w[:, None] * hy


MESSAGES: dict[str, Message] = {"source": _message_source, "weighted": _message_weighted}


def linear_message(W_x: np.ndarray, W_y: np.ndarray, act=np.tanh) -> Message:
    """``alpha(h_x, h_y) = act(h_x W_x + h_y W_y)``, applied row-wise."""
    return lambda hx, hy, w: act(hx @ W_x + hy @ W_y)


def _update_add(h, m):
    return h + m


def _update_replace(h, m):
    return m


UPDATES = {"add": _update_add, "replace": _update_replace}


def _resolve(table, f, what):
    if callable(f):
        return f
    try:
        return table[f]
    except KeyError:
        raise ValueError(f"unknown {what} {f!r}") from None


def _msg_dim(alpha, Hj, Hi) -> int:
    if len(Hj) and len(Hi):
        return alpha(Hj[:1], Hi[:1], np.ones(1)).shape[1]
    return Hj.shape[1]


def _intra(msgs: np.ndarray, agg: str, d: int) -> np.ndarray:
    if len(msgs) == 0:
        return np.zeros(d)
    if agg == "sum":
        return msgs.sum(axis=0)
    if agg == "mean":
        return msgs.mean(axis=0)
    if agg == "max":
        return msgs.max(axis=0)
    raise ValueError(f"unknown intra aggregation {agg!r}")


def _inter(ms: Sequence[np.ndarray], agg: str) -> np.ndarray:
    stack = np.stack(ms)
    if agg == "sum":
        return stack.sum(axis=0)
    if agg == "mean":
        return stack.mean(axis=0)
    if agg == "max":
        return stack.max(axis=0)
    if agg == "min":
        return stack.min(axis=0)
    raise ValueError(f"unknown inter aggregation {agg!r}")


def _check(neighborhoods, H):
    for j, Ns in neighborhoods.items():
        if j not in H:
            raise ShapeMismatch(f"no cochain for target rank {j}")
        for G in Ns:
            if G.codomain_rank != j or G.domain_rank not in H:
                raise ShapeMismatch(f"{G.kind} does not map into rank {j} from a supplied rank")
            if G.shape != (H[j].shape[0], H[G.domain_rank].shape[0]):
                raise ShapeMismatch(f"{G.kind} has shape {G.shape}, cochains disagree")


def _alphas(alphas, n):
    if alphas is None or isinstance(alphas, str) or callable(alphas):
        alphas = [alphas or "source"] * n
    if len(alphas) != n:
        raise ShapeMismatch(f"{len(alphas)} message functions for {n} neighborhoods")
    return [_resolve(MESSAGES, a, "message function") for a in alphas]


def homp_step(
    neighborhoods: Mapping[int, Sequence[NeighborhoodMatrix]],
    H: Mapping[int, np.ndarray],
    alphas=None,
    intra_agg: str = "sum",
    inter_agg: str = "sum",
    beta="add",
) -> dict[int, np.ndarray]:
    """One HOMP update evaluated cell by cell.

    ``alphas[k](h_x, h_y, w)`` receives row-stacked features of the target
    cell, of its neighbours and the matrix weights; ``beta(h_x, m_x)`` is
    ``"add"``, ``"replace"`` or a callable.
    """
    H = {r: np.asarray(v, dtype=float) for r, v in H.items()}
    _check(neighborhoods, H)
    beta = _resolve(UPDATES, beta, "update")
    out = dict(H)
    for j, Ns in neighborhoods.items():
        al = _alphas(alphas, len(Ns))
        mats = [G.matrix for G in Ns]
        new = []
        for x in range(H[j].shape[0]):
            hx = H[j][x:x + 1]
            per_k = []
            for G, m, alpha in zip(Ns, mats, al):
                nbrs = m.indices[m.indptr[x]:m.indptr[x + 1]]
                w = m.data[m.indptr[x]:m.indptr[x + 1]]
                keep = w != 0
                nbrs, w = nbrs[keep], w[keep]
                Hi = H[G.domain_rank]
                msgs = np.array([alpha(hx, Hi[y:y + 1], w[t:t + 1])[0] for t, y in enumerate(nbrs)])
                d = _msg_dim(alpha, hx, Hi)
                per_k.append(_intra(msgs.reshape(len(nbrs), d), intra_agg, d))
            new.append(beta(hx, _inter(per_k, inter_agg)[None, :])[0])
        out[j] = np.array(new).reshape(H[j].shape[0], -1)
    return out


# -- merge-node realization ---------------------------------------------------
def _neighborhood_merge(G: NeighborhoodMatrix, Hj, Hi, alpha, agg):
    """``m^k``: per-entry messages pushed through the pattern of ``G``, then aggregated."""
    rows, cols, w = edge_list(G)
    n = Hj.shape[0]
    d = _msg_dim(alpha, Hj, Hi)
    out = np.zeros((n, d))
    msgs = alpha(Hj[rows], Hi[cols], w) if len(rows) else np.zeros((0, d))
    if agg in ("sum", "mean"):
        np.add.at(out, rows, msgs)
        if agg == "mean":
            cnt = np.bincount(rows, minlength=n)
            out[cnt > 0] /= cnt[cnt > 0, None]
    elif agg == "max":
        out[:] = -np.inf
        np.maximum.at(out, rows, msgs)
        out[np.isneginf(out)] = 0.0
    else:
        raise ValueError(f"unknown intra aggregation {agg!r}")
    return out


def _pairwise(acc, m, step, agg):
    # step is the 1-based index of m in the fold
    if agg == "sum":
        return acc + m
    if agg == "mean":
        return acc * ((step - 1) / step) + m / step
    if agg == "max":
        return np.maximum(acc, m)
    if agg == "min":
        return np.minimum(acc, m)
    raise ValueError(f"unknown inter aggregation {agg!r}")


def homp_via_merge(
    neighborhoods: Mapping[int, Sequence[NeighborhoodMatrix]],
    H: Mapping[int, np.ndarray],
    alphas=None,
    intra_agg: str = "sum",
    inter_agg: str = "sum",
    beta="add",
) -> dict[int, np.ndarray]:
    """The same update as :func:`homp_step`, composed from merge nodes."""
    H = {r: np.asarray(v, dtype=float) for r, v in H.items()}
    _check(neighborhoods, H)
    beta = _resolve(UPDATES, beta, "update")
    out = dict(H)
    for j, Ns in neighborhoods.items():
        al = _alphas(alphas, len(Ns))
        ms = [_neighborhood_merge(G, H[j], H[G.domain_rank], a, intra_agg) for G, a in zip(Ns, al)]
        acc = ms[0]
        for step, m in enumerate(ms[1:], start=2):
            acc = _pairwise(acc, m, step, inter_agg)
        out[j] = beta(H[j], acc)
    return out


# -- attention HOMP -----------------------------------------------------------
def project_simplex(b) -> np.ndarray:
    """Euclidean projection onto ``{b >= 0, Σb = 1}`` (sort-based)."""
    v = np.asarray(b, dtype=float).ravel()
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, len(v) + 1)
    rho = idx[u - css / idx > 0][-1]
    return np.maximum(v - css[rho - 1] / rho, 0.0)


def _attention_weights(a, hx, hy, w) -> np.ndarray:
    if len(hy) == 0:
        return np.zeros(0)
    if a == "uniform" or a is None:
        return np.full(len(hy), 1.0 / len(hy))
    return np.asarray(a(hx, hy, w), dtype=float).ravel()


def attention_homp_step(
    neighborhoods: Mapping[int, Sequence[NeighborhoodMatrix]],
    H: Mapping[int, np.ndarray],
    attention=None,
    b: Mapping[int, Sequence[float]] | None = None,
    alphas=None,
    beta="add",
) -> dict[int, np.ndarray]:
    """Attention HOMP: ``m_x = Σ_k b_k Σ_y a_k(x, y) alpha_k(h_x, h_y)``.

    ``attention[k]`` is ``"uniform"`` or a callable ``(h_x, h_ys, w) -> weights``
    over the neighbours of one cell. ``b[j]`` holds the inter-neighborhood
    weights for target rank ``j``; they are projected onto the simplex.
    """
    H = {r: np.asarray(v, dtype=float) for r, v in H.items()}
    _check(neighborhoods, H)
    beta = _resolve(UPDATES, beta, "update")
    out = dict(H)
    for j, Ns in neighborhoods.items():
        al = _alphas(alphas, len(Ns))
        att = attention if isinstance(attention, (list, tuple)) else [attention] * len(Ns)
        bj = project_simplex(b[j] if b is not None and j in b else np.ones(len(Ns)))
        if len(att) != len(Ns) or len(bj) != len(Ns):
            raise ShapeMismatch("need one attention function and one weight per neighborhood")
        new = []
        for x in range(H[j].shape[0]):
            hx = H[j][x:x + 1]
            m = np.zeros((1, _msg_dim(al[0], H[j], H[Ns[0].domain_rank])))
            for G, alpha, a, bk in zip(Ns, al, att, bj):
                mat = G.matrix
                sl = slice(mat.indptr[x], mat.indptr[x + 1])
                nbrs, w = mat.indices[sl], mat.data[sl]
                nbrs, w = nbrs[w != 0], w[w != 0]
                Hi = H[G.domain_rank]
                hy = Hi[nbrs]
                if len(nbrs) == 0:
                    continue
                msgs = alpha(np.repeat(hx, len(nbrs), axis=0), hy, w)
                m = m + bk * (_attention_weights(a, hx, hy, w) @ msgs)
            new.append(beta(hx, m)[0])
        out[j] = np.array(new).reshape(H[j].shape[0], -1)
    return out
