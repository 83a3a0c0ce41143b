"""Minimal reverse-mode differentiation over numpy arrays.

Layers are written once against an *ops* object. :class:`Eval` runs the
primitives eagerly on arrays; :class:`Tape` runs the same primitives and
records a vector-Jacobian product per output so :func:`backward` can sweep
them in reverse. Anything that is not a :class:`Var` is a constant.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from ..errors import DegenerateRow, StaleTape

__all__ = ["Eval", "ParameterStore", "Tape", "Var", "backward", "value"]


class ParameterStore:
    """Named parameter matrices with matching gradient buffers.

    ``version`` increases on every in-place update so tapes recorded against
    older parameter values can be detected as stale.
    """

    def __init__(self, seed: int = 0):
        self.seed = seed
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self.version = 0
        self._rng = np.random.default_rng(seed)

    def add(self, name: str, shape: tuple[int, ...], fan_in: int | None = None) -> np.ndarray:
        """Allocate ``name`` uniform in ``±1/sqrt(fan_in)`` (``fan_in`` defaults to ``shape[0]``)."""
        fan_in = fan_in or shape[0]
        bound = 1.0 / np.sqrt(max(fan_in, 1))
        self.params[name] = self._rng.uniform(-bound, bound, size=shape)
        self.grads[name] = np.zeros(shape)
        return self.params[name]

    def set(self, name: str, val) -> None:
        val = np.array(val, dtype=float)
        if name in self.params and val.shape != self.params[name].shape:
            raise ValueError(f"{name}: shape {val.shape} != {self.params[name].shape}")
        self.params[name] = val
        self.grads[name] = np.zeros_like(val)
        self.version += 1

    def __getitem__(self, name: str) -> np.ndarray:
        return self.params[name]

    def __contains__(self, name: str) -> bool:
        return name in self.params

    def __iter__(self):
        return iter(self.params)

    def zero_grad(self) -> None:
        for g in self.grads.values():
            g.fill(0.0)

    def step(self, lr: float) -> None:
        """Plain gradient descent ``p -= lr * grad``."""
        for name, p in self.params.items():
            p -= lr * self.grads[name]
        self.version += 1

    def state(self) -> dict[str, np.ndarray]:
        return {k: v.copy() for k, v in self.params.items()}

    def load(self, state: dict[str, np.ndarray]) -> None:
        for k, v in state.items():
            self.set(k, v)


class Var:
    """A recorded value on a :class:`Tape`."""

    __slots__ = ("value", "idx", "tape")

    def __init__(self, val, idx: int, tape: Tape):
        self.value = val
        self.idx = idx
        self.tape = tape

    @property
    def shape(self):
        return np.shape(self.value)

    def __repr__(self) -> str:
        return f"Var(#{self.idx}, shape={self.shape})"


def value(x):
    return x.value if isinstance(x, Var) else x


def _unbroadcast(g: np.ndarray, shape) -> np.ndarray:
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, n in enumerate(shape):
        if n == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g


def _segment_sum(x: np.ndarray, seg: np.ndarray, n: int) -> np.ndarray:
    out = np.zeros((n,) + x.shape[1:])
    np.add.at(out, seg, x)
    return out


def _segment_max(x: np.ndarray, seg: np.ndarray, n: int) -> np.ndarray:
    out = np.full((n,) + x.shape[1:], -np.inf)
    np.maximum.at(out, seg, x)
    return out


def _edge_matrix(rows, cols, w, shape) -> sp.csr_array:
    return sp.csr_array((np.asarray(w, dtype=float).ravel(), (rows, cols)), shape=shape)


_ACT: dict[str, tuple[Callable, Callable]] = {
    # name -> (f(x), df given (x, y))
    "identity": (lambda x: x, lambda x, y: np.ones_like(x)),
    "tanh": (np.tanh, lambda x, y: 1.0 - y * y),
    "relu": (lambda x: np.maximum(x, 0.0), lambda x, y: (x > 0).astype(float)),
    "leaky_relu": (lambda x: np.where(x > 0, x, 0.2 * x), lambda x, y: np.where(x > 0, 1.0, 0.2)),
    "sigmoid": (lambda x: 1.0 / (1.0 + np.exp(-x)), lambda x, y: y * (1.0 - y)),
}


def _resolve_act(act):
    if act is None:
        act = "identity"
    if isinstance(act, str):
        try:
            return _ACT[act]
        except KeyError:
            raise ValueError(f"unknown activation {act!r}") from None
    if isinstance(act, tuple):
        f, df = act
        return f, lambda x, y: df(x)
    return act, None  # plain callable: forward only


class Eval:
    """Eager evaluation; parameters are read straight from the store."""

    recording = False

    def __init__(self, store: ParameterStore | None = None):
        self.store = store

    # leaves
    def param(self, name: str):
        return self.store[name]

    # primitives; each returns (out, vjp) in the recording subclass
    def matmul(self, a, b):
        return value(a) @ value(b)

    def add(self, a, b):
        return value(a) + value(b)

    def mul(self, a, b):
        return value(a) * value(b)

    def scale(self, a, c: float):
        return c * value(a)

    def concat(self, xs: Sequence, axis: int = 1):
        return np.concatenate([value(x) for x in xs], axis=axis)

    def act(self, x, act):
        return _resolve_act(act)[0](value(x))

    def gather(self, x, idx):
        return value(x)[idx]

    def segment_softmax(self, s, seg, n: int):
        s = value(s)
        m = _segment_max(s, seg, n)
        ex = np.exp(s - m[seg])
        return ex / _segment_sum(ex, seg, n)[seg]

    def segment_normalize(self, e, seg, n: int):
        e = value(e)
        den = _segment_sum(e, seg, n)
        occupied = np.bincount(seg, minlength=n) > 0
        if np.any(den[occupied] <= 0):
            raise DegenerateRow("attention normalizer is non-positive on a non-empty row")
        return e / den[seg]

    def edge_spmm(self, rows, cols, w, x, n: int):
        """``out[r] = Σ_e w_e x[c_e]`` over entries ``(r, c) = (rows[e], cols[e])``."""
        xv = value(x)
        return _edge_matrix(rows, cols, value(w), (n, xv.shape[0])) @ xv

    def aggregate(self, rows, cols, x, n: int, agg: str):
        return _aggregate_forward(rows, cols, value(x), n, agg)[0]

    def mean_rows(self, x):
        return value(x).mean(axis=0, keepdims=True)

    def sum(self, x):
        return np.sum(value(x))

    def softmax_xent(self, logits, label: int):
        z = value(logits).ravel()
        m = z.max()
        return m + np.log(np.exp(z - m).sum()) - z[label]

    def mse(self, pred, target):
        d = value(pred) - np.asarray(target, dtype=float)
        return np.mean(d * d)


def _aggregate_forward(rows, cols, x, n, agg):
    vals = x[cols]
    if agg in ("sum", "mean"):
        w = np.ones(len(rows))
        if agg == "mean":
            cnt = np.bincount(rows, minlength=n).astype(float)
            w = 1.0 / cnt[rows] if len(rows) else w
        S = _edge_matrix(rows, cols, w, (n, x.shape[0]))
        return S @ x, S
    if agg == "max":
        out = _segment_max(vals, rows, n)
        out[np.isneginf(out)] = 0.0
        # winner per (row, feature): first entry in storage order attaining the max
        win = np.full(out.shape, -1, dtype=np.int64)
        for f in range(x.shape[1]):
            hit = np.flatnonzero(vals[:, f] == out[rows, f])
            r = rows[hit]
            first = np.unique(r, return_index=True)[1]
            win[r[first], f] = cols[hit[first]]
        return out, win
    raise ValueError(f"unknown aggregation {agg!r}")


class Tape(Eval):
    """Recording evaluation. Create one per forward pass."""

    recording = True

    def __init__(self, store: ParameterStore | None = None):
        super().__init__(store)
        self.nodes: list[tuple[tuple, Callable | None, str | None]] = []
        self.version = store.version if store is not None else 0
        self.consumed = False

    def _record(self, out, parents: tuple, vjp: Callable | None, slot: str | None = None) -> Var:
        self.nodes.append((parents, vjp, slot))
        return Var(out, len(self.nodes) - 1, self)

    def _live(self, *xs) -> bool:
        return any(isinstance(x, Var) for x in xs)

    def param(self, name: str) -> Var:
        return self._record(self.store[name], (), None, slot=name)

    def watch(self, x) -> Var:
        """Leaf whose gradient is kept in ``tape.leaf_grads`` after backward."""
        return self._record(np.asarray(x, dtype=float), (), None, slot=None)

    def matmul(self, a, b):
        av, bv = value(a), value(b)
        out = av @ bv
        if not self._live(a, b):
            return out
        return self._record(out, (a, b), lambda g: (g @ bv.T, av.T @ g))

    def add(self, a, b):
        av, bv = value(a), value(b)
        out = av + bv
        if not self._live(a, b):
            return out
        sa, sb = np.shape(av), np.shape(bv)
        return self._record(out, (a, b), lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)))

    def mul(self, a, b):
        av, bv = value(a), value(b)
        out = av * bv
        if not self._live(a, b):
            return out
        sa, sb = np.shape(av), np.shape(bv)
        return self._record(out, (a, b), lambda g: (_unbroadcast(g * bv, sa), _unbroadcast(g * av, sb)))

    def scale(self, a, c: float):
        out = c * value(a)
        if not self._live(a):
            return out
        return self._record(out, (a,), lambda g: (c * g,))

    def concat(self, xs, axis: int = 1):
        vals = [value(x) for x in xs]
        out = np.concatenate(vals, axis=axis)
        if not self._live(*xs):
            return out
        cuts = np.cumsum([v.shape[axis] for v in vals])[:-1]
        return self._record(out, tuple(xs), lambda g: tuple(np.split(g, cuts, axis=axis)))

    def act(self, x, act):
        f, df = _resolve_act(act)
        xv = value(x)
        y = f(xv)
        if not self._live(x):
            return y
        if df is None:
            raise TypeError("a plain callable activation cannot be differentiated; pass (f, df)")
        return self._record(y, (x,), lambda g: (g * df(xv, y),))

    def gather(self, x, idx):
        xv = value(x)
        out = xv[idx]
        if not self._live(x):
            return out

        def vjp(g):
            gx = np.zeros_like(xv)
            np.add.at(gx, idx, g)
            return (gx,)

        return self._record(out, (x,), vjp)

    def segment_softmax(self, s, seg, n: int):
        y = Eval.segment_softmax(self, s, seg, n)
        if not self._live(s):
            return y
        return self._record(y, (s,), lambda g: (y * (g - _segment_sum(g * y, seg, n)[seg]),))

    def segment_normalize(self, e, seg, n: int):
        y = Eval.segment_normalize(self, e, seg, n)
        if not self._live(e):
            return y
        ev = value(e)
        den = _segment_sum(ev, seg, n)[seg]
        return self._record(y, (e,), lambda g: (g / den - _segment_sum(g * ev, seg, n)[seg] / den**2,))

    def edge_spmm(self, rows, cols, w, x, n: int):
        wv, xv = value(w), value(x)
        S = _edge_matrix(rows, cols, wv, (n, xv.shape[0]))
        out = S @ xv
        if not self._live(w, x):
            return out
        ws = np.shape(wv)

        def vjp(g):
            gw = np.sum(g[rows] * xv[cols], axis=1).reshape(ws)
            return gw, S.T @ g

        return self._record(out, (w, x), vjp)

    def aggregate(self, rows, cols, x, n: int, agg: str):
        xv = value(x)
        out, aux = _aggregate_forward(rows, cols, xv, n, agg)
        if not self._live(x):
            return out
        if agg == "max":
            win = aux

            def vjp(g):
                gx = np.zeros_like(xv)
                r, f = np.nonzero(win >= 0)
                np.add.at(gx, (win[r, f], f), g[r, f])
                return (gx,)
        else:
            S = aux

            def vjp(g):
                return (S.T @ g,)

        return self._record(out, (x,), vjp)

    def mean_rows(self, x):
        xv = value(x)
        out = xv.mean(axis=0, keepdims=True)
        if not self._live(x):
            return out
        n = xv.shape[0]
        return self._record(out, (x,), lambda g: (np.repeat(g / n, n, axis=0),))

    def sum(self, x):
        xv = value(x)
        out = np.sum(xv)
        if not self._live(x):
            return out
        return self._record(out, (x,), lambda g: (np.full(np.shape(xv), g),))

    def softmax_xent(self, logits, label: int):
        zv = value(logits)
        out = Eval.softmax_xent(self, logits, label)
        if not self._live(logits):
            return out
        p = np.exp(zv - zv.max())
        p /= p.sum()
        onehot = np.zeros_like(zv)
        onehot.flat[label] = 1.0
        return self._record(out, (logits,), lambda g: (g * (p - onehot),))

    def mse(self, pred, target):
        pv = value(pred)
        t = np.asarray(target, dtype=float)
        out = Eval.mse(self, pred, target)
        if not self._live(pred):
            return out
        return self._record(out, (pred,), lambda g: (g * 2.0 * (pv - t) / pv.size,))


def backward(tape: Tape, out, grad=None) -> dict[int, np.ndarray]:
    """Reverse sweep from ``out``; parameter gradients are *added* to the store.

    Returns the gradients of watched leaves keyed by their tape index.

    Raises
    ------
    StaleTape
        The tape was already swept, or the store changed since recording.
    """
    if tape.consumed:
        raise StaleTape("this tape has already been used for a backward pass")
    if tape.store is not None and tape.store.version != tape.version:
        raise StaleTape("parameters changed after the forward pass was recorded")
    tape.consumed = True
    if not isinstance(out, Var):
        return {}
    grads: list = [None] * len(tape.nodes)
    grads[out.idx] = np.ones_like(np.asarray(out.value, dtype=float)) if grad is None else np.asarray(grad, float)
    leaves = {}
    for i in range(out.idx, -1, -1):
        g = grads[i]
        if g is None:
            continue
        parents, vjp, slot = tape.nodes[i]
        if vjp is None:
            if slot is not None:
                tape.store.grads[slot] += g
            else:
                leaves[i] = g
            continue
        for p, gp in zip(parents, vjp(g)):
            if isinstance(p, Var):
                grads[p.idx] = gp if grads[p.idx] is None else grads[p.idx] + gp
    return leaves
