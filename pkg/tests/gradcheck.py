"""Finite-difference harness shared by the unit and acceptance tests."""

from __future__ import annotations

import numpy as np

from ccnet.neighborhoods import adjacency, incidence
from ccnet.nn.autodiff import Eval, Tape, backward
from ccnet.nn.layers import attention_cross_rank, attention_same_rank, conv_merge, conv_push_forward

from oracles import central_difference, relative_error


def _scalar(ops, outs, probes):
    total = 0.0
    for out, R in zip(outs, probes):
        term = ops.sum(ops.mul(out, R))
        total = term if isinstance(total, float) and total == 0.0 else ops.add(total, term)
    return total


def check(fn, arrays, rng, h=1e-5):
    """Max relative error between tape and central-difference gradients.

    ``fn(ops, *xs)`` returns an output or a tuple of outputs; the scalar
    objective is ``Σ_k <out_k, R_k>`` with fixed random probes ``R_k``.
    """
    arrays = [np.array(x, dtype=float) for x in arrays]
    outs = fn(Eval(), *arrays)
    outs = outs if isinstance(outs, tuple) else (outs,)
    probes = [rng.normal(size=np.shape(o)) for o in outs]

    tape = Tape()
    vs = [tape.watch(x) for x in arrays]
    o = fn(tape, *vs)
    o = o if isinstance(o, tuple) else (o,)
    leaves = backward(tape, _scalar(tape, o, probes))
    analytic = [leaves.get(v.idx, np.zeros_like(x)) for v, x in zip(vs, arrays)]

    def objective():
        res = fn(Eval(), *arrays)
        res = res if isinstance(res, tuple) else (res,)
        return float(sum(np.sum(r * p) for r, p in zip(res, probes)))

    return max(relative_error(g, central_difference(objective, x, h)) for g, x in zip(analytic, arrays))


def layer_cases(cc):
    """``{layer: (fn, input shapes)}`` for every layer type on ``cc``."""
    G1 = incidence(cc, 0, 1).T
    A = adjacency(cc, 0, 1)
    B = incidence(cc, 1, 2)
    n0, n1, n2 = cc.count(0), cc.count(1), cc.count(2)
    return {
        "conv": (lambda o, H, W: conv_push_forward(G1, H, W, o), [(n0, 3), (3, 2)]),
        "conv_merge": (lambda o, H1, H2, W1, W2: conv_merge(G1, adjacency(cc, 1, 1), H1, H2, W1, W2, "tanh", o),
                       [(n0, 2), (n1, 3), (2, 4), (3, 4)]),
        "attention_same": (lambda o, H, W, a: attention_same_rank(A, H, W, a, ops=o), [(n0, 3), (3, 2), (4, 1)]),
        "attention_cross": (lambda o, Hs, Ht, Ws, Wt, a: attention_cross_rank(B, Hs, Ht, Ws, Wt, a, ops=o),
                            [(n2, 2), (n1, 3), (2, 3), (3, 2), (5, 1)]),
    }
