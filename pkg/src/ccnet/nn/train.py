"""Full-batch gradient descent for compiled tensor diagrams."""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from typing import Any, NamedTuple

import numpy as np

from ..complex import CombinatorialComplex
from ..errors import ValidationError
from .autodiff import Eval, Tape, backward
from .diagram import TensorDiagram, logits, run

__all__ = ["History", "Sample", "evaluate", "predict", "train"]


class Sample(NamedTuple):
    """One dataset item: its complex (``None`` reuses the diagram's), inputs and target."""

    cc: CombinatorialComplex | None
    inputs: Mapping[str, Any]
    target: Any


@dataclass
class History:
    loss: list[float] = field(default_factory=list)
    accuracy: list[float] = field(default_factory=list)


def _loss(diagram: TensorDiagram, vals, target, loss: str, ops):
    if loss == "cross-entropy":
        return ops.softmax_xent(logits(diagram, vals, ops), int(target))
    if loss == "mse":
        out = logits(diagram, vals, ops) if diagram.readout else vals[_single_target(diagram)]
        return ops.mse(out, target)
    raise ValidationError(f"unknown loss {loss!r}")


def _single_target(diagram: TensorDiagram) -> str:
    if len(diagram.targets) != 1:
        raise ValidationError("mse without a readout needs exactly one target node")
    return diagram.targets[0]


def _bind(diagram: TensorDiagram, data: Sequence[Sample]) -> list[TensorDiagram]:
    cache: dict[int, TensorDiagram] = {}
    out = []
    for s in data:
        if s.cc is None or s.cc is diagram.cc:
            out.append(diagram)
        else:
            out.append(cache.setdefault(id(s.cc), diagram.rebind(s.cc)))
    return out


def _correct(diagram, vals, target, loss, ops) -> float:
    if loss != "cross-entropy":
        return float("nan")
    return float(np.argmax(logits(diagram, vals, ops)) == int(target))


def evaluate(diagram: TensorDiagram, data: Sequence[Sample], loss: str = "cross-entropy") -> tuple[float, float]:
    """Mean loss and accuracy (NaN for regression losses)."""
    ops = Eval(diagram.store)
    losses, hits = [], []
    for d, s in zip(_bind(diagram, data), data):
        vals = run(d, s.inputs, ops)
        losses.append(float(_loss(d, vals, s.target, loss, ops)))
        hits.append(_correct(d, vals, s.target, loss, ops))
    return float(np.mean(losses)), float(np.mean(hits))


def predict(diagram: TensorDiagram, data: Sequence[Sample]) -> np.ndarray:
    ops = Eval(diagram.store)
    return np.array([int(np.argmax(logits(d, run(d, s.inputs, ops), ops))) for d, s in zip(_bind(diagram, data), data)])


def train(
    diagram: TensorDiagram,
    data: Sequence[Sample],
    loss: str = "cross-entropy",
    lr: float = 0.1,
    epochs: int = 100,
    seed: int | None = None,
) -> History:
    """Plain full-batch gradient descent; gradients are averaged over items.

    ``seed`` re-initializes every parameter before training so a run is a
    function of its arguments. ``history.loss[e]`` and ``history.accuracy[e]``
    are measured during epoch ``e``, before its update.
    """
    if seed is not None:
        diagram.init_params(seed)
    bound = _bind(diagram, data)
    store = diagram.store
    hist = History()
    n = len(data)
    for _ in range(epochs):
        store.zero_grad()
        total, hits = 0.0, 0.0
        for d, s in zip(bound, data):
            tape = Tape(store)
            vals = run(d, s.inputs, tape)
            out = _loss(d, vals, s.target, loss, tape)
            total += float(np.asarray(getattr(out, "value", out)))
            hits += _correct(d, {k: getattr(v, "value", v) for k, v in vals.items()}, s.target, loss, Eval(store))
            backward(tape, out, 1.0 / n)
        store.step(lr)
        hist.loss.append(total / n)
        hist.accuracy.append(hits / n)
    return hist
