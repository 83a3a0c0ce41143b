"""Tensor diagrams, parameterized layers, message passing and training."""

from .autodiff import Eval, ParameterStore, Tape, Var, backward
from .diagram import (
    TensorDiagram,
    classify_diagram,
    compile_diagram,
    forward,
    logits,
    parse_selector,
    resolve_selector,
    run,
)
from .homp import attention_homp_step, homp_step, homp_via_merge, linear_message, project_simplex
from .layers import attention_cross_rank, attention_same_rank, conv_merge, conv_push_forward
from .train import History, Sample, evaluate, predict, train

__all__ = [
    "Eval",
    "History",
    "ParameterStore",
    "Sample",
    "Tape",
    "TensorDiagram",
    "Var",
    "attention_cross_rank",
    "attention_homp_step",
    "attention_same_rank",
    "backward",
    "classify_diagram",
    "compile_diagram",
    "conv_merge",
    "conv_push_forward",
    "evaluate",
    "forward",
    "homp_step",
    "homp_via_merge",
    "linear_message",
    "logits",
    "parse_selector",
    "predict",
    "project_simplex",
    "resolve_selector",
    "run",
    "train",
]
