"""Tensor diagrams: compiled DAGs of cochain maps with trainable parameters.

A diagram spec is a plain mapping (usually loaded from JSON)::

    {"nodes": [{"id": "x0", "rank": 0, "dim": 3},
               {"id": "x1", "rank": 1, "dim": 4, "activation": "tanh"}],
     "edges": [{"src": "x0", "dst": "x1", "selector": "B_{0,1}^T", "kind": "conv"}],
     "readout": {"nodes": ["x1"], "classes": 2}}

Node keys: ``id, rank, dim`` and optionally ``combine`` (``sum`` or
``concat``) and ``activation`` applied after combining incoming messages.
Edge keys: ``src, dst, selector, kind`` (``conv``, ``attention`` or
``plain``) and optionally ``activation`` (per message), ``normalize``,
``out_dim`` (needed under ``concat``), ``phi`` and ``normalization`` for
attention, ``agg`` for plain edges (pattern aggregation instead of the
matrix product) and ``query`` for cross-rank attention: the id of a node of
the target rank whose cochain plays the role of ``H_t``.
"""

from __future__ import annotations

import re
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from graphlib import CycleError, TopologicalSorter
from typing import NamedTuple

import numpy as np

from ..cochain import Cochain
from ..complex import CombinatorialComplex
from ..errors import CycleDetected, MissingInput, ShapeMismatch, UnknownSelector, ValidationError
from ..neighborhoods import (
    NeighborhoodMatrix,
    adjacency,
    coadjacency,
    identity,
    incidence,
    signed_incidence,
)
from .autodiff import Eval, ParameterStore, Tape
from .layers import attention_cross_rank, attention_same_rank, conv_push_forward, edge_list

__all__ = [
    "DiagramClass",
    "EdgeSpec",
    "Layer",
    "NodeSpec",
    "TensorDiagram",
    "classify_diagram",
    "compile_diagram",
    "forward",
    "logits",
    "parse_selector",
    "resolve_selector",
    "run",
]

_PAIR = re.compile(r"^(B|A|coA)_?\{?(\d+),(\d+)\}?(\^T)?$")
_SIGNED = re.compile(r"^S_?\{?(\d+)\}?(\^T)?$")
_IDENT = re.compile(r"^Id_?\{?(\d+)\}?$")


class Selector(NamedTuple):
    family: str  # "B" | "A" | "coA" | "S" | "Id"
    ranks: tuple[int, ...]
    transpose: bool


def parse_selector(text: str) -> Selector:
    """Parse ``B_{0,1}^T``, ``A1,1``, ``coA_{2,1}``, ``S_{0}``, ``Id_2`` and similar."""
    s = text.replace(" ", "")
    if m := _PAIR.match(s):
        return Selector(m.group(1), (int(m.group(2)), int(m.group(3))), bool(m.group(4)))
    if m := _SIGNED.match(s):
        return Selector("S", (int(m.group(1)),), bool(m.group(2)))
    if m := _IDENT.match(s):
        return Selector("Id", (int(m.group(1)),), False)
    raise UnknownSelector(f"cannot parse neighborhood selector {text!r}")


def resolve_selector(cc: CombinatorialComplex, text: str, normalize: bool = False) -> NeighborhoodMatrix:
    sel = parse_selector(text)
    build = {"B": incidence, "A": adjacency, "coA": coadjacency, "S": signed_incidence, "Id": identity}[sel.family]
    G = build(cc, *sel.ranks)
    if sel.transpose:
        G = G.T
    return G.normalized() if normalize else G


@dataclass(frozen=True)
class NodeSpec:
    id: str
    rank: int
    dim: int
    combine: str = "sum"
    activation: str | None = None


@dataclass(frozen=True)
class EdgeSpec:
    index: int
    src: str
    dst: str
    selector: str
    kind: str = "conv"
    out_dim: int = 0
    activation: str | None = None
    normalize: bool = False
    agg: str | None = None
    query: str | None = None
    phi: str = "leaky_relu"
    normalization: str = "softmax"

    @property
    def slot(self) -> str:
        return f"e{self.index}"


class Layer(NamedTuple):
    depth: int
    nodes: tuple[str, ...]
    edges: tuple[int, ...]


class DiagramClass(NamedTuple):
    label: str  # "pooling CCNN" | "unpooling CCNN" | "neither"
    layers: tuple[str, ...]


@dataclass
class TensorDiagram:
    """A compiled diagram bound to one complex. Parameters live in ``store``."""

    cc: CombinatorialComplex
    nodes: dict[str, NodeSpec]
    edges: tuple[EdgeSpec, ...]
    operators: tuple[NeighborhoodMatrix, ...]
    store: ParameterStore
    order: tuple[str, ...]
    readout: dict | None = None
    spec: Mapping = field(default_factory=dict)

    # -- structure -----------------------------------------------------
    def in_edges(self, node: str) -> list[EdgeSpec]:
        return [e for e in self.edges if e.dst == node]

    @property
    def sources(self) -> tuple[str, ...]:
        fed = {e.dst for e in self.edges}
        return tuple(n for n in self.order if n not in fed)

    @property
    def targets(self) -> tuple[str, ...]:
        used = {e.src for e in self.edges} | {e.query for e in self.edges if e.query}
        return tuple(n for n in self.order if n not in used)

    @property
    def depth(self) -> dict[str, int]:
        d: dict[str, int] = {}
        for n in self.order:
            preds = [p for e in self.in_edges(n) for p in (e.src, e.query) if p]
            d[n] = 1 + max((d[p] for p in preds), default=-1) if preds else 0
        return d

    @property
    def height(self) -> int:
        return max(self.depth.values(), default=0)

    def layers(self) -> list[Layer]:
        """Height-one pieces: layer ℓ holds the depth-ℓ nodes and their incoming edges."""
        depth = self.depth
        out = []
        for ell in range(1, self.height + 1):
            nodes = tuple(n for n in self.order if depth[n] == ell)
            edges = tuple(e.index for e in self.edges if e.dst in nodes)
            out.append(Layer(ell, nodes, edges))
        return out

    def layer_diagram(self, ell: int) -> TensorDiagram:
        """The height-one sub-diagram of layer ``ell`` sharing this diagram's parameters."""
        layer = self.layers()[ell - 1]
        edges = tuple(self.edges[i] for i in layer.edges)
        keep = set(layer.nodes) | {e.src for e in edges} | {e.query for e in edges if e.query}
        order = tuple(n for n in self.order if n in keep)
        return TensorDiagram(
            self.cc,
            {n: self.nodes[n] for n in order},
            edges,
            tuple(self.operators[i] for i in layer.edges),
            self.store,
            order,
            None,
            self.spec,
        )

    def operator(self, edge: EdgeSpec) -> NeighborhoodMatrix:
        return self.operators[self.edges.index(edge)]

    # -- rebinding -----------------------------------------------------
    def rebind(self, cc: CombinatorialComplex) -> TensorDiagram:
        """Same parameters, operators recomputed on another complex."""
        ops = tuple(resolve_selector(cc, e.selector, e.normalize) for e in self.edges)
        return TensorDiagram(cc, self.nodes, self.edges, ops, self.store, self.order, self.readout, self.spec)

    def with_operators(self, operators: Sequence[NeighborhoodMatrix]) -> TensorDiagram:
        """Same parameters and wiring with user-supplied operator matrices (e.g. permuted)."""
        operators = tuple(operators)
        if len(operators) != len(self.edges):
            raise ShapeMismatch(f"need {len(self.edges)} operators, got {len(operators)}")
        for e, new in zip(self.edges, operators):
            _check_edge_ranks(e, new, self.nodes)
        return TensorDiagram(self.cc, self.nodes, self.edges, operators, self.store, self.order, self.readout, self.spec)

    def init_params(self, seed: int) -> None:
        """Re-draw every parameter from a fresh seeded generator."""
        store = ParameterStore(seed)
        _allocate(self.nodes, self.edges, self.readout, store)
        self.store.load(store.params)
        self.store.seed = seed


def _check_edge_ranks(e: EdgeSpec, G: NeighborhoodMatrix, nodes: Mapping[str, NodeSpec]) -> None:
    src, dst = nodes[e.src], nodes[e.dst]
    if G.domain_rank != src.rank or G.codomain_rank != dst.rank:
        raise ShapeMismatch(
            f"edge {e.src}->{e.dst}: {G.kind} maps rank {G.domain_rank} -> {G.codomain_rank}, "
            f"but the nodes have ranks {src.rank} -> {dst.rank}"
        )


def _allocate(nodes, edges, readout, store: ParameterStore) -> None:
    for e in edges:
        d_in = nodes[e.src].dim
        if e.kind == "conv":
            store.add(f"{e.slot}.W", (d_in, e.out_dim))
        elif e.kind == "attention":
            store.add(f"{e.slot}.W", (d_in, e.out_dim))
            if e.query:
                store.add(f"{e.slot}.W_t", (nodes[e.query].dim, e.out_dim))
            store.add(f"{e.slot}.a", (2 * e.out_dim, 1))
    if readout:
        d = sum(nodes[n].dim for n in readout["nodes"])
        store.add("readout.W", (d, readout["classes"]))
        store.add("readout.b", (1, readout["classes"]), fan_in=d)


def _node_specs(spec: Mapping) -> dict[str, NodeSpec]:
    nodes = {}
    for raw in spec.get("nodes", ()):
        try:
            n = NodeSpec(str(raw["id"]), int(raw["rank"]), int(raw["dim"]), raw.get("combine", "sum"), raw.get("activation"))
        except KeyError as exc:
            raise ValidationError(f"node spec missing field {exc}") from None
        if n.id in nodes:
            raise ValidationError(f"duplicate node id {n.id!r}")
        if n.combine not in ("sum", "concat"):
            raise ValidationError(f"node {n.id}: unknown combine {n.combine!r}")
        nodes[n.id] = n
    return nodes


def _edge_specs(spec: Mapping, nodes: Mapping[str, NodeSpec]) -> tuple[EdgeSpec, ...]:
    edges = []
    for i, raw in enumerate(spec.get("edges", ())):
        try:
            src, dst, selector = str(raw["src"]), str(raw["dst"]), str(raw["selector"])
        except KeyError as exc:
            raise ValidationError(f"edge {i} missing field {exc}") from None
        for n in (src, dst, raw.get("query")):
            if n is not None and n not in nodes:
                raise ValidationError(f"edge {i} refers to unknown node {n!r}")
        kind = raw.get("kind", "conv")
        if kind not in ("conv", "attention", "plain"):
            raise ValidationError(f"edge {i}: unknown kind {kind!r}")
        out_dim = nodes[src].dim if kind == "plain" else int(raw.get("out_dim", nodes[dst].dim))
        edges.append(
            EdgeSpec(
                i, src, dst, selector, kind, out_dim,
                raw.get("activation"), bool(raw.get("normalize", False)), raw.get("agg"),
                raw.get("query"), raw.get("phi", "leaky_relu"), raw.get("normalization", "softmax"),
            )
        )
    return tuple(edges)


def _check_dims(nodes, edges) -> None:
    for n in nodes.values():
        incoming = [e for e in edges if e.dst == n.id]
        if not incoming:
            continue
        dims = [e.out_dim for e in incoming]
        if n.combine == "sum" and any(d != n.dim for d in dims):
            raise ShapeMismatch(f"node {n.id}: sum-combine needs every message of dim {n.dim}, got {dims}")
        if n.combine == "concat" and sum(dims) != n.dim:
            raise ShapeMismatch(f"node {n.id}: concatenated messages have dim {sum(dims)}, node has {n.dim}")


def compile_diagram(spec: Mapping, cc: CombinatorialComplex, seed: int = 0) -> TensorDiagram:
    """Resolve selectors on ``cc``, check shapes and allocate seeded parameters.

    Raises
    ------
    UnknownSelector, CycleDetected, ShapeMismatch
    """
    nodes = _node_specs(spec)
    edges = _edge_specs(spec, nodes)
    ts = TopologicalSorter({n: () for n in nodes})
    for e in edges:
        ts.add(e.dst, e.src, *([e.query] if e.query else []))
    try:
        order = tuple(ts.static_order())
    except CycleError as exc:
        raise CycleDetected(f"diagram has a cycle through {exc.args[1]}") from None

    operators = []
    for e in edges:
        G = resolve_selector(cc, e.selector, e.normalize)
        _check_edge_ranks(e, G, nodes)
        if e.kind == "attention":
            if G.row_rank == G.col_rank and e.query:
                raise ShapeMismatch(f"edge {e.index}: same-rank attention takes no query node")
            if G.row_rank != G.col_rank:
                if not e.query:
                    raise ShapeMismatch(f"edge {e.index}: cross-rank attention needs a query node of rank {G.row_rank}")
                if nodes[e.query].rank != G.row_rank:
                    raise ShapeMismatch(f"edge {e.index}: query node must have rank {G.row_rank}")
        operators.append(G)
    _check_dims(nodes, edges)

    readout = spec.get("readout")
    if readout:
        rnodes = readout.get("nodes") or [readout["node"]]
        for n in rnodes:
            if n not in nodes:
                raise ValidationError(f"readout refers to unknown node {n!r}")
        readout = {"nodes": list(rnodes), "classes": int(readout["classes"])}
    store = ParameterStore(seed)
    _allocate(nodes, edges, readout, store)
    return TensorDiagram(cc, nodes, edges, tuple(operators), store, order, readout, dict(spec))


# -- evaluation ------------------------------------------------------------
def _input_array(diagram: TensorDiagram, node: NodeSpec, x):
    if isinstance(x, Cochain):
        if x.rank != node.rank:
            raise ShapeMismatch(f"input {node.id}: rank {x.rank} != {node.rank}")
        x = x.data
    if hasattr(x, "tape"):
        return x
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    want = (diagram.cc.count(node.rank), node.dim)
    if x.shape != want:
        raise ShapeMismatch(f"input {node.id}: shape {x.shape}, expected {want}")
    return x


def _message(diagram: TensorDiagram, e: EdgeSpec, G: NeighborhoodMatrix, vals, ops):
    H = vals[e.src]
    if e.kind == "conv":
        K = conv_push_forward(G, H, ops.param(f"{e.slot}.W"), ops)
    elif e.kind == "attention":
        W, a = ops.param(f"{e.slot}.W"), ops.param(f"{e.slot}.a")
        if e.query:
            K, _ = attention_cross_rank(
                G, H, vals[e.query], W, ops.param(f"{e.slot}.W_t"), a, e.phi, e.normalization, ops
            )
        else:
            K = attention_same_rank(G, H, W, a, e.phi, e.normalization, ops)
    elif e.agg:
        rows, cols, _ = edge_list(G)
        K = ops.aggregate(rows, cols, H, G.shape[0], e.agg)
    else:
        K = ops.matmul(G.matrix, H)
    return ops.act(K, e.activation)


def run(diagram: TensorDiagram, inputs: Mapping, ops) -> dict:
    """Evaluate every node in topological order with the given ops object."""
    vals = {}
    for name in diagram.order:
        node = diagram.nodes[name]
        incoming = [(e, G) for e, G in zip(diagram.edges, diagram.operators) if e.dst == name]
        if not incoming:
            if name not in inputs:
                raise MissingInput(f"no input for source node {name!r}")
            vals[name] = _input_array(diagram, node, inputs[name])
            continue
        msgs = [_message(diagram, e, G, vals, ops) for e, G in incoming]
        if node.combine == "concat" and len(msgs) > 1:
            out = ops.concat(msgs, axis=1)
        else:
            out = msgs[0]
            for m in msgs[1:]:
                out = ops.add(out, m)
        vals[name] = ops.act(out, node.activation)
    return vals


def logits(diagram: TensorDiagram, vals: Mapping, ops):
    """Readout: mean over the rows of each readout node, concatenated, then affine."""
    if not diagram.readout:
        raise ValidationError("diagram has no readout")
    pooled = [ops.mean_rows(vals[n]) for n in diagram.readout["nodes"]]
    z = pooled[0] if len(pooled) == 1 else ops.concat(pooled, axis=1)
    return ops.add(ops.matmul(z, ops.param("readout.W")), ops.param("readout.b"))


def forward(diagram: TensorDiagram, inputs: Mapping, mode: str = "infer"):
    """Evaluate the diagram.

    ``mode="infer"`` returns ``{target: Cochain}``. ``mode="train"`` returns
    ``(values, tape)`` where ``values`` maps every node to its tape value.
    """
    if mode == "infer":
        vals = run(diagram, inputs, Eval(diagram.store))
        return {n: Cochain(diagram.nodes[n].rank, vals[n]) for n in diagram.targets}
    if mode == "train":
        tape = Tape(diagram.store)
        return run(diagram, inputs, tape), tape
    raise ValueError(f"unknown mode {mode!r}")


# -- classification ----------------------------------------------------------
def _layer_label(diagram: TensorDiagram, layer: Layer) -> str:
    edges = [diagram.edges[i] for i in layer.edges]
    src_ranks = [diagram.nodes[e.src].rank for e in edges]
    i_min = min(src_ranks)
    j_min = min(diagram.nodes[n].rank for n in layer.nodes)
    # pooling also asks for some map out of the lowest input rank into rank >= j_min
    lifts = any(diagram.nodes[e.src].rank == i_min and diagram.nodes[e.dst].rank >= j_min for e in edges)
    if i_min < j_min and lifts:
        return "pooling-1"
    if i_min > j_min:
        return "unpooling-1"
    if i_min == j_min:
        return "lowest-rank-preserving-1"
    return "other"


def classify_diagram(diagram: TensorDiagram) -> DiagramClass:
    """Label each height-one layer and the diagram as a pooling/unpooling CCNN or neither."""
    labels = tuple(_layer_label(diagram, layer) for layer in diagram.layers())
    if labels and all(lb in ("pooling-1", "lowest-rank-preserving-1") for lb in labels) and "pooling-1" in labels:
        return DiagramClass("pooling CCNN", labels)
    if labels and all(lb in ("unpooling-1", "lowest-rank-preserving-1") for lb in labels) and "unpooling-1" in labels:
        return DiagramClass("unpooling CCNN", labels)
    return DiagramClass("neither", labels)
