"""Command-line interface: ``ccnet {lift,matrices,pool,train,reduce-hasse,features}``.

Exit status is 0 on success, 2 on invalid input and 1 on internal errors;
diagnostics go to stderr. Relative input paths fall back to
``$CCNET_FIXTURES`` and then to the bundled fixtures.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
from pathlib import Path

import numpy as np

from . import io as cio
from .cochain import Cochain
from .errors import ValidationError
from .hasse import augment_hasse, reduce_and_run, to_dot
from .lifting import all_triangles, coface_cc, graph_cc, lattice_cc, loop_cc, n_hop_cc, path_cc
from .mog import agd, make_cover, mog_pool, normalize_scalar
from .nn.diagram import compile_diagram, forward, resolve_selector

__all__ = ["main"]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _walks(path) -> list[list[int]]:
    return [[int(t) for t in tok] for _, tok in cio._lines(path)]


def _cmd_lift(a) -> int:
    m = a.method
    if m == "lattice":
        cc = lattice_cc(a.height, a.width, a.window, a.stride)
    elif m == "mesh":
        cc = cio.mesh_to_cc(cio.load_off(a.input))
    else:
        if not a.input:
            raise ValidationError(f"lift --method {m} needs --input")
        g = cio.load_edge_list(a.input)
        if m == "graph":
            cc = graph_cc(g)
        elif m == "nhop":
            cc = n_hop_cc(g, a.n)
        elif m == "paths":
            if not a.cells:
                raise ValidationError("lift --method paths needs --cells with one walk per line")
            cc = path_cc(g, _walks(a.cells))
        elif m == "loops":
            cc = loop_cc(g, _walks(a.cells) if a.cells else all_triangles(g))
        else:  # coface
            cc = coface_cc(loop_cc(g, all_triangles(g)))
    buf = io.StringIO()
    cio.save_cc(cc, buf)
    _emit(buf.getvalue(), a.out)
    counts = {str(r): cc.count(r) for r in cc.ranks}
    print(json.dumps({"dim": cc.dim, "counts": counts}), file=sys.stderr)
    return 0


def _cmd_matrices(a) -> int:
    cc = cio.load_cc(a.cc)
    buf = io.StringIO()
    for sel in a.which:
        G = resolve_selector(cc, sel, a.normalize)
        if len(a.which) > 1:
            buf.write(f"# {G.kind}\n")
        cio.save_triplets(G, buf)
    _emit(buf.getvalue(), a.out)
    return 0


def _cmd_pool(a) -> int:
    if not a.mog:
        raise ValidationError("pool currently supports --mog only")
    g = cio.load_edge_list(a.graph)
    if a.scalar == "agd":
        f = normalize_scalar(agd(g))
    else:
        if not a.scalar_file:
            raise ValidationError("--scalar file needs --scalar-file")
        f = cio.load_scalar(a.scalar_file)
        if a.normalize_scalar:
            f = normalize_scalar(f)
    H0 = cio.load_cochain(a.features) if a.features else Cochain(0, np.ones((g.vertex_count, 1)))
    res, pooled = mog_pool(g, H0, f, make_cover(a.intervals, a.overlap), a.agg)
    if a.out:
        cio.save_cochain(pooled, a.out)
    summary = {
        "components": len(res.components),
        "mog_edges": len(res.mog_edges),
        "new_cells": len(res.new_cells),
        "rank": res.rank,
        "component_sets": [list(c) for _, c in res.components],
        "edges": [list(e) for e in res.mog_edges],
    }
    print(json.dumps(summary))
    return 0


def _load_json(path) -> dict:
    p = cio.fixture_path(path)
    if not p.exists():
        raise ValidationError(f"file not found: {path}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON ({exc})") from None


def _cmd_train(a) -> int:
    from .datasets import cycle_vs_clique, pooling_classifier_spec, to_samples
    from .nn.train import evaluate, train

    cfg = _load_json(a.config)
    data = cfg.get("dataset", {})
    if data.get("name", "cycle_vs_clique") != "cycle_vs_clique":
        raise ValidationError(f"unknown dataset {data.get('name')!r}")
    train_set = to_samples(cycle_vs_clique(data.get("per_class", 30), tuple(data.get("n_range", (8, 12))), data.get("seed", 0)))
    test_set = to_samples(cycle_vs_clique(data.get("test_per_class", 15), tuple(data.get("n_range", (8, 12))), data.get("test_seed", 1)))
    spec = cfg.get("diagram") or pooling_classifier_spec(cfg.get("hidden", 8))
    if isinstance(spec, str):
        spec = _load_json(spec)
    seed = int(cfg.get("seed", 0))
    diagram = compile_diagram(spec, train_set[0].cc, seed)
    loss = cfg.get("loss", "cross-entropy")
    hist = train(diagram, train_set, loss, float(cfg.get("lr", 0.5)), int(cfg.get("epochs", 200)), seed)
    tr_loss, tr_acc = evaluate(diagram, train_set, loss)
    te_loss, te_acc = evaluate(diagram, test_set, loss)
    report = {"final_loss": tr_loss, "train_accuracy": tr_acc, "test_loss": te_loss, "test_accuracy": te_acc,
              "epochs": len(hist.loss), "loss_history": hist.loss}
    _emit(json.dumps(report) + "\n", a.out)
    return 0


def _cmd_reduce_hasse(a) -> int:
    cc = cio.load_cc(a.cc)
    spec = _load_json(a.diagram)
    diagram = compile_diagram(spec, cc, a.seed)
    rng = np.random.default_rng(a.seed)
    inputs = {n: rng.normal(size=(cc.count(diagram.nodes[n].rank), diagram.nodes[n].dim)) for n in diagram.sources}
    hg = augment_hasse(cc, [(f"{e.slot}:{e.selector}", G) for e, G in zip(diagram.edges, diagram.operators)])
    ref = forward(diagram, inputs)
    red = reduce_and_run(diagram, inputs, hg)
    dev = max((float(np.max(np.abs(ref[n].data - red[n].data), initial=0.0)) for n in ref), default=0.0)
    if a.dot:
        Path(a.dot).write_text(to_dot(hg))
    print(json.dumps({"max_deviation": dev, "equal": dev <= 1e-12}))
    return 0 if dev <= 1e-12 else 1


def _cmd_features(a) -> int:
    if a.mesh:
        V, E, F = cio.mesh_features(cio.load_off(a.mesh))
        prefix = a.out_prefix or "features"
        for tag, H in (("vertex", V), ("edge", E), ("face", F)):
            cio.save_cochain(H, f"{prefix}.{tag}.txt")
        return 0
    if a.points:
        pts = np.loadtxt(cio.fixture_path(a.points), ndmin=2)
        buf = io.StringIO()
        cio.save_edge_list(cio.knn_graph(pts, a.k), buf)
        _emit(buf.getvalue(), a.out_prefix)
        return 0
    raise ValidationError("features needs --mesh or --points")


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ccnet", description="Combinatorial complex neural network toolkit.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    s = sub.add_parser("lift", help="lift a graph, grid or mesh to a combinatorial complex")
    s.add_argument("--method", required=True, choices=["nhop", "paths", "loops", "coface", "lattice", "mesh", "graph"])
    s.add_argument("--input", help="edge list (or OFF for --method mesh)")
    s.add_argument("--cells", help="walks or loops, one vertex sequence per line")
    s.add_argument("--n", type=int, default=2, help="hop radius for nhop")
    s.add_argument("--height", type=int, default=3)
    s.add_argument("--width", type=int, default=3)
    s.add_argument("--window", type=int, default=2)
    s.add_argument("--stride", type=int, default=1)
    s.add_argument("--out")
    s.set_defaults(func=_cmd_lift)

    s = sub.add_parser("matrices", help="export neighborhood matrices as sparse triplets")
    s.add_argument("--cc", required=True)
    s.add_argument("--which", required=True, action="append", help="selector such as B0,1 or A_{1,1}; repeatable")
    s.add_argument("--normalize", action="store_true")
    s.add_argument("--out")
    s.set_defaults(func=_cmd_matrices)

    s = sub.add_parser("pool", help="mapper-on-graphs pooling")
    s.add_argument("--mog", action="store_true")
    s.add_argument("--graph", required=True)
    s.add_argument("--intervals", type=int, default=2)
    s.add_argument("--overlap", type=float, default=0.3)
    s.add_argument("--scalar", choices=["agd", "file"], default="agd")
    s.add_argument("--scalar-file")
    s.add_argument("--normalize-scalar", action="store_true")
    s.add_argument("--features", help="0-cochain file (default: a column of ones)")
    s.add_argument("--agg", choices=["sum", "mean", "max"], default="sum")
    s.add_argument("--out")
    s.set_defaults(func=_cmd_pool)

    s = sub.add_parser("train", help="train a tensor diagram on the synthetic classification task")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.set_defaults(func=_cmd_train)

    s = sub.add_parser("reduce-hasse", help="check a diagram against its augmented-Hasse reduction")
    s.add_argument("--cc", required=True)
    s.add_argument("--diagram", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--dot")
    s.set_defaults(func=_cmd_reduce_hasse)

    s = sub.add_parser("features", help="mesh features or a kNN graph")
    s.add_argument("--mesh")
    s.add_argument("--points")
    s.add_argument("--k", type=int, default=7)
    s.add_argument("--out-prefix")
    s.set_defaults(func=_cmd_features)
    return p


def main(argv: list[str] | None = None) -> int:
    try:
        args = _parser().parse_args(argv)
        if not getattr(args, "func", None):
            raise ValidationError("missing subcommand")
        return args.func(args)
    except ValidationError as exc:
        print(f"ccnet: error: {exc}", file=sys.stderr)
        return 2
    except (FileNotFoundError, IsADirectoryError) as exc:
        print(f"ccnet: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"ccnet: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
