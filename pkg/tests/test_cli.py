import json

import numpy as np

from ccnet.cli import main
from ccnet.cochain import Cochain
from ccnet.io import load_cc, load_cochain, load_edge_list, load_triplets, save_cochain
from ccnet.mog import agd, make_cover, mog_pool, normalize_scalar

from conftest import FIXTURES, example_cc


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_matrices_example(capsys):
    code, out, _ = run(capsys, "matrices", "--cc", "example_cc.cc", "--which", "B0,1")
    assert code == 0
    assert out.splitlines() == ["3 1 2", "0 0 1", "1 0 1"]


def test_matrices_multiple_and_file(capsys, tmp_path):
    code, out, _ = run(capsys, "matrices", "--cc", "example_cc.cc", "--which", "A_{0,1}", "--which", "B_{1,2}")
    assert code == 0 and "# A_{0,1}" in out and "# B_{1,2}" in out
    target = tmp_path / "b.txt"
    assert run(capsys, "matrices", "--cc", "example_cc.cc", "--which", "B_{0,2}", "--out", target)[0] == 0
    np.testing.assert_array_equal(load_triplets(target).toarray(), [[1], [1], [1]])


def test_error_exit_codes(capsys):
    assert run(capsys, "frobnicate")[0] == 2
    assert run(capsys)[0] == 2
    code, _, err = run(capsys, "train", "--config", "missing.cfg")
    assert code == 2 and "missing.cfg" in err
    assert run(capsys, "matrices", "--cc", "example_cc.cc", "--which", "Z9")[0] == 2
    assert run(capsys, "lift", "--method", "nhop")[0] == 2
    assert run(capsys, "matrices", "--cc", "nope.cc", "--which", "B0,1")[0] == 2


def test_internal_error_exit_one(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"nodes": [{"id": "a", "rank": 0}], "edges": []}))
    code, _, err = run(capsys, "reduce-hasse", "--cc", "example_cc.cc", "--diagram", bad)
    assert code in (1, 2) and err


def test_lift_methods(capsys, tmp_path):
    target = tmp_path / "g.cc"
    code, _, err = run(capsys, "lift", "--method", "graph", "--input", "path6.edges", "--out", target)
    assert code == 0 and json.loads(err)["counts"] == {"0": 6, "1": 5}
    assert load_cc(target).count(1) == 5
    code, _, err = run(capsys, "lift", "--method", "nhop", "--input", "path6.edges", "--n", 2)
    assert code == 0 and json.loads(err)["counts"]["2"] == 6
    code, _, err = run(capsys, "lift", "--method", "lattice", "--height", 3, "--width", 3)
    assert code == 0 and json.loads(err)["counts"] == {"0": 9, "1": 12, "2": 4}
    code, _, err = run(capsys, "lift", "--method", "mesh", "--input", "tetrahedron.off")
    assert code == 0 and json.loads(err)["counts"] == {"0": 4, "1": 6, "2": 4}
    tri = tmp_path / "tri.edges"
    tri.write_text("0 1\n1 2\n0 2\n2 3\n")
    code, _, err = run(capsys, "lift", "--method", "loops", "--input", tri)
    assert code == 0 and json.loads(err)["counts"]["2"] == 1
    code, _, err = run(capsys, "lift", "--method", "coface", "--input", tri)
    assert code == 0
    walks = tmp_path / "walks.txt"
    walks.write_text("0 1 2 3\n")
    code, _, err = run(capsys, "lift", "--method", "paths", "--input", tri, "--cells", walks)
    assert code == 0 and json.loads(err)["counts"]["2"] == 1
    assert run(capsys, "lift", "--method", "paths", "--input", tri)[0] == 2


def test_pool_path_example(capsys, tmp_path):
    target = tmp_path / "pooled.txt"
    code, out, _ = run(capsys, "pool", "--mog", "--graph", "path6.edges", "--scalar", "file",
                       "--scalar-file", "path6_scalar.txt", "--intervals", 2, "--overlap", 0.3, "--out", target)
    assert code == 0
    s = json.loads(out)
    assert (s["components"], s["mog_edges"], s["new_cells"]) == (2, 1, 2)
    assert s["component_sets"] == [[0, 1, 2, 3], [2, 3, 4, 5]]
    np.testing.assert_array_equal(load_cochain(target).data, [[4.0], [4.0]])


def test_pool_matches_library(capsys, tmp_path):
    feats = tmp_path / "h.txt"
    H = np.arange(12.0).reshape(6, 2)
    save_cochain(Cochain(0, H), feats)
    target = tmp_path / "pooled.txt"
    code, _, _ = run(capsys, "pool", "--mog", "--graph", "path6.edges", "--features", feats,
                     "--intervals", 3, "--overlap", 0.4, "--agg", "mean", "--out", target)
    assert code == 0
    g = load_edge_list(FIXTURES / "path6.edges")
    _, ref = mog_pool(g, Cochain(0, H), normalize_scalar(agd(g)), make_cover(3, 0.4), "mean")
    np.testing.assert_array_equal(load_cochain(target).data, ref.data)
    assert run(capsys, "pool", "--graph", "path6.edges")[0] == 2


def test_reduce_hasse(capsys, tmp_path):
    dot = tmp_path / "h.dot"
    for diagram in ("conv_diagram.json", "attention_diagram.json"):
        code, out, _ = run(capsys, "reduce-hasse", "--cc", "example_cc.cc", "--diagram", diagram, "--dot", dot)
        assert code == 0 and json.loads(out)["equal"] is True
        assert dot.read_text().startswith("digraph")


def test_features(capsys, tmp_path):
    prefix = tmp_path / "tri"
    assert run(capsys, "features", "--mesh", "triangle.off", "--out-prefix", prefix)[0] == 0
    F = load_cochain(f"{prefix}.face.txt")
    assert F.rank == 2 and F.data.shape == (1, 7)
    assert load_cochain(f"{prefix}.edge.txt").data.shape == (3, 6)
    pts = tmp_path / "pts.txt"
    np.savetxt(pts, [[0.0], [1.0], [3.0]])
    code, out, _ = run(capsys, "features", "--points", pts, "--k", 1)
    assert code == 0 and "0 1" in out and "1 2" in out
    assert run(capsys, "features")[0] == 2


def test_train_small(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"dataset": {"per_class": 3, "test_per_class": 2}, "hidden": 4, "epochs": 3}))
    code, out, _ = run(capsys, "train", "--config", cfg)
    assert code == 0
    rep = json.loads(out)
    assert rep["epochs"] == 3 and len(rep["loss_history"]) == 3
    assert 0 <= rep["train_accuracy"] <= 1


def test_example_fixture_loads():
    assert load_cc(FIXTURES / "example_cc.cc").cells == example_cc().cells
