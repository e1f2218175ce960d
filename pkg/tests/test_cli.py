import subprocess
import sys

import numpy as np
import pytest

from genmat import files
from genmat.cli import build_parser, main


@pytest.fixture
def data(tmp_path):
    tree, counts = tmp_path / "tree.csv", tmp_path / "counts.csv"
    assert main(["gen", "--kind", "random", "--leaves", "200", "--seed", "5",
                 "--out-tree", str(tree), "--out-counts", str(counts)]) == 0
    return tmp_path, tree, counts


def test_gen_complete(tmp_path, capsys):
    t, c = tmp_path / "t.csv", tmp_path / "c.csv"
    assert main(["gen", "--kind", "complete", "--height", "4", "--fanout", "3", "--lambda", "10",
                 "--seed", "1", "--out-tree", str(t), "--out-counts", str(c)]) == 0
    tree = files.load_tree(t)
    assert tree.n == 40 and files.load_counts(c, tree).size == 27


def test_release_and_verify(data, capsys):
    tmp, tree, counts = data
    out = tmp / "rel.csv"
    assert main(["release", "--tree", str(tree), "--counts", str(counts), "--epsilon", "1",
                 "--seed", "3", "--out", str(out), "--oracle"]) == 0
    text = capsys.readouterr().out
    dev = float(text.split("oracle max deviation ")[1].split()[0])
    assert dev <= 1e-8
    assert (tmp / "rel.json").exists()
    assert main(["verify", "--release", str(out), "--tree", str(tree), "--tol", "1e-9"]) == 0
    assert main(["verify", "--release", str(out), "--tree", str(tree), "--tol", "1e-9",
                 "--column", "noisy"]) == 1


def test_no_sqrt_matches(data):
    tmp, tree, counts = data
    a, b = tmp / "a.csv", tmp / "b.csv"
    base = ["release", "--tree", str(tree), "--counts", str(counts), "--epsilon", "0.5", "--seed", "8"]
    assert main(base + ["--out", str(a)]) == 0
    assert main(base + ["--out", str(b), "--no-sqrt"]) == 0
    ra, rb = files.load_release(a), files.load_release(b)
    np.testing.assert_allclose(ra["consistent"], rb["consistent"], atol=1e-9)


def test_release_deterministic(data):
    tmp, tree, counts = data
    outs = []
    for name in ("x.csv", "y.csv"):
        out = tmp / name
        main(["release", "--tree", str(tree), "--counts", str(counts), "--epsilon", "1", "--seed", "4",
              "--out", str(out)])
        outs.append(out)
    assert outs[0].read_bytes() == outs[1].read_bytes()
    assert outs[0].with_suffix(".json").read_bytes() == outs[1].with_suffix(".json").read_bytes()


@pytest.mark.parametrize("kind", ["adjacency", "laplacian", "distance", "ancestral"])
def test_convert(tmp_path, kind):
    t = tmp_path / "t.csv"
    t.write_text("id,parent,node_weight,edge_weight\nA,,,\nB,A,,\nC,A,,\nD,B,,\nE,B,,\n")
    out = tmp_path / "o.csv"
    assert main(["convert", "--tree", str(t), "--to", kind, "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    width = 3 if kind == "ancestral" else 5
    assert len(lines) == width + 1
    assert len(lines[0].split(",")) == width


def test_props(tmp_path):
    t = tmp_path / "t.csv"
    t.write_text("id,parent,node_weight,edge_weight\nA,,,\nB,A,,\nC,A,,\nD,B,,\nE,B,,\n")
    out = tmp_path / "p.csv"
    assert main(["props", "--tree", str(t), "--out", str(out)]) == 0
    assert out.read_text().splitlines() == [
        "id,children,subtree_size,depth", "A,2,5,1", "B,2,3,2", "C,0,1,2", "D,0,1,3", "E,0,1,3"]


def test_bench(tmp_path):
    out = tmp_path / "b.csv"
    assert main(["bench", "--heights", "5,6", "--repeats", "1", "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "height,n,construct_s,release_s"
    assert [l.split(",")[1] for l in lines[1:]] == ["31", "63"]


def test_data_error_exit_code(tmp_path, capsys):
    t = tmp_path / "t.csv"
    t.write_text("id,parent,node_weight,edge_weight\nA,,,\nB,Z,,\n")
    assert main(["props", "--tree", str(t), "--out", str(tmp_path / "p.csv")]) == 1
    assert "unknown parent" in capsys.readouterr().err
    assert main(["props", "--tree", str(tmp_path / "missing.csv"), "--out", "x"]) == 1


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        main(["release", "--tree", "x"])
    assert exc.value.code == 2


@pytest.mark.parametrize("cmd", ["gen", "release", "verify", "convert", "props", "bench"])
def test_help_on_every_subcommand(cmd):
    with pytest.raises(SystemExit) as exc:
        build_parser().parse_args([cmd, "--help"])
    assert exc.value.code == 0


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "genmat", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "release" in res.stdout
