import os
import pickle
from pathlib import Path

import numpy as np
import pytest
import scipy.sparse as sp

from planetoid_converter import ConverterError, convert, load_bundle
from planetoid_converter.cli import main as cli_main


def one_hot(classes, width):
    out = np.zeros((len(classes), width))
    out[np.arange(len(classes)), classes] = 1.0
    return out


def write_bundle(directory: Path, name: str, *, test_index, tx, ty, graph):
    """Six allx vertices plus a test block, pickled like the upstream files."""
    rng = np.random.default_rng(0)
    allx = sp.csr_matrix(np.where(rng.random((6, 5)) < 0.4, 1.0, 0.0))
    ally = one_hot([0, 1, 2, 0, 1, 2], 3)
    objects = {
        "x": allx[:2].copy(),
        "y": ally[:2].copy(),
        "tx": sp.csr_matrix(tx),
        "ty": np.asarray(ty),
        "allx": allx,
        "ally": ally,
        "graph": graph,
    }
    directory.mkdir(parents=True, exist_ok=True)
    for suffix, obj in objects.items():
        with open(directory / f"ind.{name}.{suffix}", "wb") as f:
            pickle.dump(obj, f)
    (directory / f"ind.{name}.test.index").write_text(
        "\n".join(str(i) for i in test_index) + "\n"
    )
    return directory


@pytest.fixture
def mini_bundle(tmp_path):
    # tx row i carries value i+1 in column i, so permutations are visible
    tx = np.zeros((3, 5))
    for i in range(3):
        tx[i, i] = float(i + 1)
    ty = one_hot([2, 0, 1], 3)
    graph = {
        0: [1, 2],
        1: [0, 3],
        2: [0, 0],  # duplicate listing, must coalesce
        3: [1, 3, 6],  # self-loop, must drop
        4: [5],
        5: [4],
        6: [3, 7],
        7: [6, 8],
        8: [7],
    }
    return write_bundle(tmp_path / "up", "cora", test_index=[8, 6, 7], tx=tx, ty=ty, graph=graph)


def read(path):
    return Path(path).read_text()


class TestConvert:
    def test_vertex_order_follows_test_index(self, mini_bundle, tmp_path):
        out = convert(mini_bundle, "cora", tmp_path / "out")
        mtx = read(out / "features.mtx").splitlines()
        entries = {tuple(line.split()[:2]): line.split()[2] for line in mtx[2:]}
        # test.index line i names the vertex holding tx row i
        assert entries[("9", "1")] == "1.0"  # vertex 8 <- tx row 0
        assert entries[("7", "2")] == "2.0"  # vertex 6 <- tx row 1
        assert entries[("8", "3")] == "3.0"  # vertex 7 <- tx row 2
        labels = [int(s) for s in read(out / "labels.txt").split()]
        assert labels[8] == 2 and labels[6] == 0 and labels[7] == 1
        assert labels[:6] == [0, 1, 2, 0, 1, 2]

    def test_edges_unique_sorted_no_self_loops(self, mini_bundle, tmp_path, capsys):
        out = convert(mini_bundle, "cora", tmp_path / "out")
        lines = read(out / "edges.txt").splitlines()
        pairs = [tuple(int(t) for t in line.split()) for line in lines]
        assert pairs == sorted(set(pairs))
        assert all(u < v for u, v in pairs)
        assert (0, 2) in pairs and (3, 3) not in pairs
        err = capsys.readouterr().err
        assert "self-loops" in err

    def test_meta_counts(self, mini_bundle, tmp_path):
        import json

        out = convert(mini_bundle, "cora", tmp_path / "out")
        meta = json.loads(read(out / "meta.json"))
        assert meta["n"] == 9
        assert meta["classes"] == 3
        assert meta["features"] == 5
        assert meta["edges"] == len(read(out / "edges.txt").splitlines())

    def test_repeat_conversion_byte_identical(self, mini_bundle, tmp_path):
        out1 = convert(mini_bundle, "cora", tmp_path / "a")
        out2 = convert(mini_bundle, "cora", tmp_path / "b")
        for fname in ("meta.json", "edges.txt", "features.mtx", "labels.txt", "test_index.txt"):
            assert read(out1 / fname) == read(out2 / fname)

    def test_round_trip_loads_in_gcnlab(self, mini_bundle, tmp_path):
        gcnlab_data = pytest.importorskip("gcnlab.data")
        out = convert(mini_bundle, "cora", tmp_path / "out")
        ds = gcnlab_data.load_dataset(out)
        assert ds.n == 9
        assert gcnlab_data.validate_stats(ds)
        assert sorted(ds.canonical_test_indices.tolist()) == [6, 7, 8]

    def test_citeseer_style_gap_zero_fills(self, tmp_path, capsys):
        tx = np.zeros((2, 5))
        tx[0, 0] = 1.0
        tx[1, 1] = 1.0
        ty = one_hot([1, 2], 3)
        graph = {0: [1], 1: [0], 2: [3], 3: [2], 4: [5], 5: [4], 6: [7], 7: [6], 8: [6]}
        bundle = write_bundle(
            tmp_path / "up", "citeseer", test_index=[6, 8], tx=tx, ty=ty, graph=graph
        )
        out = convert(bundle, "citeseer", tmp_path / "out")
        assert "filled with zero" in capsys.readouterr().err
        labels = [int(s) for s in read(out / "labels.txt").split()]
        assert len(labels) == 9
        assert labels[7] == 0  # the gap vertex
        mtx_rows = {line.split()[0] for line in read(out / "features.mtx").splitlines()[2:]}
        assert "8" not in mtx_rows  # vertex 7 (1-based row 8) has no features
        # canonical test index lists only the real test vertices
        assert read(out / "test_index.txt").split() == ["6", "8"]

    def test_missing_file_raises(self, mini_bundle, tmp_path):
        os.remove(mini_bundle / "ind.cora.allx")
        with pytest.raises(ConverterError, match="missing"):
            load_bundle(mini_bundle, "cora")

    def test_inconsistent_test_block_raises(self, mini_bundle):
        (mini_bundle / "ind.cora.test.index").write_text("8\n6\n")
        with pytest.raises(ConverterError, match="test"):
            load_bundle(mini_bundle, "cora")

    def test_unknown_name_rejected(self, mini_bundle, tmp_path):
        with pytest.raises(ConverterError, match="unknown dataset"):
            convert(mini_bundle, "karate", tmp_path / "out")

    def test_cli(self, mini_bundle, tmp_path, capsys):
        rc = cli_main(
            ["--in", str(mini_bundle), "--name", "cora", "--out", str(tmp_path / "out")]
        )
        assert rc == 0
        assert (tmp_path / "out" / "meta.json").is_file()


REAL_STATS = {"cora": (2708, 7, 1433), "citeseer": (3327, 6, 3703), "pubmed": (19717, 3, 500)}


@pytest.mark.parametrize("name", sorted(REAL_STATS))
def test_real_bundles_match_benchmark_statistics(name, tmp_path):
    """Requires the upstream ind.* files under $PLANETOID_DATA."""
    root = os.environ.get("PLANETOID_DATA")
    if not root or not (Path(root) / f"ind.{name}.x").is_file():
        pytest.skip(
            f"upstream Planetoid files for {name} not available "
            "(set PLANETOID_DATA to the directory with ind.* files)"
        )
    gcnlab_data = pytest.importorskip("gcnlab.data")
    out = convert(root, name, tmp_path / name)
    ds = gcnlab_data.load_dataset(out)
    nodes, classes, features = REAL_STATS[name]
    assert ds.n == nodes
    assert ds.class_count == classes
    assert ds.features.shape[1] == features
    gcnlab_data.validate_stats(ds)
    out2 = convert(root, name, tmp_path / f"{name}_again")
    for fname in ("meta.json", "edges.txt", "features.mtx", "labels.txt", "test_index.txt"):
        assert (out / fname).read_text() == (out2 / fname).read_text()
