"""Reassemble the eight ind.{name}.* files into one canonical vertex order.

The upstream bundles store features in three pickled blocks (x: labeled
training rows, allx: training + unlabeled rows, tx: test rows) plus a
test.index file giving each tx row's position in the full graph ordering.
Vertices 0..len(allx)-1 are the allx rows; the test block fills the index
range that test.index spans, and its rows are permuted so that the file's
i-th index receives tx row i. CiteSeer's test.index famously skips some
positions: those vertices get zero features and class 0 (reported), which
is the reference preprocessing convention.

Everything is written deterministically, so repeated conversion is
byte-identical.
"""

from __future__ import annotations

import json
import pickle
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

DATASET_NAMES = ("cora", "citeseer", "pubmed")
SUFFIXES = ("x", "y", "tx", "ty", "allx", "ally", "graph", "test.index")


class ConverterError(ValueError):
    """Missing or internally inconsistent upstream bundle."""


@dataclass
class PlanetoidBundle:
    x: sp.csr_matrix
    y: np.ndarray
    tx: sp.csr_matrix
    ty: np.ndarray
    allx: sp.csr_matrix
    ally: np.ndarray
    graph: dict
    test_index: np.ndarray


def _load_pickle(path: Path):
    with open(path, "rb") as f:
        # upstream files were written by python 2
        return pickle.load(f, encoding="latin1")


def load_bundle(input_dir, name: str) -> PlanetoidBundle:
    input_dir = Path(input_dir)
    paths = {s: input_dir / f"ind.{name}.{s}" for s in SUFFIXES}
    missing = [p.name for p in paths.values() if not p.is_file()]
    if missing:
        raise ConverterError(f"missing upstream files: {', '.join(missing)}")

    objects = {s: _load_pickle(paths[s]) for s in SUFFIXES if s not in ("test.index",)}
    test_index = np.array(
        [int(line) for line in paths["test.index"].read_text().split()], dtype=np.int64
    )
    bundle = PlanetoidBundle(
        x=sp.csr_matrix(objects["x"]),
        y=np.asarray(objects["y"]),
        tx=sp.csr_matrix(objects["tx"]),
        ty=np.asarray(objects["ty"]),
        allx=sp.csr_matrix(objects["allx"]),
        ally=np.asarray(objects["ally"]),
        graph=dict(objects["graph"]),
        test_index=test_index,
    )
    _validate_bundle(bundle, name)
    return bundle


def _validate_bundle(b: PlanetoidBundle, name: str) -> None:
    widths = {b.x.shape[1], b.tx.shape[1], b.allx.shape[1]}
    if len(widths) != 1:
        raise ConverterError(f"feature widths disagree across x/tx/allx: {sorted(widths)}")
    classes = {b.y.shape[1], b.ty.shape[1], b.ally.shape[1]}
    if len(classes) != 1:
        raise ConverterError(f"class widths disagree across y/ty/ally: {sorted(classes)}")
    if b.tx.shape[0] != len(b.test_index) or b.ty.shape[0] != len(b.test_index):
        raise ConverterError(
            f"test block has {b.tx.shape[0]} rows but test.index lists {len(b.test_index)}"
        )
    if b.allx.shape[0] != b.ally.shape[0]:
        raise ConverterError("allx and ally row counts disagree")
    if b.test_index.min() != b.allx.shape[0]:
        raise ConverterError(
            f"test block must start right after allx (at {b.allx.shape[0]}), "
            f"but test.index starts at {b.test_index.min()}"
        )


def _assemble(b: PlanetoidBundle) -> tuple[sp.csr_matrix, np.ndarray, int, int]:
    """Full-order features and class ids; returns (features, labels, n, n_zero_filled)."""
    order = np.sort(b.test_index)
    full_range = np.arange(order.min(), order.max() + 1)
    n = b.allx.shape[0] + len(full_range)
    n_classes = b.ally.shape[1]

    tx, ty = b.tx, b.ty
    zero_filled = len(full_range) - len(b.test_index)
    if zero_filled:
        # gaps in test.index: pad the block with zero rows (reference convention)
        coo = b.tx.tocoo()
        row_map = order - order.min()
        tx = sp.csr_matrix(
            (coo.data, (row_map[coo.row], coo.col)),
            shape=(len(full_range), b.tx.shape[1]),
        )
        ty_ext = np.zeros((len(full_range), n_classes))
        ty_ext[row_map] = b.ty
        ty = ty_ext

    # the test block sits right after allx, so stacked row order[i] holds tx
    # row i; src maps every output vertex to its stacked source row
    stacked = sp.vstack([b.allx.tocsr(), tx]).tocsr()
    src = np.arange(n)
    src[b.test_index] = order
    features = stacked[src].tocsr()
    features.sort_indices()

    onehot = np.vstack([b.ally, ty])[src]
    labels = np.argmax(onehot, axis=1).astype(np.int64)  # all-zero rows fall to class 0
    return features, labels, n, zero_filled


def _edges_from_graph_dict(graph: dict, n: int) -> tuple[list[tuple[int, int]], int, int]:
    """Unique undirected u < v pairs; returns (pairs, n_self_loops, n_duplicates)."""
    pairs = set()
    self_loops = 0
    listed = 0
    for u, neighbors in graph.items():
        u = int(u)
        if not (0 <= u < n):
            raise ConverterError(f"graph dict vertex {u} out of range for n={n}")
        for v in neighbors:
            v = int(v)
            if not (0 <= v < n):
                raise ConverterError(f"graph dict neighbor {v} out of range for n={n}")
            if u == v:
                self_loops += 1
                continue
            listed += 1
            pairs.add((min(u, v), max(u, v)))
    # every listed direction counted; duplicates = listings beyond the 2 per pair
    duplicates = max(0, listed - 2 * len(pairs))
    return sorted(pairs), self_loops, duplicates


PAPER_TABLE = {
    # nodes, edges, classes, features as printed in the benchmark literature
    "cora": (2708, 5429, 7, 1433),
    "citeseer": (3327, 4732, 6, 3703),
    "pubmed": (19717, 44338, 3, 500),
}


def convert(input_dir, name: str, output_dir) -> Path:
    """Convert one bundle; returns the output dataset directory."""
    if name not in DATASET_NAMES:
        raise ConverterError(f"unknown dataset {name!r}; expected one of {DATASET_NAMES}")
    bundle = load_bundle(input_dir, name)
    features, labels, n, zero_filled = _assemble(bundle)
    pairs, self_loops, duplicates = _edges_from_graph_dict(bundle.graph, n)
    if zero_filled:
        print(
            f"{name}: {zero_filled} test positions missing from test.index; "
            "filled with zero features and class 0",
            file=sys.stderr,
        )
    if self_loops or duplicates:
        print(
            f"{name}: dropped {self_loops} self-loops, coalesced {duplicates} duplicate listings",
            file=sys.stderr,
        )
    expected = PAPER_TABLE.get(name)
    if expected and expected[1] != len(pairs):
        print(
            f"{name}: coalesced edge count {len(pairs)} differs from the "
            f"commonly cited {expected[1]}; meta.json records the actual count",
            file=sys.stderr,
        )

    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    meta = {
        "name": name,
        "n": n,
        "edges": len(pairs),
        "classes": int(bundle.ally.shape[1]),
        "features": int(features.shape[1]),
    }
    (out / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    with open(out / "edges.txt", "w") as f:
        for u, v in pairs:
            f.write(f"{u} {v}\n")
    coo = features.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(out / "features.mtx", "w") as f:
        f.write("%%MatrixMarket matrix coordinate real general\n")
        f.write(f"{coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
        for i in order:
            f.write(f"{coo.row[i] + 1} {coo.col[i] + 1} {repr(float(coo.data[i]))}\n")
    with open(out / "labels.txt", "w") as f:
        for c in labels:
            f.write(f"{int(c)}\n")
    with open(out / "test_index.txt", "w") as f:
        for v in np.sort(bundle.test_index):
            f.write(f"{int(v)}\n")
    return out
