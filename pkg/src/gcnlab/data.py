"""Portable dataset directories, label splits, and the ground-truth access guard.

A dataset directory is plain text, bit-exact:

    meta.json       {"name", "n", "edges", "classes", "features"}
    edges.txt       one "u v" per line, 0-based, u < v, weight 1 implied
    features.mtx    MatrixMarket coordinate, 1-based indices, real values
    labels.txt      line i = class id of vertex i
    test_index.txt  one vertex id per line (canonical benchmark test set)

Training code never touches ground-truth labels directly: splits carry the
(vertex, class) pairs they are allowed to use, and anything else goes
through :class:`GuardedLabels`, which aborts on out-of-split reads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from . import graphcore
from .graphcore import Graph


class LabelLeakError(RuntimeError):
    """Raised when code reads a ground-truth label outside its allowed set."""


class DatasetError(ValueError):
    """Malformed or inconsistent dataset directory."""


@dataclass(frozen=True)
class Dataset:
    graph: Graph
    features: sp.csr_matrix
    labels: np.ndarray
    class_count: int
    canonical_test_indices: np.ndarray
    name: str

    @property
    def n(self) -> int:
        return self.graph.n


@dataclass(frozen=True)
class LabelSplit:
    """The partial labeling for one run: train pairs, validation and test vertex sets.

    ``train_classes[i]`` is the label *assigned* to ``train_idx[i]`` — for
    pseudo-labeled vertices it need not equal the ground truth. Freshly
    sampled splits are pairwise disjoint; once pseudo-labels are appended
    (``pseudo_expanded``), training vertices may coincide with evaluation
    vertices, because a pseudo-label is a prediction, not a ground-truth
    read — the :class:`GuardedLabels` instrumentation still forbids the
    latter.
    """

    train_idx: np.ndarray
    train_classes: np.ndarray
    validation: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    test: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    seed: int | None = None
    pseudo_expanded: bool = False

    def __post_init__(self):
        for name in ("train_idx", "train_classes", "validation", "test"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.int64))
        if self.train_idx.shape != self.train_classes.shape:
            raise ValueError("train_idx and train_classes must be parallel")
        if len(np.unique(self.train_idx)) != len(self.train_idx):
            raise ValueError("duplicate vertices in training set")
        t, v, s = set(self.train_idx), set(self.validation), set(self.test)
        if v & s:
            raise ValueError("validation and test sets must be disjoint")
        if not self.pseudo_expanded and (t & v or t & s):
            raise ValueError("train/validation/test sets must be pairwise disjoint")

    @property
    def n_train(self) -> int:
        return len(self.train_idx)

    def n_classes(self) -> int:
        return int(self.train_classes.max()) + 1 if len(self.train_classes) else 0

    def class_members(self, k: int) -> np.ndarray:
        return self.train_idx[self.train_classes == k]

    def with_added(self, idx: np.ndarray, classes: np.ndarray) -> "LabelSplit":
        """A new split with extra (vertex, class) pairs appended to train."""
        return replace(
            self,
            train_idx=np.concatenate([self.train_idx, np.asarray(idx, dtype=np.int64)]),
            train_classes=np.concatenate(
                [self.train_classes, np.asarray(classes, dtype=np.int64)]
            ),
            pseudo_expanded=True,
        )


class GuardedLabels:
    """Ground-truth labels restricted to an allowed vertex set.

    Reads outside the allowed set raise :class:`LabelLeakError`; this is the
    instrumentation that keeps training strategies honest about what they
    observe.
    """

    def __init__(self, labels: np.ndarray, allowed: np.ndarray):
        self._labels = np.asarray(labels, dtype=np.int64)
        self._allowed = frozenset(int(i) for i in np.asarray(allowed).ravel())

    def take(self, idx) -> np.ndarray:
        idx = np.asarray(idx, dtype=np.int64).ravel()
        for i in idx:
            if int(i) not in self._allowed:
                raise LabelLeakError(
                    f"read of ground-truth label {int(i)} outside the allowed set"
                )
        out = self._labels[idx]
        if np.any(out < 0):
            raise LabelLeakError("ground truth unavailable for an allowed vertex")
        return out


def _read_edges(path: Path, n: int) -> list[tuple[int, int, float]]:
    edges = []
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            try:
                if len(parts) != 2:
                    raise ValueError
                u, v = int(parts[0]), int(parts[1])
            except ValueError:
                raise DatasetError(f"{path.name}:{lineno}: malformed edge line {line!r}")
            if not u < v:
                raise DatasetError(f"{path.name}:{lineno}: expected u < v, got {u} {v}")
            edges.append((u, v, 1.0))
    return edges


def _read_mtx(path: Path) -> sp.csr_matrix:
    with open(path) as f:
        header = f.readline()
        if not header.lower().startswith("%%matrixmarket matrix coordinate real"):
            raise DatasetError(f"{path.name}:1: not a MatrixMarket coordinate real file")
        lineno = 1
        line = ""
        while True:
            line = f.readline()
            lineno += 1
            if line == "":
                raise DatasetError(f"{path.name}:{lineno}: missing size line")
            if not line.startswith("%"):
                break
        try:
            rows, cols, nnz = (int(s) for s in line.split())
        except ValueError:
            raise DatasetError(f"{path.name}:{lineno}: malformed size line {line!r}")
        r = np.empty(nnz, dtype=np.int64)
        c = np.empty(nnz, dtype=np.int64)
        vals = np.empty(nnz, dtype=np.float64)
        for k in range(nnz):
            line = f.readline()
            lineno += 1
            parts = line.split()
            try:
                r[k], c[k], vals[k] = int(parts[0]), int(parts[1]), float(parts[2])
            except (ValueError, IndexError):
                raise DatasetError(f"{path.name}:{lineno}: malformed entry {line!r}")
        if np.any(r < 1) or np.any(r > rows) or np.any(c < 1) or np.any(c > cols):
            raise DatasetError(f"{path.name}: index out of declared bounds")
    m = sp.csr_matrix((vals, (r - 1, c - 1)), shape=(rows, cols))
    m.sort_indices()
    return m


def _read_int_lines(path: Path) -> np.ndarray:
    out = []
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(int(line))
            except ValueError:
                raise DatasetError(f"{path.name}:{lineno}: expected an integer, got {line!r}")
    return np.asarray(out, dtype=np.int64)


def load_dataset(directory) -> Dataset:
    """Load and validate one portable dataset directory."""
    directory = Path(directory)
    for fname in ("meta.json", "edges.txt", "features.mtx", "labels.txt", "test_index.txt"):
        if not (directory / fname).is_file():
            raise DatasetError(f"missing file {fname} in {directory}")
    meta = json.loads((directory / "meta.json").read_text())
    n = int(meta["n"])
    graph = graphcore.build_graph(n, _read_edges(directory / "edges.txt", n))
    features = _read_mtx(directory / "features.mtx")
    labels = _read_int_lines(directory / "labels.txt")
    test_idx = _read_int_lines(directory / "test_index.txt")
    class_count = int(meta["classes"])
    if len(labels) != n:
        raise DatasetError(f"labels.txt has {len(labels)} lines, expected n={n}")
    if len(labels) and (labels.min() < 0 or labels.max() >= class_count):
        raise DatasetError("labels outside 0..classes-1")
    if features.shape[0] != n:
        raise DatasetError(f"features.mtx has {features.shape[0]} rows, expected n={n}")
    if len(test_idx) and (test_idx.min() < 0 or test_idx.max() >= n):
        raise DatasetError("test_index.txt contains out-of-range vertices")
    ds = Dataset(
        graph=graph,
        features=features,
        labels=labels,
        class_count=class_count,
        canonical_test_indices=test_idx,
        name=str(meta.get("name", directory.name)),
    )
    validate_stats(ds, meta)
    return ds


def validate_stats(ds: Dataset, meta: dict | None = None) -> list[str]:
    """Assert counts against meta.json; return informational report lines."""
    checks = {
        "n": (ds.n, None),
        "edges": (ds.graph.n_edges, None),
        "classes": (ds.class_count, None),
        "features": (ds.features.shape[1], None),
    }
    if meta is not None:
        for key, (actual, _) in checks.items():
            expected = int(meta[key])
            if actual != expected:
                raise DatasetError(
                    f"{ds.name}: {key} mismatch: meta.json says {expected}, data has {actual}"
                )
    report = []
    degrees = graphcore.degree_vector(ds.graph)
    isolated = np.flatnonzero(degrees == 0)
    if len(isolated):
        report.append(f"{len(isolated)} isolated vertices")
    _, k = graphcore.connected_components(ds.graph)
    report.append(f"{k} connected components")
    missing = [c for c in range(ds.class_count) if not np.any(ds.labels == c)]
    if missing:
        raise DatasetError(f"{ds.name}: classes never used: {missing}")
    return report


def write_dataset(ds: Dataset, directory) -> None:
    """Write a dataset as a portable directory (inverse of :func:`load_dataset`).

    Output is byte-deterministic: edges sorted u < v, features in row-major
    coordinate order, floats as shortest round-trip decimals.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    meta = {
        "name": ds.name,
        "n": ds.n,
        "edges": ds.graph.n_edges,
        "classes": ds.class_count,
        "features": int(ds.features.shape[1]),
    }
    (directory / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    coo = ds.graph.adjacency.tocoo()
    pairs = sorted({(int(r), int(c)) for r, c in zip(coo.row, coo.col) if r < c})
    with open(directory / "edges.txt", "w") as f:
        for u, v in pairs:
            f.write(f"{u} {v}\n")
    feats = ds.features.tocoo()
    order = np.lexsort((feats.col, feats.row))
    with open(directory / "features.mtx", "w") as f:
        f.write("%%MatrixMarket matrix coordinate real general\n")
        f.write(f"{feats.shape[0]} {feats.shape[1]} {feats.nnz}\n")
        for i in order:
            f.write(f"{feats.row[i] + 1} {feats.col[i] + 1} {repr(float(feats.data[i]))}\n")
    with open(directory / "labels.txt", "w") as f:
        for c in ds.labels:
            f.write(f"{int(c)}\n")
    with open(directory / "test_index.txt", "w") as f:
        for v in ds.canonical_test_indices:
            f.write(f"{int(v)}\n")


def sample_split(
    ds: Dataset,
    per_class: int | None = None,
    label_rate: float | None = None,
    validation_size: int = 0,
    test_size: int = 1000,
    seed: int = 0,
) -> LabelSplit:
    """Randomly split labels into train / validation / test vertex sets.

    Exactly one of ``per_class`` / ``label_rate`` selects the training set:
    ``per_class`` draws that many vertices from every class, ``label_rate``
    draws round(rate * n) vertices uniformly, resampling (bounded) until
    every class is represented. Per-class splits keep the canonical test
    index when its size matches ``test_size``; rate splits sample the test
    set fresh. Train is drawn before validation, so the training set for a
    given seed does not depend on ``validation_size``.
    """
    if (per_class is None) == (label_rate is None):
        raise ValueError("specify exactly one of per_class / label_rate")
    rng = np.random.default_rng(seed)
    n = ds.n
    use_canonical = (
        per_class is not None
        and len(ds.canonical_test_indices) == test_size
        and test_size > 0
    )
    blocked = set(ds.canonical_test_indices.tolist()) if use_canonical else set()

    if per_class is not None:
        train = []
        for k in range(ds.class_count):
            pool = np.flatnonzero(ds.labels == k)
            pool = pool[~np.isin(pool, list(blocked))] if blocked else pool
            if len(pool) < per_class:
                raise ValueError(f"class {k} has only {len(pool)} eligible vertices")
            train.append(rng.choice(pool, size=per_class, replace=False))
        train_idx = np.concatenate(train)
    else:
        n_train = int(np.floor(label_rate * n + 0.5))
        if n_train < ds.class_count:
            raise ValueError(
                f"label_rate {label_rate} yields {n_train} labels, fewer than "
                f"{ds.class_count} classes"
            )
        pool = np.arange(n)
        for attempt in range(1000):
            train_idx = rng.choice(pool, size=n_train, replace=False)
            if len(np.unique(ds.labels[train_idx])) == ds.class_count:
                break
        else:
            raise ValueError(
                f"could not cover all {ds.class_count} classes with "
                f"{n_train} labels in 1000 attempts"
            )
    train_idx = np.sort(train_idx)

    remaining = np.setdiff1d(np.arange(n), train_idx)
    if use_canonical:
        test = np.sort(ds.canonical_test_indices)
        val_pool = np.setdiff1d(remaining, test)
    else:
        val_pool = remaining
    if validation_size:
        if validation_size > len(val_pool):
            raise ValueError(f"validation_size {validation_size} infeasible")
        validation = np.sort(rng.choice(val_pool, size=validation_size, replace=False))
    else:
        validation = np.empty(0, dtype=np.int64)

    if not use_canonical:
        if test_size:
            test_pool = np.setdiff1d(remaining, validation)
            if test_size > len(test_pool):
                raise ValueError(
                    f"test_size {test_size} exceeds {len(test_pool)} leftover vertices"
                )
            test = np.sort(rng.choice(test_pool, size=test_size, replace=False))
        else:
            test = np.empty(0, dtype=np.int64)

    return LabelSplit(
        train_idx=train_idx,
        train_classes=ds.labels[train_idx],
        validation=validation,
        test=test,
        seed=seed,
    )
