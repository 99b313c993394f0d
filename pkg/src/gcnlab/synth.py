"""Planted-partition datasets for tests and demos.

Real citation benchmarks are large and externally sourced; these generators
produce small graphs with the same shape of signal — dense within-class
wiring, sparse across, bag-of-words features with class-indicative columns
— so pipelines can be exercised end to end at desk scale.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from . import graphcore
from .data import Dataset


def planted_partition_dataset(
    n_per_class: int = 60,
    n_classes: int = 3,
    p_in: float = 0.08,
    p_out: float = 0.004,
    n_features: int = 30,
    signal: float = 0.4,
    noise: float = 0.02,
    seed: int = 0,
    name: str = "synthetic",
) -> Dataset:
    """A stochastic block model with class-correlated sparse 0/1 features.

    Each class owns ``n_features // n_classes`` signature columns; a vertex
    switches its own class's columns on with probability ``signal`` and any
    other column with probability ``noise``. Isolated vertices are wired to
    a random same-class neighbor so the graph stays usable for walks.
    """
    rng = np.random.default_rng(seed)
    n = n_per_class * n_classes
    labels = np.repeat(np.arange(n_classes), n_per_class)

    edges = []
    for u in range(n):
        for v in range(u + 1, n):
            p = p_in if labels[u] == labels[v] else p_out
            if rng.random() < p:
                edges.append((u, v, 1.0))
    linked = np.zeros(n, dtype=bool)
    for u, v, _ in edges:
        linked[u] = linked[v] = True
    for u in np.flatnonzero(~linked):
        same = np.flatnonzero((labels == labels[u]) & (np.arange(n) != u))
        v = int(rng.choice(same))
        edges.append((min(u, v), max(u, v), 1.0))
    graph = graphcore.build_graph(n, edges)

    per_class = max(1, n_features // n_classes)
    rows, cols = [], []
    for u in range(n):
        own = np.arange(labels[u] * per_class, min((labels[u] + 1) * per_class, n_features))
        for c in range(n_features):
            p = signal if c in own else noise
            if rng.random() < p:
                rows.append(u)
                cols.append(c)
    features = sp.csr_matrix(
        (np.ones(len(rows)), (rows, cols)), shape=(n, n_features)
    )

    return Dataset(
        graph=graph,
        features=features,
        labels=labels,
        class_count=n_classes,
        canonical_test_indices=np.empty(0, dtype=np.int64),
        name=name,
    )
