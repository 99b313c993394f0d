"""Input validation helpers shared by the estimator layer."""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .graphcore import Graph


def check_graph(g) -> Graph:
    if not isinstance(g, Graph):
        raise TypeError(f"expected a gcnlab Graph, got {type(g).__name__}")
    return g


def check_features(x, n: int):
    """Features as float64, sparse CSR or dense, with n rows."""
    if sp.issparse(x):
        x = x.tocsr().astype(np.float64)
    else:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2:
            raise ValueError(f"features must be 2-D, got shape {x.shape}")
    if x.shape[0] != n:
        raise ValueError(f"features have {x.shape[0]} rows, graph has {n} vertices")
    if not sp.issparse(x) and not np.isfinite(x).all():
        raise ValueError("features contain non-finite values")
    return x


def check_partial_labels(y, n: int) -> np.ndarray:
    """Transductive label vector: one entry per vertex, -1 marks unlabeled."""
    y = np.asarray(y, dtype=np.int64).ravel()
    if len(y) != n:
        raise ValueError(f"y has {len(y)} entries, graph has {n} vertices")
    if y.max(initial=-1) < 0:
        raise ValueError("y has no labeled vertices")
    return y


def check_indices(idx, n: int) -> np.ndarray:
    idx = np.asarray(idx, dtype=np.int64).ravel()
    if len(idx) and (idx.min() < 0 or idx.max() >= n):
        raise ValueError("vertex indices out of range")
    return idx
