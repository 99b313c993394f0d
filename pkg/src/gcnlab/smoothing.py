"""Laplacian smoothing operators and numerical over-smoothing diagnostics.

One smoothing step is (I - gamma * D~^{-1} L~) X in the random-walk flavor,
or its symmetric twin; at gamma=1 the symmetric flavor coincides with the
renormalized graph convolution. Iterating the step drives features within
each connected component toward a common value (scaled by sqrt(degree) in
the symmetric case), which ``convergence_profile`` measures directly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources

import numpy as np
import scipy.sparse as sp

from . import graphcore
from .graphcore import Graph


@dataclass(frozen=True)
class SmoothingConfig:
    """gamma in (0,1] weighs neighbors against the vertex itself; kind is 'rw' or 'sym'."""

    gamma: float = 1.0
    kind: str = "rw"
    iterations: int = 1

    def __post_init__(self):
        if not (0.0 <= self.gamma <= 1.0):
            raise ValueError(f"gamma must lie in [0,1], got {self.gamma}")
        if self.kind not in ("rw", "sym"):
            raise ValueError(f"kind must be 'rw' or 'sym', got {self.kind!r}")
        if self.iterations < 0:
            raise ValueError("iterations must be nonnegative")


def smoother_operator(g: Graph, cfg: SmoothingConfig) -> sp.csr_matrix:
    """The one-step smoothing matrix (1-gamma) I + gamma * normalized(A+I).

    Self-loops are added internally; at gamma=1, kind='sym' this is exactly
    ``sym_normalize_with_self_loops(g)``, bit for bit.
    """
    if cfg.kind == "sym":
        a_norm = graphcore.sym_normalize_with_self_loops(g)
    else:
        a_tilde = (g.adjacency + sp.identity(g.n, format="csr", dtype=np.float64)).tocsr()
        d_tilde = np.asarray(a_tilde.sum(axis=1)).ravel()
        a_norm = sp.diags(1.0 / d_tilde, format="csr") @ a_tilde
    if cfg.gamma == 1.0:
        a_norm.sort_indices()
        return a_norm
    op = (cfg.gamma * a_norm + sp.identity(g.n, format="csr") * (1.0 - cfg.gamma)).tocsr()
    op.sort_indices()
    return op


def smooth_once(x: np.ndarray, g: Graph, cfg: SmoothingConfig) -> np.ndarray:
    """Apply one smoothing step channel-wise."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != g.n:
        raise ValueError(f"x has {x.shape[0]} rows, graph has {g.n} vertices")
    return graphcore.spmm(smoother_operator(g, cfg), x)


def smooth_iterate(x: np.ndarray, g: Graph, cfg: SmoothingConfig) -> np.ndarray:
    """Apply ``cfg.iterations`` smoothing steps (0 steps returns x unchanged)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != g.n:
        raise ValueError(f"x has {x.shape[0]} rows, graph has {g.n} vertices")
    op = smoother_operator(g, cfg)
    out = x
    for _ in range(cfg.iterations):
        out = op @ out
    return out


def _component_spread(x: np.ndarray, comp_labels: np.ndarray, k: int) -> float:
    """Max over components and channels of the max-min spread."""
    x2 = x if x.ndim == 2 else x[:, None]
    dev = 0.0
    for c in range(k):
        members = x2[comp_labels == c]
        if members.shape[0] == 0:
            continue
        dev = max(dev, float((members.max(axis=0) - members.min(axis=0)).max()))
    return dev


def convergence_profile(
    x: np.ndarray, g: Graph, cfg: SmoothingConfig
) -> list[tuple[int, float]]:
    """Per-iteration deviation from the smoothing fixed point.

    The deviation at iteration m is the largest within-component spread of
    the smoothed features (for kind='sym', of features rescaled by
    1/sqrt(d~), which is the quantity that becomes constant in the limit).
    Iteration 0 reports the unsmoothed input.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != g.n:
        raise ValueError(f"x has {x.shape[0]} rows, graph has {g.n} vertices")
    comp_labels, k = graphcore.connected_components(g)
    op = smoother_operator(g, cfg)
    if cfg.kind == "sym":
        d_tilde = degrees_with_self_loops(g)
        rescale = 1.0 / np.sqrt(d_tilde)
    else:
        rescale = None

    def deviation(y):
        if rescale is not None:
            y = y * (rescale[:, None] if y.ndim == 2 else rescale)
        return _component_spread(y, comp_labels, k)

    profile = [(0, deviation(x))]
    cur = x
    for m in range(1, cfg.iterations + 1):
        cur = op @ cur
        profile.append((m, deviation(cur)))
    return profile


def degrees_with_self_loops(g: Graph) -> np.ndarray:
    """d~ = degrees after adding unit self-loops."""
    return graphcore.degree_vector(g) + 1.0


def karate_club() -> tuple[Graph, np.ndarray]:
    """Zachary's karate club (34 vertices, 78 edges) with its two-faction labels.

    Bundled as text assets so nothing is fetched at runtime.
    """
    pkg = resources.files("gcnlab.assets")
    edges = []
    for line in (pkg / "karate_edges.txt").read_text().splitlines():
        u, v = line.split()
        edges.append((int(u), int(v), 1.0))
    labels = np.array(
        [int(s) for s in (pkg / "karate_labels.txt").read_text().split()], dtype=np.int64
    )
    g = graphcore.build_graph(34, edges)
    return g, labels


def untrained_embeddings(
    g: Graph, layers: int, seed: int, hidden_dim: int = 16, out_dim: int = 2
) -> list[np.ndarray]:
    """Forward passes of fresh random networks of depth 1..layers.

    One-hot inputs, ReLU between layers, linear output for plotting; each
    depth gets its own randomly initialized weights from one seeded stream.
    """
    from . import nn

    if not (1 <= layers <= 10):
        raise ValueError("layers must lie in 1..10")
    a_hat = graphcore.sym_normalize_with_self_loops(g)
    x = np.eye(g.n)
    rng = np.random.default_rng(seed)
    embeddings = []
    for depth in range(1, layers + 1):
        dims = [g.n] + [hidden_dim] * (depth - 1) + [out_dim]
        h = x
        for layer in range(depth):
            w = nn.glorot_init(dims[layer], dims[layer + 1], rng)
            h = (a_hat @ h) @ w
            if layer < depth - 1:
                h = np.maximum(h, 0.0)
        embeddings.append(h)
    return embeddings


def karate_embed(layers: int, seed: int) -> list[np.ndarray]:
    """Untrained embeddings of the karate club, one 34x2 array per depth 1..layers."""
    g, _ = karate_club()
    return untrained_embeddings(g, layers, seed)


def write_profile_csv(profile: list[tuple[int, float]], path) -> None:
    with open(path, "w", newline="\n") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["iteration", "deviation"])
        for it, dev in profile:
            writer.writerow([it, repr(dev)])


def write_embedding_csv(embedding: np.ndarray, classes: np.ndarray, path) -> None:
    with open(path, "w", newline="\n") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["vertex", "x", "y", "class"])
        for v in range(embedding.shape[0]):
            writer.writerow([v, repr(float(embedding[v, 0])), repr(float(embedding[v, 1])), int(classes[v])])
