"""Sparse graph containers and the operators every other module builds on.

Graphs are undirected, weighted, and stored in CSR form: scipy's
csr_matrix supplies the (row_ptr, col_idx, values) triplet as
(indptr, indices, data), kept canonical (sorted columns, coalesced
duplicates). The module provides degree/Laplacian constructions, the
renormalized convolution operator D~^{-1/2} (A+I) D~^{-1/2}, connected
components, and the sparse-dense product kernel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components as _cc


@dataclass(frozen=True)
class Graph:
    """An undirected weighted graph: vertex count plus a symmetric CSR adjacency.

    The adjacency diagonal is zero unless self-loops were added explicitly
    via :func:`add_self_loops`.
    """

    n: int
    adjacency: sp.csr_matrix

    @property
    def has_self_loops(self) -> bool:
        return bool(np.any(self.adjacency.diagonal() != 0.0))

    @property
    def n_edges(self) -> int:
        """Number of undirected edges (self-loops counted once)."""
        diag = int(np.count_nonzero(self.adjacency.diagonal()))
        return (self.adjacency.nnz - diag) // 2 + diag


def build_graph(n: int, edges: list[tuple[int, int, float]]) -> Graph:
    """Assemble a symmetric adjacency from (u, v, w) triples.

    Duplicate edges coalesce by summing their weights (upstream citation data
    can list the same link twice). Self-edges are rejected; self-loops enter
    only through :func:`add_self_loops`.
    """
    if n < 0:
        raise ValueError(f"vertex count must be nonnegative, got {n}")
    rows, cols, vals = [], [], []
    for u, v, w in edges:
        if not (0 <= u < n and 0 <= v < n):
            raise ValueError(f"edge ({u},{v}) out of range for n={n}")
        if u == v:
            raise ValueError(f"self-edge at vertex {u}; use add_self_loops instead")
        if not w > 0:
            raise ValueError(f"edge ({u},{v}) has non-positive weight {w}")
        rows += [u, v]
        cols += [v, u]
        vals += [w, w]
    adj = sp.coo_matrix(
        (np.asarray(vals, dtype=np.float64), (rows, cols)), shape=(n, n)
    ).tocsr()
    adj.sum_duplicates()
    adj.sort_indices()
    return Graph(n=n, adjacency=adj)


def degree_vector(g: Graph) -> np.ndarray:
    """d_i = row sum of the adjacency."""
    return np.asarray(g.adjacency.sum(axis=1)).ravel()


def add_self_loops(g: Graph) -> Graph:
    """Return the graph with a unit self-loop at every vertex (A -> A + I)."""
    if g.has_self_loops:
        raise ValueError("graph already has self-loops")
    adj = (g.adjacency + sp.identity(g.n, format="csr", dtype=np.float64)).tocsr()
    adj.sort_indices()
    return Graph(n=g.n, adjacency=adj)


def sym_normalize_with_self_loops(g: Graph) -> sp.csr_matrix:
    """The renormalized convolution operator D~^{-1/2} (A+I) D~^{-1/2}.

    Self-loops are added here, so every vertex has positive degree and the
    result is well defined on any input graph without them.
    """
    if g.has_self_loops:
        raise ValueError("expected a graph without self-loops")
    a_tilde = (g.adjacency + sp.identity(g.n, format="csr", dtype=np.float64)).tocsr()
    d_tilde = np.asarray(a_tilde.sum(axis=1)).ravel()
    inv_sqrt = 1.0 / np.sqrt(d_tilde)
    out = a_tilde.tocoo()
    data = out.data * inv_sqrt[out.row] * inv_sqrt[out.col]
    a_hat = sp.csr_matrix((data, (out.row, out.col)), shape=(g.n, g.n))
    a_hat.sort_indices()
    return a_hat


def laplacian(g: Graph, kind: str = "unnormalized") -> sp.csr_matrix:
    """Graph Laplacian: ``unnormalized`` D-A, ``sym`` D^{-1/2}LD^{-1/2}, ``rw`` D^{-1}L."""
    d = degree_vector(g)
    lap = (sp.diags(d, format="csr") - g.adjacency).tocsr()
    if kind == "unnormalized":
        lap.sort_indices()
        return lap
    if kind not in ("sym", "rw"):
        raise ValueError(f"unknown laplacian kind {kind!r}")
    if np.any(d == 0.0):
        raise ValueError(f"{kind} laplacian undefined: graph has zero-degree vertices")
    coo = lap.tocoo()
    if kind == "sym":
        inv_sqrt = 1.0 / np.sqrt(d)
        data = coo.data * inv_sqrt[coo.row] * inv_sqrt[coo.col]
    else:
        data = coo.data / d[coo.row]
    out = sp.csr_matrix((data, (coo.row, coo.col)), shape=(g.n, g.n))
    out.sort_indices()
    return out


def connected_components(g: Graph) -> tuple[np.ndarray, int]:
    """Component id per vertex plus component count.

    Ids are canonicalized so component i contains a smaller vertex than
    component i+1 (deterministic output regardless of library labeling).
    """
    k, raw = _cc(g.adjacency, directed=False)
    order = {}
    labels = np.empty(g.n, dtype=np.int64)
    for v in range(g.n):
        c = raw[v]
        if c not in order:
            order[c] = len(order)
        labels[v] = order[c]
    return labels, k


def spmm(m: sp.spmatrix, x: np.ndarray) -> np.ndarray:
    """Sparse @ dense product with an explicit shape check."""
    x = np.asarray(x, dtype=np.float64)
    if m.shape[1] != x.shape[0]:
        raise ValueError(f"shape mismatch: {m.shape} @ {x.shape}")
    return m @ x


def average_degree(g: Graph) -> float:
    """Mean degree d^ = mean of the degree vector (2|E|/n for unit weights)."""
    if g.n == 0:
        raise ValueError("average degree undefined for an empty graph")
    return float(degree_vector(g).mean())
