"""Partially absorbing random walks over the graph Laplacian.

The central object is the linear system (L + alpha * Lambda), whose inverse
column sums rank every vertex by affinity to a set of labeled seeds. One
Jacobi-preconditioned conjugate-gradient solve per class yields the
per-class confidence vectors; on top of those sit the label-expansion step
used for co-training and the plain label-propagation classifier.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import graphcore
from .data import LabelSplit
from .graphcore import Graph


class CgConvergenceError(RuntimeError):
    """CG failed to reach the requested tolerance; carries the final residual."""

    def __init__(self, iterations: int, residual: float, tol: float):
        self.iterations = iterations
        self.residual = residual
        self.tol = tol
        super().__init__(
            f"conjugate gradient stalled after {iterations} iterations: "
            f"relative residual {residual:.3e} > tol {tol:.1e}"
        )


@dataclass(frozen=True)
class AbsorptionSystem:
    """The SPD system L + alpha * diag(lambda_diag).

    L is the unnormalized Laplacian of the original graph (self-loops would
    cancel out of D - A anyway). With Lambda = I and small alpha the inverse
    approaches the walk's absorption-probability ranking.
    """

    laplacian: sp.csr_matrix
    alpha: float
    lambda_diag: np.ndarray

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        lam = np.asarray(self.lambda_diag, dtype=np.float64)
        object.__setattr__(self, "lambda_diag", lam)
        if np.any(lam < 0) or not np.any(lam > 0):
            raise ValueError("lambda_diag must be nonnegative with a positive entry")

    @property
    def n(self) -> int:
        return self.laplacian.shape[0]

    def matvec(self, x: np.ndarray) -> np.ndarray:
        return self.laplacian @ x + (self.alpha * self.lambda_diag) * x

    def diagonal(self) -> np.ndarray:
        return self.laplacian.diagonal() + self.alpha * self.lambda_diag


@dataclass(frozen=True)
class ConfidenceTable:
    """Per-class confidence vectors, one row of length n per class."""

    scores: np.ndarray

    @property
    def n_classes(self) -> int:
        return self.scores.shape[0]


def absorption_system(
    g: Graph, alpha: float = 1e-6, lambda_diag: np.ndarray | None = None
) -> AbsorptionSystem:
    """Assemble the (L + alpha * Lambda) system for a graph; Lambda defaults to I."""
    lam = np.ones(g.n) if lambda_diag is None else np.asarray(lambda_diag, dtype=np.float64)
    return AbsorptionSystem(
        laplacian=graphcore.laplacian(g, "unnormalized"), alpha=alpha, lambda_diag=lam
    )


def cg_solve(
    sys: AbsorptionSystem,
    rhs: np.ndarray,
    tol: float = 1e-8,
    max_iter: int | None = None,
) -> np.ndarray:
    """Solve (L + alpha*Lambda) x = rhs by Jacobi-preconditioned CG.

    Stops when the relative residual ||Ax - rhs|| / ||rhs|| drops below
    ``tol``; alpha near zero makes the system near-singular per component,
    so the diagonal preconditioner is not optional. Raises
    :class:`CgConvergenceError` if the budget (default 10n) runs out.
    """
    rhs = np.asarray(rhs, dtype=np.float64)
    if rhs.shape != (sys.n,):
        raise ValueError(f"rhs has shape {rhs.shape}, expected ({sys.n},)")
    if not tol > 0:
        raise ValueError("tol must be positive")
    norm_b = np.linalg.norm(rhs)
    if norm_b == 0.0:
        return np.zeros_like(rhs)
    if max_iter is None:
        max_iter = 10 * sys.n

    diag = sys.diagonal()
    inv_diag = np.ones_like(diag)
    inv_diag[diag > 0] = 1.0 / diag[diag > 0]

    x = np.zeros_like(rhs)
    r = rhs.copy()
    z = inv_diag * r
    p = z.copy()
    rz = float(r @ z)
    res = norm_b
    for _ in range(max_iter):
        ap = sys.matvec(p)
        alpha_k = rz / float(p @ ap)
        x += alpha_k * p
        r -= alpha_k * ap
        res = float(np.linalg.norm(r))
        if res <= tol * norm_b:
            return x
        z = inv_diag * r
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise CgConvergenceError(max_iter, res / norm_b, tol)


def confidence_vectors(sys: AbsorptionSystem, labels: LabelSplit) -> ConfidenceTable:
    """Per-class confidence p_k = sum of P's columns over class-k seeds.

    P = (L + alpha*Lambda)^{-1} is symmetric, so the column sum equals one
    solve against the class's 0/1 indicator: k solves total.
    """
    n_classes = labels.n_classes()
    scores = np.empty((n_classes, sys.n))
    for k in range(n_classes):
        members = labels.class_members(k)
        if len(members) == 0:
            raise ValueError(f"class {k} has no labeled vertices")
        indicator = np.zeros(sys.n)
        indicator[members] = 1.0
        scores[k] = cg_solve(sys, indicator)
    return ConfidenceTable(scores=scores)


def greedy_expand(scores: np.ndarray, labels: LabelSplit, t: int) -> LabelSplit:
    """Add the t highest-scoring unlabeled vertices per class, classes ascending.

    ``scores`` has one row per class. A vertex claimed by an earlier class
    is ineligible for later ones, and input labels are never overwritten.
    Score ties break toward the lower vertex index. If fewer than t
    eligible vertices remain for a class, adds what it can and warns.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0:
        return labels
    taken = set(labels.train_idx.tolist())
    new_idx, new_classes = [], []
    for k in range(scores.shape[0]):
        order = np.argsort(-scores[k], kind="stable")
        added = 0
        for v in order:
            if added == t:
                break
            v = int(v)
            if v in taken:
                continue
            taken.add(v)
            new_idx.append(v)
            new_classes.append(k)
            added += 1
        if added < t:
            warnings.warn(
                f"class {k}: only {added} of {t} requested vertices were eligible",
                stacklevel=2,
            )
    return labels.with_added(
        np.asarray(new_idx, dtype=np.int64), np.asarray(new_classes, dtype=np.int64)
    )


def expand_labels_parwalks(
    sys: AbsorptionSystem, labels: LabelSplit, t: int
) -> LabelSplit:
    """Expand the label set with the walk's most confident vertices per class."""
    if t == 0:
        return labels
    table = confidence_vectors(sys, labels)
    return greedy_expand(table.scores, labels, t)


def lp_confidences(sys: AbsorptionSystem, labels: LabelSplit) -> np.ndarray:
    """Class scores for label propagation: per-seed means, one row per class.

    Summed confidences carry a near-constant offset of |S_k| / (alpha * |C|)
    per component, so with unequal class counts the largest class would win
    everywhere as alpha -> 0. Dividing by the seed count cancels the offset
    and leaves the structure-driven part to decide; within a single class
    the ranking is unchanged, so label expansion keeps the plain sums.
    """
    table = confidence_vectors(sys, labels)
    counts = np.array(
        [len(labels.class_members(k)) for k in range(table.n_classes)], dtype=np.float64
    )
    return table.scores / counts[:, None]


def lp_classify(sys: AbsorptionSystem, labels: LabelSplit) -> np.ndarray:
    """Label propagation: argmax class confidence per vertex (ties to the lower class)."""
    return np.argmax(lp_confidences(sys, labels), axis=0).astype(np.int64)
