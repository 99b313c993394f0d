"""Training strategies that expand the label set before (re)training a GCN.

Four expansion strategies share one skeleton: estimate how many labels a
shallow network needs to cover the graph (the budget rule), pick that many
pseudo-labels per class from a confidence ranking, and train on the grown
set without ever touching a validation set. The ranking comes from the
absorbing random walk (cotrain), the network's own softmax (selftrain), or
both combined by set union / intersection.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import graphcore, nn, parwalks
from .data import LabelSplit
from .graphcore import Graph
from .nn import TrainConfig, TrainResult

METHODS = (
    "lp",
    "gcn_v",
    "gcn_plus_v",
    "cheby",
    "cotrain",
    "selftrain",
    "union",
    "intersection",
)


@dataclass(frozen=True)
class StrategyConfig:
    method: str
    budget_multiplier: float = 3.0
    train_cfg: TrainConfig = field(default_factory=TrainConfig)
    parwalks_alpha: float = 1e-6

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if not self.budget_multiplier > 0:
            raise ValueError("budget_multiplier must be positive")


@dataclass
class StrategyResult:
    """Per-vertex class scores plus bookkeeping for the results CSV.

    ``scores`` is (n, classes): softmax outputs for network methods, walk
    confidences for lp. Argmax with ties to the lower class index gives the
    prediction either way.
    """

    method: str
    scores: np.ndarray
    labels_added: int = 0
    epochs: int = 0
    train_result: TrainResult | None = None


def estimate_label_budget(g: Graph, tau: int) -> int:
    """Labels needed for a tau-layer receptive field to cover the graph: ceil(n/d^^tau)."""
    if tau < 1:
        raise ValueError("tau must be at least 1")
    d_hat = graphcore.average_degree(g)
    if d_hat == 0.0:
        raise ValueError("average degree is zero; budget undefined")
    return math.ceil(g.n / d_hat**tau)


def per_class_addition(g: Graph, split: LabelSplit, tau: int, multiplier: float) -> int:
    """Vertices to add per class so the training set approaches multiplier * budget."""
    eta = estimate_label_budget(g, tau)
    n_classes = split.n_classes()
    shortfall = multiplier * eta - split.n_train
    return max(0, math.ceil(shortfall / n_classes))


def expand_labels_selftrain(z: np.ndarray, split: LabelSplit, t: int) -> LabelSplit:
    """Expand the label set with the network's own most confident predictions."""
    return parwalks.greedy_expand(np.asarray(z).T, split, t)


def _train_gcn(data, split, cfg: StrategyConfig, arch="gcn", early=None, initial=None):
    train_cfg = replace(cfg.train_cfg, early_stopping=early)
    return nn.train(data, split, train_cfg, arch=arch, initial_model=initial)


def _added_pairs(expanded: LabelSplit, base: LabelSplit) -> set[tuple[int, int]]:
    k = base.n_train
    return set(
        zip(expanded.train_idx[k:].tolist(), expanded.train_classes[k:].tolist())
    )


def _split_with_pairs(base: LabelSplit, pairs: set[tuple[int, int]]) -> LabelSplit:
    ordered = sorted(pairs)
    idx = np.array([v for v, _ in ordered], dtype=np.int64)
    classes = np.array([c for _, c in ordered], dtype=np.int64)
    return base.with_added(idx, classes)


def run_cotrain(data, split: LabelSplit, cfg: StrategyConfig) -> StrategyResult:
    """Expand via the random walk, then train a fresh network on the grown set."""
    t = per_class_addition(data.graph, split, cfg.train_cfg.n_layers, cfg.budget_multiplier)
    sys = parwalks.absorption_system(data.graph, alpha=cfg.parwalks_alpha)
    expanded = parwalks.expand_labels_parwalks(sys, split, t)
    result = _train_gcn(data, expanded, cfg)
    return StrategyResult(
        method="cotrain",
        scores=result.softmax_outputs,
        labels_added=expanded.n_train - split.n_train,
        epochs=result.epochs_run,
        train_result=result,
    )


def run_selftrain(data, split: LabelSplit, cfg: StrategyConfig) -> StrategyResult:
    """Train, expand with the network's own confident predictions, keep training."""
    t = per_class_addition(data.graph, split, cfg.train_cfg.n_layers, cfg.budget_multiplier)
    stage1 = _train_gcn(data, split, cfg)
    expanded = expand_labels_selftrain(stage1.softmax_outputs, split, t)
    stage2 = _train_gcn(data, expanded, cfg, initial=stage1.model)
    return StrategyResult(
        method="selftrain",
        scores=stage2.softmax_outputs,
        labels_added=expanded.n_train - split.n_train,
        epochs=stage1.epochs_run + stage2.epochs_run,
        train_result=stage2,
    )


def _combined_picks(data, split, cfg) -> tuple[set, set, TrainResult, int]:
    t = per_class_addition(data.graph, split, cfg.train_cfg.n_layers, cfg.budget_multiplier)
    sys = parwalks.absorption_system(data.graph, alpha=cfg.parwalks_alpha)
    walk_picks = _added_pairs(parwalks.expand_labels_parwalks(sys, split, t), split)
    stage1 = _train_gcn(data, split, cfg)
    net_picks = _added_pairs(
        expand_labels_selftrain(stage1.softmax_outputs, split, t), split
    )
    return walk_picks, net_picks, stage1, t


def merge_union(walk_picks: set, net_picks: set) -> set:
    """Union of (vertex, class) picks; a vertex picked with two classes is dropped."""
    merged = walk_picks | net_picks
    by_vertex: dict[int, set[int]] = {}
    for v, c in merged:
        by_vertex.setdefault(v, set()).add(c)
    return {(v, c) for v, c in merged if len(by_vertex[v]) == 1}


def run_union(data, split: LabelSplit, cfg: StrategyConfig) -> StrategyResult:
    """Merge both expansions; a vertex the two pickers label differently is dropped."""
    walk_picks, net_picks, stage1, _ = _combined_picks(data, split, cfg)
    kept = merge_union(walk_picks, net_picks)
    expanded = _split_with_pairs(split, kept)
    stage2 = _train_gcn(data, expanded, cfg, initial=stage1.model)
    return StrategyResult(
        method="union",
        scores=stage2.softmax_outputs,
        labels_added=len(kept),
        epochs=stage1.epochs_run + stage2.epochs_run,
        train_result=stage2,
    )


def run_intersection(data, split: LabelSplit, cfg: StrategyConfig) -> StrategyResult:
    """Keep only (vertex, class) picks both expansions agree on."""
    walk_picks, net_picks, stage1, _ = _combined_picks(data, split, cfg)
    kept = walk_picks & net_picks
    if not kept:
        warnings.warn("intersection of expansions is empty; training on original labels")
    expanded = _split_with_pairs(split, kept)
    stage2 = _train_gcn(data, expanded, cfg, initial=stage1.model)
    return StrategyResult(
        method="intersection",
        scores=stage2.softmax_outputs,
        labels_added=len(kept),
        epochs=stage1.epochs_run + stage2.epochs_run,
        train_result=stage2,
    )


def run_strategy(data, split: LabelSplit, cfg: StrategyConfig) -> StrategyResult:
    """Dispatch a method name to its runner (baselines included)."""
    if cfg.method == "lp":
        sys = parwalks.absorption_system(data.graph, alpha=cfg.parwalks_alpha)
        scores = parwalks.lp_confidences(sys, split)
        return StrategyResult(method="lp", scores=scores.T.copy())
    if cfg.method in ("gcn_v", "cheby"):
        arch = "gcn" if cfg.method == "gcn_v" else "cheby"
        result = _train_gcn(data, split, cfg, arch=arch)
        return StrategyResult(
            method=cfg.method,
            scores=result.softmax_outputs,
            epochs=result.epochs_run,
            train_result=result,
        )
    if cfg.method == "gcn_plus_v":
        window = cfg.train_cfg.early_stopping or nn.DEFAULT_VALIDATION_WINDOW
        result = _train_gcn(data, split, cfg, early=window)
        return StrategyResult(
            method="gcn_plus_v",
            scores=result.softmax_outputs,
            epochs=result.epochs_run,
            train_result=result,
        )
    runner = {
        "cotrain": run_cotrain,
        "selftrain": run_selftrain,
        "union": run_union,
        "intersection": run_intersection,
    }[cfg.method]
    return runner(data, split, cfg)
