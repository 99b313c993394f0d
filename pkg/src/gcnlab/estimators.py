"""Scikit-learn style estimators over the functional core.

All estimators are transductive: ``fit`` receives the graph, the feature
matrix where applicable, and a label vector with -1 for unlabeled vertices
(the convention of sklearn's semi_supervised module). ``predict`` returns
labels for the requested vertex indices, defaulting to every vertex, so
``score(indices, y_true)`` composes with the usual mixin.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin

from . import nn, parwalks, pipelines, smoothing
from .data import LabelSplit
from .validation import check_features, check_graph, check_indices, check_partial_labels


def _split_from_partial(y: np.ndarray) -> LabelSplit:
    train_idx = np.flatnonzero(y >= 0)
    return LabelSplit(train_idx=train_idx, train_classes=y[train_idx])


class _FitData:
    """Duck-typed stand-in for a Dataset: pipelines only need these fields."""

    def __init__(self, graph, features, class_count, labels=None):
        self.graph = graph
        self.features = features
        self.class_count = class_count
        self.labels = labels


class LaplacianSmoother(BaseEstimator, TransformerMixin):
    """Applies m steps of (random-walk or symmetric) Laplacian smoothing."""

    def __init__(self, gamma: float = 1.0, kind: str = "sym", iterations: int = 1):
        self.gamma = gamma
        self.kind = kind
        self.iterations = iterations

    def fit(self, graph, y=None):
        self.graph_ = check_graph(graph)
        return self

    def transform(self, X) -> np.ndarray:
        cfg = smoothing.SmoothingConfig(
            gamma=self.gamma, kind=self.kind, iterations=self.iterations
        )
        x = check_features(X, self.graph_.n)
        if hasattr(x, "toarray"):
            x = x.toarray()
        return smoothing.smooth_iterate(x, self.graph_, cfg)


class ParWalksClassifier(BaseEstimator, ClassifierMixin):
    """Label propagation through partially absorbing random walks."""

    def __init__(self, alpha: float = 1e-6, tol: float = 1e-8):
        self.alpha = alpha
        self.tol = tol

    def fit(self, graph, y):
        graph = check_graph(graph)
        y = check_partial_labels(y, graph.n)
        split = _split_from_partial(y)
        system = parwalks.absorption_system(graph, alpha=self.alpha)
        self.confidence_ = parwalks.lp_confidences(system, split).T.copy()
        self.labels_ = np.argmax(self.confidence_, axis=1)
        self.classes_ = np.arange(split.n_classes())
        return self

    def predict(self, indices=None) -> np.ndarray:
        if indices is None:
            return self.labels_.copy()
        return self.labels_[check_indices(indices, len(self.labels_))]


class GCNClassifier(BaseEstimator, ClassifierMixin):
    """Graph convolutional classifier (arch 'gcn', 'fcn', or 'cheby').

    ``validation_idx`` passed to fit enables early stopping on those
    vertices' labels (which must be present in y).
    """

    def __init__(
        self,
        arch: str = "gcn",
        n_layers: int = 2,
        hidden_dim: int = 16,
        learning_rate: float = 0.01,
        max_epochs: int = 200,
        dropout_rate: float = 0.5,
        l2_weight: float = 5e-4,
        cheby_order: int = 2,
        early_stopping_window: int | None = None,
        normalize_features: bool = True,
        seed: int = 0,
    ):
        self.arch = arch
        self.n_layers = n_layers
        self.hidden_dim = hidden_dim
        self.learning_rate = learning_rate
        self.max_epochs = max_epochs
        self.dropout_rate = dropout_rate
        self.l2_weight = l2_weight
        self.cheby_order = cheby_order
        self.early_stopping_window = early_stopping_window
        self.normalize_features = normalize_features
        self.seed = seed

    def _train_config(self) -> nn.TrainConfig:
        return nn.TrainConfig(
            learning_rate=self.learning_rate,
            max_epochs=self.max_epochs,
            dropout_rate=self.dropout_rate,
            l2_weight=self.l2_weight,
            hidden_dim=self.hidden_dim,
            n_layers=self.n_layers,
            cheby_order=self.cheby_order,
            early_stopping=self.early_stopping_window,
            normalize_features=self.normalize_features,
            seed=self.seed,
        )

    def fit(self, graph, X, y, validation_idx=None):
        graph = check_graph(graph)
        x = check_features(X, graph.n)
        y = check_partial_labels(y, graph.n)
        split = _split_from_partial(y)
        if validation_idx is not None:
            validation_idx = check_indices(validation_idx, graph.n)
            if np.any(y[validation_idx] < 0):
                raise ValueError("validation vertices must carry labels in y")
            train_mask = ~np.isin(split.train_idx, validation_idx)
            split = LabelSplit(
                train_idx=split.train_idx[train_mask],
                train_classes=split.train_classes[train_mask],
                validation=validation_idx,
            )
        data = _FitData(graph, x, int(y.max()) + 1, labels=y)
        result = nn.train(data, split, self._train_config(), arch=self.arch)
        self.model_ = result.model
        self.loss_history_ = result.loss_history
        self.epochs_run_ = result.epochs_run
        self.proba_ = result.softmax_outputs
        self.classes_ = np.arange(self.proba_.shape[1])
        return self

    def predict_proba(self, indices=None) -> np.ndarray:
        if indices is None:
            return self.proba_.copy()
        return self.proba_[check_indices(indices, self.proba_.shape[0])]

    def predict(self, indices=None) -> np.ndarray:
        return np.argmax(self.predict_proba(indices), axis=1)


class ExpansionGCNClassifier(BaseEstimator, ClassifierMixin):
    """Label-expansion strategies: cotrain, selftrain, union, intersection."""

    def __init__(
        self,
        strategy: str = "union",
        budget_multiplier: float = 3.0,
        parwalks_alpha: float = 1e-6,
        n_layers: int = 2,
        hidden_dim: int = 16,
        learning_rate: float = 0.01,
        max_epochs: int = 200,
        dropout_rate: float = 0.5,
        l2_weight: float = 5e-4,
        normalize_features: bool = True,
        seed: int = 0,
    ):
        self.strategy = strategy
        self.budget_multiplier = budget_multiplier
        self.parwalks_alpha = parwalks_alpha
        self.n_layers = n_layers
        self.hidden_dim = hidden_dim
        self.learning_rate = learning_rate
        self.max_epochs = max_epochs
        self.dropout_rate = dropout_rate
        self.l2_weight = l2_weight
        self.normalize_features = normalize_features
        self.seed = seed

    def fit(self, graph, X, y):
        if self.strategy not in ("cotrain", "selftrain", "union", "intersection"):
            raise ValueError(f"unknown strategy {self.strategy!r}")
        graph = check_graph(graph)
        x = check_features(X, graph.n)
        y = check_partial_labels(y, graph.n)
        split = _split_from_partial(y)
        cfg = pipelines.StrategyConfig(
            method=self.strategy,
            budget_multiplier=self.budget_multiplier,
            parwalks_alpha=self.parwalks_alpha,
            train_cfg=nn.TrainConfig(
                learning_rate=self.learning_rate,
                max_epochs=self.max_epochs,
                dropout_rate=self.dropout_rate,
                l2_weight=self.l2_weight,
                hidden_dim=self.hidden_dim,
                n_layers=self.n_layers,
                normalize_features=self.normalize_features,
                seed=self.seed,
            ),
        )
        data = _FitData(graph, x, int(y.max()) + 1)
        outcome = pipelines.run_strategy(data, split, cfg)
        self.proba_ = outcome.scores
        self.labels_added_ = outcome.labels_added
        self.epochs_run_ = outcome.epochs
        self.classes_ = np.arange(self.proba_.shape[1])
        return self

    def predict_proba(self, indices=None) -> np.ndarray:
        if indices is None:
            return self.proba_.copy()
        return self.proba_[check_indices(indices, self.proba_.shape[0])]

    def predict(self, indices=None) -> np.ndarray:
        return np.argmax(self.predict_proba(indices), axis=1)
