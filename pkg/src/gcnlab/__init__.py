"""gcnlab: graph convolution as Laplacian smoothing, and what to do about it.

Functional core lives in the submodules (graphcore, smoothing, parwalks,
nn, pipelines, data); the estimator classes re-exported here compose with
scikit-learn's fit/predict/transform conventions.
"""

from .data import Dataset, GuardedLabels, LabelLeakError, LabelSplit, load_dataset, sample_split
from .estimators import (
    ExpansionGCNClassifier,
    GCNClassifier,
    LaplacianSmoother,
    ParWalksClassifier,
)
from .graphcore import Graph, build_graph
from .nn import TrainConfig
from .pipelines import StrategyConfig, run_strategy
from .smoothing import SmoothingConfig

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "ExpansionGCNClassifier",
    "GCNClassifier",
    "Graph",
    "GuardedLabels",
    "LabelLeakError",
    "LabelSplit",
    "LaplacianSmoother",
    "ParWalksClassifier",
    "SmoothingConfig",
    "StrategyConfig",
    "TrainConfig",
    "build_graph",
    "load_dataset",
    "run_strategy",
    "sample_split",
    "__version__",
]
