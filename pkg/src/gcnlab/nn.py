"""Hand-written dense network machinery: forwards, exact gradients, Adam.

Three architectures share one layer loop, differing only in how a layer
aggregates its input before the weight multiply:

  gcn    S = A^ H W          (renormalized convolution on the left)
  fcn    S = H W             (no aggregation)
  cheby  S = sum_k T_k(L~) H W_k   (Chebyshev polynomials of the rescaled
                                    symmetric Laplacian)

ReLU joins hidden layers, softmax closes the last one, and the loss is the
summed cross entropy over labeled vertices plus an L2 term on the first
layer's weights. No autodiff: the backward pass is derived by hand and
checked against finite differences in the test suite. Everything is float64
and deterministic given a seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from . import graphcore
from .data import GuardedLabels, LabelSplit
from .graphcore import Graph

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
LOG_CLAMP = 1e-15
DEFAULT_VALIDATION_WINDOW = 10


class TrainingDivergedError(RuntimeError):
    def __init__(self, epoch: int):
        self.epoch = epoch
        super().__init__(f"loss became NaN at epoch {epoch}")


@dataclass
class GcnModel:
    """Layer weights plus the architecture they belong to.

    ``weights[l]`` holds one matrix for gcn/fcn layers and ``cheby_order+1``
    matrices for cheby layers.
    """

    weights: list[list[np.ndarray]]
    layer_dims: list[int]
    arch: str = "gcn"
    cheby_order: int = 0

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def flat_weights(self) -> list[np.ndarray]:
        return [w for layer in self.weights for w in layer]

    def first_layer_weights(self) -> list[np.ndarray]:
        return list(self.weights[0])


@dataclass(frozen=True)
class TrainConfig:
    """Training hyperparameters (defaults follow the benchmark convention)."""

    learning_rate: float = 0.01
    max_epochs: int = 200
    dropout_rate: float = 0.5
    l2_weight: float = 5e-4
    hidden_dim: int = 16
    n_layers: int = 2
    cheby_order: int = 2
    early_stopping: int | None = None  # validation-loss patience window
    normalize_features: bool = True
    seed: int = 0

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if not (0.0 <= self.dropout_rate < 1.0):
            raise ValueError("dropout_rate must lie in [0,1)")
        if self.n_layers < 1:
            raise ValueError("need at least one layer")


@dataclass
class TrainResult:
    model: GcnModel
    loss_history: list[float]
    epochs_run: int
    softmax_outputs: np.ndarray


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0

    @classmethod
    def zeros_like(cls, weights: list[np.ndarray]) -> "AdamState":
        return cls(m=[np.zeros_like(w) for w in weights],
                   v=[np.zeros_like(w) for w in weights])


@dataclass
class LayerCache:
    aggregated: list  # aggregation-operator outputs, one per weight matrix
    preact: np.ndarray


@dataclass
class ForwardCache:
    layers: list[LayerCache]
    masks: list | None
    z: np.ndarray


def glorot_init(rows: int, cols: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform samples in +-sqrt(6/(rows+cols))."""
    bound = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-bound, bound, size=(rows, cols))


def softmax_rows(s: np.ndarray) -> np.ndarray:
    shifted = s - s.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def one_hot(classes: np.ndarray, n_classes: int) -> np.ndarray:
    out = np.zeros((len(classes), n_classes))
    out[np.arange(len(classes)), classes] = 1.0
    return out


def _apply_mask(h, mask):
    if mask is None:
        return h
    if sp.issparse(h):
        out = h.copy()
        out.data = out.data * mask
        return out
    return h * mask


def make_dropout_masks(x, layer_dims: list[int], rate: float, rng: np.random.Generator):
    """Inverted-dropout masks for each layer input; the first matches x's storage."""
    if rate == 0.0:
        return None
    scale = 1.0 / (1.0 - rate)
    masks = []
    for layer, dim in enumerate(layer_dims[:-1]):
        if layer == 0 and sp.issparse(x):
            keep = rng.random(x.nnz) >= rate
        else:
            keep = rng.random((x.shape[0], dim)) >= rate
        masks.append(keep * scale)
    return masks


def _cheby_apply(op: sp.csr_matrix, h, order: int) -> list:
    """[T_0(op) h, ..., T_order(op) h] via the Chebyshev recurrence."""
    terms = [h]
    if order >= 1:
        terms.append(op @ h)
    for _ in range(2, order + 1):
        terms.append(2.0 * (op @ terms[-1]) - terms[-2])
    return terms


def _forward(model: GcnModel, operator, x, dropout_masks=None) -> tuple[np.ndarray, ForwardCache]:
    if x.shape[1] != model.layer_dims[0]:
        raise ValueError(
            f"x has {x.shape[1]} columns, model expects {model.layer_dims[0]}"
        )
    h = x
    caches = []
    for layer, w_list in enumerate(model.weights):
        mask = dropout_masks[layer] if dropout_masks is not None else None
        h_dropped = _apply_mask(h, mask)
        if model.arch == "gcn":
            aggregated = [operator @ h_dropped]
        elif model.arch == "fcn":
            aggregated = [h_dropped]
        else:
            aggregated = _cheby_apply(operator, h_dropped, model.cheby_order)
        s = aggregated[0] @ w_list[0]
        for u, w in zip(aggregated[1:], w_list[1:]):
            s = s + u @ w
        s = np.asarray(s)
        if np.isnan(s).any():
            raise FloatingPointError(f"NaN in layer {layer} pre-activation")
        caches.append(LayerCache(aggregated=aggregated, preact=s))
        h = np.maximum(s, 0.0) if layer < model.n_layers - 1 else softmax_rows(s)
    cache = ForwardCache(layers=caches, masks=dropout_masks, z=h)
    return h, cache


def gcn_forward(model: GcnModel, a_hat: sp.csr_matrix, x, dropout_masks=None):
    """Z = softmax(A^ ... ReLU(A^ X W0) ... W_last) plus the caches backward needs."""
    return _forward(model, a_hat, x, dropout_masks)


def fcn_forward(model: GcnModel, x, dropout_masks=None):
    """The gcn forward with the aggregation removed (plain dense layers)."""
    return _forward(model, None, x, dropout_masks)


def cheby_forward(model: GcnModel, graph: Graph, x, dropout_masks=None):
    """Chebyshev-filter forward on the rescaled symmetric Laplacian."""
    return _forward(model, scaled_laplacian(graph), x, dropout_masks)


def power_iteration_lambda_max(m: sp.spmatrix, tol: float = 1e-9, max_iter: int = 1000) -> float:
    """Dominant eigenvalue by power iteration with a fixed start vector."""
    n = m.shape[0]
    if n == 1:
        return float(m.diagonal()[0])
    v = 1.0 + np.arange(n) / n  # deterministic, not orthogonal to anything special
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = m @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        lam_new = float(v @ (m @ v))
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            return lam_new
        lam = lam_new
    raise RuntimeError(f"power iteration did not converge in {max_iter} iterations")


def scaled_laplacian(g: Graph) -> sp.csr_matrix:
    """2 L_sym / lambda_max - I, pushing the spectrum into [-1, 1]."""
    l_sym = graphcore.laplacian(g, "sym")
    # the estimate can undershoot by O(tol); pad so the spectrum stays inside
    lam_max = power_iteration_lambda_max(l_sym) * (1.0 + 1e-6)
    out = ((2.0 / lam_max) * l_sym - sp.identity(g.n, format="csr")).tocsr()
    out.sort_indices()
    return out


def cross_entropy_loss(
    z: np.ndarray,
    labels: LabelSplit,
    l2_weight: float = 0.0,
    weights: list[np.ndarray] | None = None,
) -> float:
    """Summed cross entropy over labeled vertices, plus l2/2 * ||W||_F^2 terms."""
    if labels.n_train == 0:
        raise ValueError("no labeled vertices")
    picked = z[labels.train_idx, labels.train_classes]
    loss = -float(np.sum(np.log(np.maximum(picked, LOG_CLAMP))))
    if l2_weight and weights:
        loss += 0.5 * l2_weight * sum(float(np.sum(w * w)) for w in weights)
    return loss


def backward(
    cache: ForwardCache,
    labels: LabelSplit,
    model: GcnModel,
    operator=None,
    l2_weight: float = 0.0,
) -> list[list[np.ndarray]]:
    """Exact gradients of :func:`cross_entropy_loss` w.r.t. every weight matrix.

    ``operator`` is the same aggregation matrix the forward used (A^ for
    gcn, the rescaled Laplacian for cheby, ignored for fcn); both are
    symmetric, which the transposes below rely on.
    """
    z = cache.z
    n, n_classes = z.shape
    delta = np.zeros_like(z)
    delta[labels.train_idx] = z[labels.train_idx]
    delta[labels.train_idx, labels.train_classes] -= 1.0

    grads: list[list[np.ndarray]] = [None] * model.n_layers
    for layer in range(model.n_layers - 1, -1, -1):
        layer_cache = cache.layers[layer]
        w_list = model.weights[layer]
        grads[layer] = [
            np.asarray(u.T @ delta) for u in layer_cache.aggregated
        ]
        if layer == 0:
            break
        # pull delta back through the aggregation, the dropout mask, and ReLU
        back = None
        for w, k in zip(w_list, range(len(w_list))):
            dw = delta @ w.T
            if model.arch == "gcn":
                term = operator @ dw
            elif model.arch == "fcn":
                term = dw
            else:
                term = _cheby_apply(operator, dw, k)[k]
            back = term if back is None else back + term
        mask = cache.masks[layer] if cache.masks is not None else None
        if mask is not None:
            back = back * mask
        delta = back * (cache.layers[layer - 1].preact > 0.0)

    if l2_weight:
        for w, gw in zip(model.weights[0], grads[0]):
            gw += l2_weight * w
    return grads


def adam_step(
    weights: list[np.ndarray],
    grads: list[np.ndarray],
    state: AdamState,
    lr: float,
) -> tuple[list[np.ndarray], AdamState]:
    """One bias-corrected Adam update over a flat list of weight matrices."""
    t = state.t + 1
    new_w, new_m, new_v = [], [], []
    for w, g, m, v in zip(weights, grads, state.m, state.v):
        m = ADAM_BETA1 * m + (1.0 - ADAM_BETA1) * g
        v = ADAM_BETA2 * v + (1.0 - ADAM_BETA2) * (g * g)
        m_hat = m / (1.0 - ADAM_BETA1**t)
        v_hat = v / (1.0 - ADAM_BETA2**t)
        new_w.append(w - lr * m_hat / (np.sqrt(v_hat) + ADAM_EPS))
        new_m.append(m)
        new_v.append(v)
    return new_w, AdamState(m=new_m, v=new_v, t=t)


def normalize_feature_rows(x):
    """Scale each feature row to sum 1 (zero rows stay zero)."""
    if sp.issparse(x):
        sums = np.asarray(x.sum(axis=1)).ravel()
        scale = np.zeros_like(sums)
        scale[sums > 0] = 1.0 / sums[sums > 0]
        return (sp.diags(scale, format="csr") @ x).tocsr()
    sums = x.sum(axis=1, keepdims=True)
    return np.divide(x, sums, out=np.zeros_like(x, dtype=np.float64), where=sums > 0)


def init_model(
    n_features: int,
    n_classes: int,
    cfg: TrainConfig,
    arch: str,
    rng: np.random.Generator,
) -> GcnModel:
    dims = [n_features] + [cfg.hidden_dim] * (cfg.n_layers - 1) + [n_classes]
    per_layer = cfg.cheby_order + 1 if arch == "cheby" else 1
    weights = [
        [glorot_init(dims[layer], dims[layer + 1], rng) for _ in range(per_layer)]
        for layer in range(cfg.n_layers)
    ]
    return GcnModel(
        weights=weights,
        layer_dims=dims,
        arch=arch,
        cheby_order=cfg.cheby_order if arch == "cheby" else 0,
    )


def _unflatten(flat: list[np.ndarray], template: list[list[np.ndarray]]):
    out, i = [], 0
    for layer in template:
        out.append(flat[i : i + len(layer)])
        i += len(layer)
    return out


def train(
    dataset,
    split: LabelSplit,
    cfg: TrainConfig,
    arch: str = "gcn",
    a_hat: sp.csr_matrix | None = None,
    initial_model: GcnModel | None = None,
) -> TrainResult:
    """Full-batch training with fresh dropout masks per epoch.

    ``dataset`` needs .features / .class_count, .graph when the aggregation
    operator is not supplied, and .labels only when validation-based early
    stopping is on — those reads go through :class:`GuardedLabels`, so the
    loop can never touch test-set ground truth. With
    ``cfg.early_stopping = w`` the loop stops once the validation loss
    exceeds the mean of the previous w validation losses; otherwise it runs
    all epochs and keeps the final parameters.
    """
    if arch not in ("gcn", "fcn", "cheby"):
        raise ValueError(f"unknown architecture {arch!r}")
    rng = np.random.default_rng(cfg.seed)
    x = dataset.features
    if cfg.normalize_features:
        x = normalize_feature_rows(x)
    operator = None
    if arch == "gcn":
        operator = a_hat if a_hat is not None else graphcore.sym_normalize_with_self_loops(dataset.graph)
    elif arch == "cheby":
        operator = a_hat if a_hat is not None else scaled_laplacian(dataset.graph)

    if initial_model is not None:
        if initial_model.arch != arch:
            raise ValueError(
                f"warm start has arch {initial_model.arch!r}, requested {arch!r}"
            )
        model = GcnModel(
            weights=[[w.copy() for w in layer] for layer in initial_model.weights],
            layer_dims=list(initial_model.layer_dims),
            arch=initial_model.arch,
            cheby_order=initial_model.cheby_order,
        )
    else:
        model = init_model(x.shape[1], dataset.class_count, cfg, arch, rng)

    use_validation = cfg.early_stopping is not None
    if use_validation:
        if len(split.validation) == 0:
            raise ValueError("early stopping requested but the split has no validation set")
        guard = GuardedLabels(dataset.labels, allowed=split.validation)
        val_split = LabelSplit(
            train_idx=split.validation,
            train_classes=guard.take(split.validation),
        )

    flat = model.flat_weights()
    state = AdamState.zeros_like(flat)
    loss_history: list[float] = []
    val_losses: list[float] = []
    epochs_run = 0
    window = cfg.early_stopping if use_validation else 0
    for epoch in range(cfg.max_epochs):
        masks = make_dropout_masks(x, model.layer_dims, cfg.dropout_rate, rng)
        z, cache = _forward(model, operator, x, masks)
        loss = cross_entropy_loss(z, split, cfg.l2_weight, model.first_layer_weights())
        if np.isnan(loss):
            raise TrainingDivergedError(epoch)
        loss_history.append(loss)
        grads = backward(cache, split, model, operator, cfg.l2_weight)
        flat, state = adam_step(
            flat, [g for layer in grads for g in layer], state, cfg.learning_rate
        )
        model.weights = _unflatten(flat, model.weights)
        epochs_run = epoch + 1
        if use_validation:
            z_eval, _ = _forward(model, operator, x)
            val_losses.append(cross_entropy_loss(z_eval, val_split))
            if len(val_losses) > window and val_losses[-1] > float(
                np.mean(val_losses[-(window + 1) : -1])
            ):
                break

    z_final, _ = _forward(model, operator, x)
    return TrainResult(
        model=model,
        loss_history=loss_history,
        epochs_run=epochs_run,
        softmax_outputs=z_final,
    )


def predict_accuracy(z: np.ndarray, true_labels: np.ndarray, eval_indices) -> float:
    """Fraction of eval vertices whose argmax row matches the true label."""
    eval_indices = np.asarray(eval_indices, dtype=np.int64)
    if len(eval_indices) == 0:
        raise ValueError("empty evaluation set")
    predictions = np.argmax(z[eval_indices], axis=1)
    return float(np.mean(predictions == np.asarray(true_labels)[eval_indices]))


CHECKPOINT_MAGIC = "gcnlab-checkpoint 1"


def save_checkpoint(model: GcnModel, path) -> None:
    """Self-describing text checkpoint: magic, arch, dims, row-major decimals."""
    lines = [
        CHECKPOINT_MAGIC,
        f"arch {model.arch}",
        f"cheby_order {model.cheby_order}",
        "layer_dims " + " ".join(str(d) for d in model.layer_dims),
    ]
    flat = model.flat_weights()
    lines.append(f"n_matrices {len(flat)}")
    for w in flat:
        lines.append(f"matrix {w.shape[0]} {w.shape[1]}")
        for row in w:
            lines.append(" ".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def load_checkpoint(path) -> GcnModel:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: not a gcnlab checkpoint")
    arch = lines[1].split()[1]
    cheby_order = int(lines[2].split()[1])
    layer_dims = [int(s) for s in lines[3].split()[1:]]
    n_matrices = int(lines[4].split()[1])
    pos = 5
    flat = []
    for _ in range(n_matrices):
        _, r, c = lines[pos].split()
        r, c = int(r), int(c)
        rows = [
            np.array([float(t) for t in lines[pos + 1 + i].split()]) for i in range(r)
        ]
        flat.append(np.vstack(rows).reshape(r, c))
        pos += 1 + r
    per_layer = cheby_order + 1 if arch == "cheby" else 1
    n_layers = len(layer_dims) - 1
    weights = [flat[i * per_layer : (i + 1) * per_layer] for i in range(n_layers)]
    return GcnModel(weights=weights, layer_dims=layer_dims, arch=arch, cheby_order=cheby_order)
