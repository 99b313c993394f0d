"""Shared fixtures and oracles for the test suite."""

from pathlib import Path

import numpy as np
import pytest

from gcnlab import graphcore, nn, synth

FIXTURES = Path(__file__).parent / "fixtures"


def random_graph(rng: np.random.Generator, n: int, p: float) -> graphcore.Graph:
    """Erdos-Renyi graph; may be disconnected, never has self-loops."""
    edges = []
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < p:
                edges.append((u, v, 1.0))
    return graphcore.build_graph(n, edges)


def random_connected_graph(rng: np.random.Generator, n: int, p: float) -> graphcore.Graph:
    """Random graph plus a random spanning tree so it is connected."""
    edges = set()
    order = rng.permutation(n)
    for i in range(1, n):
        u = int(order[i])
        v = int(order[rng.integers(0, i)])
        edges.add((min(u, v), max(u, v)))
    for u in range(n):
        for v in range(u + 1, n):
            if rng.random() < p:
                edges.add((u, v))
    return graphcore.build_graph(n, [(u, v, 1.0) for u, v in sorted(edges)])


def components_oracle(g: graphcore.Graph) -> tuple[np.ndarray, int]:
    """Brute-force transitive closure."""
    n = g.n
    reach = (g.adjacency.toarray() > 0) | np.eye(n, dtype=bool)
    for _ in range(n):
        reach = reach | (reach @ reach)
    labels = np.full(n, -1, dtype=np.int64)
    k = 0
    for v in range(n):
        if labels[v] < 0:
            labels[reach[v]] = k
            k += 1
    return labels, k


def grad_check(arch: str, n_layers: int, seed: int = 0, dropout: bool = True,
               cheby_order: int = 2, n: int = 10, n_features: int = 5,
               n_classes: int = 3) -> float:
    """Max relative error between analytic and central-difference gradients."""
    rng = np.random.default_rng(seed)
    g = random_connected_graph(rng, n, 0.3)
    if arch == "gcn":
        operator = graphcore.sym_normalize_with_self_loops(g)
    elif arch == "cheby":
        operator = nn.scaled_laplacian(g)
    else:
        operator = None
    x = rng.standard_normal((n, n_features))
    from gcnlab.data import LabelSplit

    labeled = rng.choice(n, size=n_classes, replace=False)
    split = LabelSplit(train_idx=labeled, train_classes=np.arange(n_classes))
    cfg = nn.TrainConfig(n_layers=n_layers, hidden_dim=4, cheby_order=cheby_order, seed=seed)
    model = nn.init_model(n_features, n_classes, cfg, arch, rng)
    masks = nn.make_dropout_masks(
        x, model.layer_dims, 0.5 if dropout else 0.0, np.random.default_rng(seed + 1)
    )
    l2 = 5e-4

    def loss():
        z, _ = nn._forward(model, operator, x, masks)
        return nn.cross_entropy_loss(z, split, l2, model.first_layer_weights())

    z, cache = nn._forward(model, operator, x, masks)
    grads = nn.backward(cache, split, model, operator, l2)
    flat_g = [gmat for layer in grads for gmat in layer]
    flat_w = model.flat_weights()
    h = 1e-5
    max_err = 0.0
    for w, gmat in zip(flat_w, flat_g):
        for idx in np.ndindex(*w.shape):
            orig = w[idx]
            w[idx] = orig + h
            lp = loss()
            w[idx] = orig - h
            lm = loss()
            w[idx] = orig
            fd = (lp - lm) / (2.0 * h)
            err = abs(gmat[idx] - fd) / max(1.0, abs(gmat[idx]), abs(fd))
            max_err = max(max_err, err)
    return max_err


@pytest.fixture(scope="session")
def toy_dir() -> Path:
    return FIXTURES / "toy"


@pytest.fixture(scope="session")
def toy_dataset(toy_dir):
    from gcnlab.data import load_dataset

    return load_dataset(toy_dir)


@pytest.fixture(scope="session")
def sbm_dataset():
    """150-vertex planted partition, 3 classes: big enough to learn, fast to train."""
    return synth.planted_partition_dataset(n_per_class=50, n_classes=3, seed=11, name="sbm150")


@pytest.fixture(scope="session")
def sbm_dir(tmp_path_factory, sbm_dataset):
    from gcnlab.data import write_dataset

    path = tmp_path_factory.mktemp("data") / "sbm150"
    write_dataset(sbm_dataset, path)
    return path
