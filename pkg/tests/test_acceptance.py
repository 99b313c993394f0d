"""Acceptance suite: one test per exit criterion, one printed line each.

Criteria tied to the real citation benchmarks resolve their dataset
directory under $GCNLAB_DATA (or ./fixtures). Those datasets ship with the
upstream sources, not this repo; produce them with the converter package
(see README). When a dataset is missing, the criterion reports BLOCKED and
skips — it never fakes a pass. Run with ``pytest tests/test_acceptance.py -s``
to watch the lines live.
"""

import os
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import grad_check, random_connected_graph, random_graph
from gcnlab import graphcore as gc
from gcnlab import nn, parwalks as pw, pipelines as pl
from gcnlab import smoothing as sm
from gcnlab.data import load_dataset, sample_split
from gcnlab.synth import planted_partition_dataset

N_RUNS = 10
SEEDS = list(range(N_RUNS))


def report(criterion: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}", flush=True)
    assert ok, f"{criterion}: {detail}"


def blocked(criterion: str, reason: str) -> None:
    print(f"[BLOCKED] {criterion}: {reason}", flush=True)
    pytest.skip(f"{criterion}: {reason}")


def dataset_or_blocked(criterion: str, name: str):
    root = Path(os.environ.get("GCNLAB_DATA", Path(__file__).parent.parent / "fixtures"))
    directory = root / name
    if not (directory / "meta.json").is_file():
        blocked(
            criterion,
            f"{name} fixture not found under {root} (unobtainable in this environment; "
            "convert the upstream bundle with the converter package)",
        )
    return load_dataset(directory)


def run_accuracy(ds, method: str, seeds, *, rate=None, per_class=None,
                 validation_size=500, test_size=1000, train_overrides=None):
    accs = []
    for seed in seeds:
        split = sample_split(
            ds,
            per_class=per_class,
            label_rate=rate,
            validation_size=validation_size if method == "gcn_plus_v" else 0,
            test_size=test_size,
            seed=seed,
        )
        overrides = train_overrides or {}
        cfg = pl.StrategyConfig(method=method, train_cfg=nn.TrainConfig(seed=seed, **overrides))
        out = pl.run_strategy(ds, split, cfg)
        accs.append(nn.predict_accuracy(out.scores, ds.labels, split.test))
    return np.asarray(accs)


def train_accuracy(ds, arch: str, n_layers: int, seeds):
    """Plain training without validation (the no-validation table protocol)."""
    accs = []
    for seed in seeds:
        split = sample_split(ds, per_class=20, validation_size=0, test_size=1000, seed=seed)
        cfg = nn.TrainConfig(n_layers=n_layers, seed=seed)
        result = nn.train(ds, split, cfg, arch=arch)
        accs.append(nn.predict_accuracy(result.softmax_outputs, ds.labels, split.test))
    return np.asarray(accs)


def within(values, target, tol):
    mean = float(np.mean(values))
    return abs(mean - target) <= tol, mean


class TestTable1Replication:
    def test_cora_20_per_class_architectures(self):
        criterion = "table1 (Cora, 20 labels/class)"
        ds = dataset_or_blocked(criterion, "cora")
        started = time.perf_counter()
        checks = [
            ("1-layer GCN", "gcn", 1, 0.708, 0.03),
            ("2-layer GCN", "gcn", 2, 0.798, 0.03),
            ("1-layer FCN", "fcn", 1, 0.531, 0.04),
            ("2-layer FCN", "fcn", 2, 0.559, 0.04),
        ]
        details, ok = [], True
        for label, arch, n_layers, target, tol in checks:
            good, mean = within(train_accuracy(ds, arch, n_layers, SEEDS), target, tol)
            ok &= good
            details.append(f"{label} {mean:.4f} (want {target}±{tol})")
        elapsed = time.perf_counter() - started
        ok &= elapsed < 600.0
        report(criterion, ok, "; ".join(details) + f"; {elapsed:.0f}s (< 600s)")


class TestTable5Slice:
    def test_twenty_labels_per_class(self):
        criterion = "table5 slice (20 labels/class)"
        cora = dataset_or_blocked(criterion, "cora")
        citeseer = dataset_or_blocked(criterion, "citeseer")
        details, ok = [], True
        for label, ds, method, target in [
            ("Cora GCN+V", cora, "gcn_plus_v", 80.3),
            ("Cora GCN-V", cora, "gcn_v", 80.0),
            ("CiteSeer GCN+V", citeseer, "gcn_plus_v", 68.9),
        ]:
            accs = 100.0 * run_accuracy(ds, method, SEEDS, per_class=20)
            good, mean = within(accs, target, 2.0)
            ok &= good
            details.append(f"{label} {mean:.1f} (want {target}±2.0)")
        report(criterion, ok, "; ".join(details))


class TestCoraRateSweep:
    def test_rate_cells_and_union_margin(self):
        criterion = "Cora rate sweep"
        ds = dataset_or_blocked(criterion, "cora")
        details, ok = [], True
        cells = [
            ("LP 0.5%", "lp", 0.005, 56.4, 3.0),
            ("Union 0.5%", "union", 0.005, 58.5, 3.0),
            ("Union 5%", "union", 0.05, 81.7, 2.0),
            ("Co-training 1%", "cotrain", 0.01, 66.4, 3.0),
            ("Self-training 2%", "selftrain", 0.02, 73.8, 3.0),
        ]
        means = {}
        for label, method, rate, target, tol in cells:
            accs = 100.0 * run_accuracy(ds, method, SEEDS, rate=rate)
            good, mean = within(accs, target, tol)
            means[(method, rate)] = mean
            ok &= good
            details.append(f"{label} {mean:.1f} (want {target}±{tol})")
        for rate in (0.005, 0.01):
            union = means.get(("union", rate))
            if union is None:
                union = float(np.mean(100.0 * run_accuracy(ds, "union", SEEDS, rate=rate)))
            gcn_v = float(np.mean(100.0 * run_accuracy(ds, "gcn_v", SEEDS, rate=rate)))
            margin = union - gcn_v
            ok &= margin >= 8.0
            details.append(f"Union-GCN_V margin at {rate:g}: {margin:.1f} (want >= 8)")
        report(criterion, ok, "; ".join(details))


class TestCiteSeer:
    def test_intersection_cells(self):
        criterion = "CiteSeer intersection"
        ds = dataset_or_blocked(criterion, "citeseer")
        details, ok = [], True
        accs = 100.0 * run_accuracy(ds, "intersection", SEEDS, rate=0.05)
        good, mean = within(accs, 71.2, 2.0)
        ok &= good
        details.append(f"Intersection 5% {mean:.1f} (want 71.2±2.0)")
        for rate in (0.03, 0.04, 0.05):
            inter = float(np.mean(run_accuracy(ds, "intersection", SEEDS, rate=rate)))
            cotr = float(np.mean(run_accuracy(ds, "cotrain", SEEDS, rate=rate)))
            ok &= inter > cotr
            details.append(f"{rate:g}: intersection {100*inter:.1f} vs cotrain {100*cotr:.1f}")
        report(criterion, ok, "; ".join(details))


class TestPubMedOptional:
    def test_cotrain_cells(self):
        criterion = "PubMed co-training (optional)"
        ds = dataset_or_blocked(criterion, "pubmed")
        details, ok = [], True
        accs = 100.0 * run_accuracy(ds, "cotrain", SEEDS, rate=0.0005)
        good, mean = within(accs, 68.3, 3.0)
        ok &= good
        details.append(f"Co-training 0.05% {mean:.1f} (want 68.3±3.0)")
        for rate in (0.0003, 0.0005, 0.001, 0.003):
            cotr = float(np.mean(run_accuracy(ds, "cotrain", SEEDS, rate=rate)))
            self_t = float(np.mean(run_accuracy(ds, "selftrain", SEEDS, rate=rate)))
            ok &= cotr > self_t
            details.append(f"{rate:g}: cotrain {100*cotr:.1f} vs selftrain {100*self_t:.1f}")
        report(criterion, ok, "; ".join(details))


class TestSmoothingLimitSuite:
    def test_fifty_random_connected_graphs(self):
        criterion = "over-smoothing limit suite"
        worst = {"rw": 0.0, "sym": 0.0}
        for i in range(50):
            rng = np.random.default_rng(1000 + i)
            n = int(rng.integers(5, 101))
            g = random_connected_graph(rng, n, 0.08)
            x = rng.standard_normal(n)
            gamma = float(rng.uniform(0.5, 1.0))
            for kind in ("rw", "sym"):
                cfg = sm.SmoothingConfig(gamma=gamma, kind=kind, iterations=2000)
                profile = sm.convergence_profile(x, g, cfg)
                worst[kind] = max(worst[kind], profile[-1][1])
        ok = worst["rw"] < 1e-6 and worst["sym"] < 1e-6
        detail = f"worst final deviation rw {worst['rw']:.2e}, sym {worst['sym']:.2e} (< 1e-6)"

        # multi-component graphs: per-component limits, cross-component values differ
        cross_ok = True
        for i in range(10):
            rng = np.random.default_rng(2000 + i)
            a = random_connected_graph(rng, 20, 0.2)
            b = random_connected_graph(rng, 15, 0.2)
            edges = [(u, v, 1.0) for u, v in zip(*a.adjacency.nonzero()) if u < v]
            edges += [(u + 20, v + 20, 1.0) for u, v in zip(*b.adjacency.nonzero()) if u < v]
            g = gc.build_graph(35, edges)
            x = np.concatenate([rng.standard_normal(20), 5.0 + rng.standard_normal(15)])
            out = sm.smooth_iterate(x, g, sm.SmoothingConfig(gamma=1.0, kind="rw", iterations=2000))
            within_spread = max(out[:20].max() - out[:20].min(), out[20:].max() - out[20:].min())
            across = abs(out[:20].mean() - out[20:].mean())
            cross_ok &= within_spread < 1e-6 and across > 1e-3
        ok &= cross_ok
        report(criterion, ok, detail + f"; per-component limits differ across components: {cross_ok}")


class TestGradientCorrectness:
    def test_all_architectures(self):
        criterion = "gradient correctness"
        errors = {}
        for arch, n_layers in [("gcn", 1), ("gcn", 2), ("gcn", 3), ("fcn", 2), ("cheby", 2)]:
            errors[f"{arch}-{n_layers}"] = grad_check(arch, n_layers, seed=5, dropout=True)
        worst = max(errors.values())
        detail = ", ".join(f"{k} {v:.2e}" for k, v in errors.items()) + " (< 1e-5)"
        report(criterion, worst < 1e-5, detail)


class TestParWalksSolver:
    def test_cg_oracle_and_matrix_invariants(self):
        criterion = "parwalks solver"
        worst_err = 0.0
        for i in range(20):
            rng = np.random.default_rng(3000 + i)
            n = int(rng.integers(2, 51))
            g = random_graph(rng, n, 0.2)
            sys = pw.absorption_system(
                g, alpha=float(rng.uniform(0.5, 2.0)), lambda_diag=rng.uniform(0.5, 2.0, n)
            )
            rhs = rng.standard_normal(n)
            x = pw.cg_solve(sys, rhs, tol=1e-12)
            dense = sys.laplacian.toarray() + np.diag(sys.alpha * sys.lambda_diag)
            expected = np.linalg.solve(dense, rhs)
            worst_err = max(
                worst_err, float(np.abs(x - expected).max() / max(1.0, np.abs(expected).max()))
            )

        sym_ok, nonneg_ok = True, True
        for i in range(20):
            rng = np.random.default_rng(4000 + i)
            n = int(rng.integers(2, 31))
            g = random_graph(rng, n, 0.25)
            sys = pw.absorption_system(g, alpha=0.05)
            i_v, j_v = rng.choice(n, size=2, replace=False)
            e_i = np.zeros(n); e_i[i_v] = 1.0
            e_j = np.zeros(n); e_j[j_v] = 1.0
            col_i = pw.cg_solve(sys, e_i, tol=1e-12)
            col_j = pw.cg_solve(sys, e_j, tol=1e-12)
            sym_ok &= abs(col_i[j_v] - col_j[i_v]) < 1e-8
            nonneg_ok &= col_i.min() >= -1e-12 and col_j.min() >= -1e-12
        ok = worst_err < 1e-8 and sym_ok and nonneg_ok
        report(
            criterion,
            ok,
            f"CG vs dense worst {worst_err:.2e} (< 1e-8); P symmetry {sym_ok}; nonnegativity {nonneg_ok}",
        )


class TestBenchDeterminism:
    def test_repeat_invocations_byte_identical(self, tmp_path):
        criterion = "cmd_bench determinism"
        from click.testing import CliRunner

        from gcnlab.cli import main
        from gcnlab.data import write_dataset

        ds = planted_partition_dataset(n_per_class=50, n_classes=3, seed=11, name="sbm150")
        ds_dir = tmp_path / "sbm150"
        write_dataset(ds, ds_dir)
        runner = CliRunner()
        outputs = []
        for out in (tmp_path / "a", tmp_path / "b"):
            result = runner.invoke(
                main,
                ["bench", "--dataset", str(ds_dir), "--method", "lp,gcn_v,union",
                 "--per-class", "4", "--runs", "2", "--seed", "3",
                 "--test-size", "30", "--validation-size", "15", "--out", str(out)],
            )
            assert result.exit_code == 0, result.output
            outputs.append((out / "runs.csv").read_bytes())
        ok = outputs[0] == outputs[1]
        report(criterion, ok, f"runs.csv byte-identical across invocations: {ok}")
