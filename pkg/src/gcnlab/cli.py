"""Command-line front end: benchmark sweeps, over-smoothing demo, single runs.

Every benchmark cell (method x rate x run) derives its seed from the base
seed plus a deterministic offset, so reruns reproduce runs.csv byte for
byte; wall-clock measurements live in a separate timings.csv because they
never can.
"""

from __future__ import annotations

import csv
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click
import numpy as np

from . import data as data_mod
from . import graphcore, nn, pipelines, smoothing

METHOD_ALIASES = {
    "lp": "lp",
    "gcn-v": "gcn_v",
    "gcn_v": "gcn_v",
    "gcn+v": "gcn_plus_v",
    "gcn_plus_v": "gcn_plus_v",
    "cheby": "cheby",
    "cotrain": "cotrain",
    "co-training": "cotrain",
    "selftrain": "selftrain",
    "self-training": "selftrain",
    "union": "union",
    "intersection": "intersection",
}

SVG_PALETTE = (
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd",
    "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f",
)


def resolve_dataset_dir(arg: str) -> Path:
    """A literal directory, or a name under $GCNLAB_DATA (default ./fixtures)."""
    p = Path(arg)
    if p.is_dir():
        return p
    root = Path(os.environ.get("GCNLAB_DATA", "fixtures"))
    candidate = root / arg
    if candidate.is_dir():
        return candidate
    raise click.UsageError(f"dataset {arg!r} not found (looked at {p} and {candidate})")


def _parse_methods(spec: str) -> list[str]:
    methods = []
    for name in spec.split(","):
        key = name.strip().lower()
        if key not in METHOD_ALIASES:
            raise click.UsageError(
                f"unknown method {name!r}; known: {sorted(set(METHOD_ALIASES))}"
            )
        methods.append(METHOD_ALIASES[key])
    return methods


@click.group()
def main():
    """Semi-supervised graph learning experiments."""


# one dataset per worker process, loaded once
_WORKER_DS = None


def _worker_init(dataset_dir: str):
    global _WORKER_DS
    _WORKER_DS = data_mod.load_dataset(dataset_dir)


def _run_cell(cell: dict) -> dict:
    ds = _WORKER_DS if _WORKER_DS is not None else data_mod.load_dataset(cell["dataset_dir"])
    started = time.perf_counter()
    method = cell["method"]
    split = data_mod.sample_split(
        ds,
        per_class=cell["per_class"],
        label_rate=cell["rate"],
        validation_size=cell["validation_size"] if method == "gcn_plus_v" else 0,
        test_size=cell["test_size"],
        seed=cell["seed"],
    )
    cfg = pipelines.StrategyConfig(
        method=method,
        budget_multiplier=cell["budget_multiplier"],
        train_cfg=nn.TrainConfig(
            seed=cell["seed"], normalize_features=cell["normalize_features"]
        ),
    )
    outcome = pipelines.run_strategy(ds, split, cfg)
    accuracy = nn.predict_accuracy(outcome.scores, ds.labels, split.test)
    wall_ms = int(round((time.perf_counter() - started) * 1000))
    losses = outcome.train_result.loss_history if outcome.train_result else None
    return {
        "key": cell["key"],
        "method": method,
        "dataset": ds.name,
        "rate": cell["rate_key"],
        "seed": cell["seed"],
        "accuracy": f"{accuracy:.6f}",
        "labels_added": outcome.labels_added,
        "epochs": outcome.epochs,
        "wall_ms": wall_ms,
        "losses": losses,
    }


@main.command()
@click.option("--dataset", "dataset_arg", required=True, help="dataset directory or name under $GCNLAB_DATA")
@click.option("--method", "methods_spec", default="gcn_v", show_default=True, help="comma-separated method list")
@click.option("--rate", "rates_spec", default=None, help="comma-separated label rates, e.g. 0.005,0.01")
@click.option("--per-class", type=int, default=None, help="labels per class (alternative to --rate)")
@click.option("--runs", default=10, show_default=True, help="runs per cell")
@click.option("--seed", "seed_base", default=0, show_default=True)
@click.option("--jobs", default=1, show_default=True, help="parallel worker processes")
@click.option("--out", "out_dir", default="bench_out", show_default=True)
@click.option("--budget-multiplier", default=3.0, show_default=True)
@click.option("--no-feature-normalize", is_flag=True)
@click.option("--validation-size", default=500, show_default=True, help="validation labels for gcn+v")
@click.option("--test-size", default=1000, show_default=True)
def bench(
    dataset_arg,
    methods_spec,
    rates_spec,
    per_class,
    runs,
    seed_base,
    jobs,
    out_dir,
    budget_multiplier,
    no_feature_normalize,
    validation_size,
    test_size,
):
    """Run a (method x rate x seed) sweep and write runs.csv plus table.md."""
    methods = _parse_methods(methods_spec)
    if (rates_spec is None) == (per_class is None):
        raise click.UsageError("specify exactly one of --rate / --per-class")
    if rates_spec is not None:
        rate_specs = [(float(tok), None, f"{float(tok):g}") for tok in rates_spec.split(",")]
    else:
        rate_specs = [(None, per_class, f"pc{per_class}")]
    if runs < 1:
        raise click.UsageError("--runs must be at least 1")
    dataset_dir = resolve_dataset_dir(dataset_arg)

    cells = []
    for method in methods:
        for rate_idx, (rate, pc, rate_key) in enumerate(rate_specs):
            for run in range(runs):
                cells.append(
                    {
                        "key": (method, rate_key, run),
                        "dataset_dir": str(dataset_dir),
                        "method": method,
                        "rate": rate,
                        "per_class": pc,
                        "rate_key": rate_key,
                        "seed": seed_base + 1009 * rate_idx + run,
                        "validation_size": validation_size,
                        "test_size": test_size,
                        "budget_multiplier": budget_multiplier,
                        "normalize_features": not no_feature_normalize,
                    }
                )

    results, failures = {}, {}
    if jobs > 1:
        with ProcessPoolExecutor(
            max_workers=jobs, initializer=_worker_init, initargs=(str(dataset_dir),)
        ) as pool:
            futures = {pool.submit(_run_cell, cell): cell["key"] for cell in cells}
            for future, key in futures.items():
                try:
                    results[key] = future.result()
                except Exception as exc:  # cell failures recorded, run continues
                    failures[key] = str(exc)
    else:
        _worker_init(str(dataset_dir))
        for cell in cells:
            try:
                results[cell["key"]] = _run_cell(cell)
            except Exception as exc:
                failures[cell["key"]] = str(exc)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ordered_keys = sorted(results)
    with open(out / "runs.csv", "w", newline="\n") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["method", "dataset", "rate", "seed", "accuracy", "labels_added", "epochs"])
        for key in ordered_keys:
            r = results[key]
            writer.writerow(
                [r["method"], r["dataset"], r["rate"], r["seed"], r["accuracy"], r["labels_added"], r["epochs"]]
            )
    with open(out / "timings.csv", "w", newline="\n") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["method", "rate", "seed", "wall_ms"])
        for key in ordered_keys:
            r = results[key]
            writer.writerow([r["method"], r["rate"], r["seed"], r["wall_ms"]])

    losses_dir = out / "losses"
    for key in ordered_keys:
        r = results[key]
        if r["losses"]:
            losses_dir.mkdir(exist_ok=True)
            with open(losses_dir / f"{r['method']}_{r['rate']}_{r['seed']}.csv", "w", newline="\n") as f:
                writer = csv.writer(f, lineterminator="\n")
                writer.writerow(["epoch", "loss"])
                for epoch, loss in enumerate(r["losses"]):
                    writer.writerow([epoch, repr(loss)])

    rate_keys = [spec[2] for spec in rate_specs]
    table = ["| Method | " + " | ".join(rate_keys) + " |", "|" + "---|" * (len(rate_keys) + 1)]
    for method in methods:
        row = [method]
        for rate_key in rate_keys:
            accs = [
                float(results[k]["accuracy"])
                for k in ordered_keys
                if k[0] == method and k[1] == rate_key
            ]
            row.append(f"{100.0 * np.mean(accs):.1f}" if accs else "fail")
        table.append("| " + " | ".join(row) + " |")
    (out / "table.md").write_text("\n".join(table) + "\n")

    click.echo(f"{len(results)} cells done, {len(failures)} failed -> {out}")
    for key, message in sorted(failures.items()):
        click.echo(f"  FAILED {key}: {message}", err=True)
    if failures:
        sys.exit(1)


def _write_svg(points: np.ndarray, classes: np.ndarray, path: Path) -> None:
    """Deterministic scatter plot, colored by class."""
    lo = points.min(axis=0)
    hi = points.max(axis=0)
    span = np.where(hi - lo > 0, hi - lo, 1.0)
    size, margin = 400.0, 20.0
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{int(size)}" height="{int(size)}" '
        f'viewBox="0 0 {int(size)} {int(size)}">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    for v in range(points.shape[0]):
        x = margin + (points[v, 0] - lo[0]) / span[0] * (size - 2 * margin)
        y = size - margin - (points[v, 1] - lo[1]) / span[1] * (size - 2 * margin)
        color = SVG_PALETTE[int(classes[v]) % len(SVG_PALETTE)]
        lines.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="4" fill="{color}"/>')
    lines.append("</svg>")
    path.write_text("\n".join(lines) + "\n")


@main.command("smooth-demo")
@click.option("--graph", "graph_path", default=None, help="edge list file; default: bundled karate club")
@click.option("--layers", default=5, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--iterations", default=1000, show_default=True, help="smoothing steps for the convergence profile")
@click.option("--out", "out_dir", default="smooth_out", show_default=True)
def smooth_demo(graph_path, layers, seed, iterations, out_dir):
    """Untrained embeddings per depth plus an over-smoothing convergence profile."""
    if layers > 10:
        raise click.UsageError("--layers must be at most 10")
    if graph_path is None:
        g, classes = smoothing.karate_club()
    else:
        edges = []
        for line in Path(graph_path).read_text().splitlines():
            if line.strip():
                u, v = line.split()[:2]
                edges.append((int(u), int(v), 1.0))
        n = max(max(u, v) for u, v, _ in edges) + 1
        g = graphcore.build_graph(n, edges)
        classes, _ = graphcore.connected_components(g)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    embeddings = smoothing.untrained_embeddings(g, layers, seed)
    for depth, emb in enumerate(embeddings, start=1):
        smoothing.write_embedding_csv(emb, classes, out / f"embedding_layers_{depth}.csv")
        _write_svg(emb, classes, out / f"embedding_layers_{depth}.svg")

    rng = np.random.default_rng(seed)
    x = rng.standard_normal(g.n)
    profile = smoothing.convergence_profile(
        x, g, smoothing.SmoothingConfig(gamma=1.0, kind="rw", iterations=iterations)
    )
    smoothing.write_profile_csv(profile, out / "convergence.csv")
    click.echo(
        f"wrote {layers} embeddings and convergence.csv "
        f"(final deviation {profile[-1][1]:.3e}) -> {out}"
    )


@main.command()
@click.option("--dataset", "dataset_arg", required=True)
@click.option("--method", "method_spec", default="gcn_v", show_default=True)
@click.option("--rate", type=float, default=None)
@click.option("--per-class", type=int, default=None)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "out_dir", default="train_out", show_default=True)
@click.option("--budget-multiplier", default=3.0, show_default=True)
@click.option("--no-feature-normalize", is_flag=True)
@click.option("--validation-size", default=500, show_default=True)
@click.option("--test-size", default=1000, show_default=True)
def train(
    dataset_arg,
    method_spec,
    rate,
    per_class,
    seed,
    out_dir,
    budget_multiplier,
    no_feature_normalize,
    validation_size,
    test_size,
):
    """Train one configuration; print accuracy and write checkpoint + loss curve."""
    methods = _parse_methods(method_spec)
    if len(methods) != 1:
        raise click.UsageError("train takes exactly one --method")
    method = methods[0]
    if (rate is None) == (per_class is None):
        raise click.UsageError("specify exactly one of --rate / --per-class")
    ds = data_mod.load_dataset(resolve_dataset_dir(dataset_arg))
    split = data_mod.sample_split(
        ds,
        per_class=per_class,
        label_rate=rate,
        validation_size=validation_size if method == "gcn_plus_v" else 0,
        test_size=test_size,
        seed=seed,
    )
    cfg = pipelines.StrategyConfig(
        method=method,
        budget_multiplier=budget_multiplier,
        train_cfg=nn.TrainConfig(seed=seed, normalize_features=not no_feature_normalize),
    )
    outcome = pipelines.run_strategy(ds, split, cfg)
    accuracy = nn.predict_accuracy(outcome.scores, ds.labels, split.test)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if outcome.train_result is not None:
        nn.save_checkpoint(outcome.train_result.model, out / "checkpoint.txt")
        with open(out / "loss.csv", "w", newline="\n") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["epoch", "loss"])
            for epoch, loss in enumerate(outcome.train_result.loss_history):
                writer.writerow([epoch, repr(loss)])
        click.echo(f"loss curve: {out / 'loss.csv'}")
        click.echo(f"checkpoint: {out / 'checkpoint.txt'}")
    click.echo(f"method={method} seed={seed} labels_added={outcome.labels_added}")
    click.echo(f"accuracy={accuracy:.4f}")


if __name__ == "__main__":
    main()
