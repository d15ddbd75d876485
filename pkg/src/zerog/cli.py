"""Command-line entry points for the zero-shot graph transfer pipeline."""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path

import click
import numpy as np

from .adapter import LowRankAdapter
from .aggregate import AggregationConfig
from .config import load_config
from .embeddings import EmbeddingTable
from .errors import ZeroGError
from .graphdata import load_dataset
from .loss import gradient_check
from .pipeline import (
    _reload_adapter,
    run_ablation,
    run_inference,
    run_pretrain,
    trainable_parameter_count,
)
from .report import (
    text_table,
    write_ablation_report,
    write_eval_reports,
    write_training_figures,
)
from .sampler import Subgraph, attach_prompt, extract_khop, sample_stats
from .synth import SynthSpec, generate_synthetic

logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")


@click.group()
def main():
    """Zero-shot cross-dataset node classification for text-attributed graphs."""


def _run(fn):
    try:
        fn()
    except ZeroGError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(exc.exit_code)


@main.command("pretrain")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def pretrain_cmd(config_path):
    """Pre-train the adapter on the configured source datasets."""

    def go():
        cfg = load_config(config_path)
        click.echo(f"trainable parameters: {trainable_parameter_count(cfg)}")
        ckpt, log = run_pretrain(cfg)
        write_training_figures(log.step_losses, cfg.output_dir)
        click.echo(f"checkpoint written to {ckpt}")

    _run(go)


@main.command("infer")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--checkpoint", required=True, type=click.Path(exists=True))
def infer_cmd(config_path, checkpoint):
    """Zero-shot inference on the configured target datasets."""

    def go():
        cfg = load_config(config_path)
        adapter = _reload_adapter(cfg, Path(checkpoint))
        reports = run_inference(cfg, adapter)
        path = write_eval_reports(reports, cfg.output_dir)
        for r in reports:
            click.echo(f"{r.dataset}: accuracy {r.accuracy:.4f} ({r.labeled_total} labeled)")
        click.echo(f"report written to {path}")

    _run(go)


@main.command("ablate")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def ablate_cmd(config_path):
    """Run the full model plus each ablation variant under a shared seed."""

    def go():
        cfg = load_config(config_path)
        results = run_ablation(cfg)
        path = write_ablation_report(results, cfg.output_dir)
        click.echo(Path(path).read_text(encoding="utf-8"))

    _run(go)


@main.command("sample-stats")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
def sample_stats_cmd(config_path):
    """Per-dataset subgraph candidate counts and size histogram."""

    def go():
        cfg = load_config(config_path)
        cfg.validate()
        graphs = [load_dataset(p) for p in cfg.source_datasets]
        rows = sample_stats(graphs, cfg.sampler)
        table = [
            [r["dataset"], str(r["candidates"]), str(r["kept"]),
             json.dumps(r["size_histogram"])]
            for r in rows
        ]
        click.echo(text_table(table, ["dataset", "candidates", "kept", "sizes"]))

    _run(go)


@main.command("synth")
@click.option("--spec", "spec_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", default="synthetic", type=click.Path())
def synth_cmd(spec_path, out_dir):
    """Generate synthetic benchmark datasets from a JSON spec file."""

    def go():
        raw = json.loads(Path(spec_path).read_text(encoding="utf-8"))
        spec = SynthSpec(**raw)
        paths = generate_synthetic(spec, out_dir)
        for p in paths:
            click.echo(str(p))

    _run(go)


@main.command("gradcheck")
@click.option("--seed", default=0, type=int)
@click.option("--instances", default=20, type=int)
def gradcheck_cmd(seed, instances):
    """Verify analytic gradients against central finite differences."""

    def go():
        worst = 0.0
        rng = np.random.default_rng(seed)
        for i in range(instances):
            err = _random_gradcheck(rng, int(rng.integers(0, 2**31)))
            worst = max(worst, err)
            click.echo(f"instance {i}: max relative error {err:.3e}")
        click.echo(f"worst: {worst:.3e}")
        if worst >= 1e-4:
            sys.exit(1)

    _run(go)


def _random_gradcheck(rng, seed: int, n: int = 8, dim: int = 8, rank: int = 2) -> float:
    """One random subgraph instance for the finite-difference check."""
    local_rng = np.random.default_rng(seed)
    n_cls = int(local_rng.integers(2, 5))
    labels = [int(local_rng.integers(0, n_cls)) for _ in range(n)]
    edges = sorted(
        {
            tuple(sorted(map(int, local_rng.integers(0, n, size=2))))
            for _ in range(2 * n)
        }
    )
    edges = [(i, j) for i, j in edges if i != j]
    s = Subgraph(
        source_dataset="gradcheck",
        center=0,
        node_ids=list(range(n)),
        node_labels=labels,
        edges=edges,
    )
    if local_rng.random() < 0.5:
        s = attach_prompt(s)
    table = EmbeddingTable(
        dim=dim,
        node_vectors=local_rng.normal(size=(n, dim)).astype(np.float32),
        class_vectors=local_rng.normal(size=(n_cls, dim)).astype(np.float32),
        prompt_vector=local_rng.normal(size=dim).astype(np.float32),
    )
    adapter = LowRankAdapter.initialize(dim, rank=rank, dropout_rate=0.0, seed=seed)
    adapter.w_up = local_rng.normal(0.0, 0.05, size=adapter.w_up.shape)
    agg = AggregationConfig(iterations=int(local_rng.integers(0, 3)))
    return gradient_check(s, table, adapter, agg, seed=seed)


if __name__ == "__main__":
    main()
