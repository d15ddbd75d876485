"""End-to-end orchestration: pre-training across source datasets, zero-shot
inference on targets over the full prompt-augmented graph, and ablations."""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .adapter import DenseAdapter, LowRankAdapter, save_checkpoint
from .aggregate import AggregationConfig, apply_mixing, mixing_matrix
from .config import AblationFlags, ExperimentConfig
from .embeddings import EmbeddingTable, embed_dataset
from .errors import ConfigError
from .graphdata import TextAttributedGraph, load_dataset
from .optim import AdamState
from .sampler import Subgraph, build_pretrain_set
from .train import TrainLog, pretrain

logger = logging.getLogger(__name__)


@dataclass
class EvalReport:
    dataset: str
    accuracy: float
    confusion: np.ndarray              # |C| x |C|, rows = true class
    per_class_precision: list[float]
    per_class_recall: list[float]
    labeled_total: int
    config_echo: dict = field(default_factory=dict)
    wall_clock_seconds: float = 0.0

    def to_jsonable(self, include_timings: bool = False) -> dict:
        out = {
            "dataset": self.dataset,
            "accuracy": self.accuracy,
            "labeled_total": self.labeled_total,
            "confusion": self.confusion.tolist(),
            "per_class_precision": self.per_class_precision,
            "per_class_recall": self.per_class_recall,
            "config": self.config_echo,
        }
        if include_timings:
            out["wall_clock_seconds"] = self.wall_clock_seconds
        return out


def argmax_predict(node_vec: np.ndarray, class_matrix: np.ndarray) -> int:
    """Smallest class index attaining the maximal dot product."""
    if class_matrix.shape[0] == 0:
        raise ConfigError("empty class matrix")
    return int(np.argmax(class_matrix @ node_vec))


def full_graph_subgraph(
    g: TextAttributedGraph, attach_prompt: bool
) -> Subgraph:
    """The whole graph as one subgraph, optionally with a universal
    prompting node connected to every node (downstream inference view)."""
    edges = [(u, v) for u, v in g.edges()]
    s = Subgraph(
        source_dataset=g.name,
        center=0,
        node_ids=list(range(g.node_count)),
        node_labels=list(g.node_labels),
        edges=edges,
        prompt_attached=False,
    )
    if attach_prompt:
        from .sampler import attach_prompt as _attach

        s = _attach(s)
    return s


def predict_dataset(
    g: TextAttributedGraph,
    table: EmbeddingTable,
    adapter,
    agg: AggregationConfig,
    use_prompt: bool = True,
) -> np.ndarray:
    """Predicted class index for every node of the target graph."""
    s = full_graph_subgraph(g, attach_prompt=use_prompt)
    x = table.node_vectors.astype(np.float64)
    if use_prompt:
        x = np.vstack([x, table.prompt_vector.astype(np.float64)])
    h, _ = adapter.forward(x, training=False)
    c, _ = adapter.forward(table.class_vectors.astype(np.float64), training=False)
    op = mixing_matrix(s, agg)
    z = apply_mixing(h, op, agg.iterations)[: g.node_count]
    logits = z @ c.T
    # smallest index wins ties: argmax already returns the first maximum
    return np.argmax(logits, axis=1)


def evaluate_dataset(
    g: TextAttributedGraph,
    table: EmbeddingTable,
    adapter,
    agg: AggregationConfig,
    use_prompt: bool = True,
) -> EvalReport:
    t0 = time.perf_counter()
    labeled = g.labeled_nodes()
    if not labeled:
        raise ConfigError(f"target dataset {g.name!r} has no labeled nodes")
    preds = predict_dataset(g, table, adapter, agg, use_prompt=use_prompt)

    n_cls = len(g.classes)
    confusion = np.zeros((n_cls, n_cls), dtype=np.int64)
    for v in labeled:
        confusion[g.node_labels[v], preds[v]] += 1

    correct = int(np.trace(confusion))
    col = confusion.sum(axis=0)
    row = confusion.sum(axis=1)
    precision = [
        float(confusion[i, i] / col[i]) if col[i] else 0.0 for i in range(n_cls)
    ]
    recall = [
        float(confusion[i, i] / row[i]) if row[i] else 0.0 for i in range(n_cls)
    ]
    return EvalReport(
        dataset=g.name,
        accuracy=correct / len(labeled),
        confusion=confusion,
        per_class_precision=precision,
        per_class_recall=recall,
        labeled_total=len(labeled),
        wall_clock_seconds=time.perf_counter() - t0,
    )


def _load_and_embed(cfg: ExperimentConfig, paths) -> tuple[list, dict]:
    graphs, tables = [], {}
    for p in paths:
        g = load_dataset(p)
        if cfg.generic_prompt_text is not None:
            g.dataset_description = cfg.generic_prompt_text
        if g.name in tables:
            raise ConfigError(f"duplicate dataset name {g.name!r}")
        tables[g.name] = embed_dataset(g, cfg.provider, dataset_dir=p)
        graphs.append(g)
    return graphs, tables


def _make_adapter(cfg: ExperimentConfig):
    if cfg.ablation.dense_adapter:
        return DenseAdapter.initialize(
            dim=cfg.provider.dim, dropout_rate=cfg.adapter.dropout, seed=cfg.seed
        )
    return LowRankAdapter.initialize(
        dim=cfg.provider.dim,
        rank=cfg.adapter.rank,
        alpha=cfg.adapter.alpha,
        dropout_rate=cfg.adapter.dropout,
        seed=cfg.seed,
    )


def trainable_parameter_count(cfg: ExperimentConfig) -> int:
    """2*d*r per adapted matrix pair for the low-rank adapter, d*d dense."""
    return _make_adapter(cfg).parameter_count()


def run_pretrain(cfg: ExperimentConfig) -> tuple[Path, TrainLog]:
    """Embed sources, build the pre-training set, train, write checkpoint
    and training log. Returns (checkpoint path, log)."""
    cfg.validate()
    cfg = cfg.effective()
    out_dir = Path(cfg.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    graphs, tables = _load_and_embed(cfg, cfg.source_datasets)
    subgraphs = build_pretrain_set(graphs, cfg.sampler)
    for g in graphs:
        if not any(s.source_dataset == g.name for s in subgraphs):
            logger.warning("dataset %s produced no subgraphs after filtering", g.name)
    if not subgraphs:
        raise ConfigError("no subgraphs survived filtering on any source dataset")

    adapter = _make_adapter(cfg)
    opt = AdamState(
        learning_rate=cfg.optimizer.lr,
        beta1=cfg.optimizer.betas[0],
        beta2=cfg.optimizer.betas[1],
        epsilon=cfg.optimizer.epsilon,
        weight_decay=cfg.optimizer.weight_decay,
    )
    n_params = adapter.parameter_count()
    logger.info("trainable parameters: %d", n_params)
    log = pretrain(
        subgraphs, tables, adapter, cfg.aggregation, opt,
        epochs=cfg.epochs, seed=cfg.seed,
    )

    ckpt = out_dir / "adapter.zgadp"
    if isinstance(adapter, DenseAdapter):
        np.save(out_dir / "adapter_dense.npy", adapter.w)
        ckpt = out_dir / "adapter_dense.npy"
    else:
        save_checkpoint(adapter, ckpt)

    (out_dir / "training_log.json").write_text(
        json.dumps(
            {
                "trainable_parameters": n_params,
                "subgraphs": len(subgraphs),
                "epochs": cfg.epochs,
                "steps": len(log.step_losses),
                "skipped_steps": log.skipped_steps,
                "step_losses": log.step_losses,
                "config": cfg.to_jsonable(),
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    return ckpt, log


def run_inference(
    cfg: ExperimentConfig, adapter, use_prompt: bool | None = None
) -> list[EvalReport]:
    """Score every target dataset with the given adapter."""
    cfg.validate()
    cfg = cfg.effective()
    if not cfg.target_datasets:
        raise ConfigError("target_datasets must not be empty for inference")
    if use_prompt is None:
        use_prompt = not cfg.ablation.no_prompt

    src_class_names = set()
    for p in cfg.source_datasets:
        src_class_names |= set(load_dataset(p).classes.names)

    graphs, tables = _load_and_embed(cfg, cfg.target_datasets)
    reports = []
    for g in graphs:
        shared = src_class_names & set(g.classes.names)
        if shared:
            logger.warning(
                "target %s shares class names with sources: %s", g.name, sorted(shared)
            )
        rep = evaluate_dataset(g, tables[g.name], adapter, cfg.aggregation, use_prompt)
        rep.config_echo = cfg.to_jsonable()
        reports.append(rep)
    return reports


ABLATION_VARIANTS: dict[str, AblationFlags] = {
    "full": AblationFlags(),
    "no_prompt": AblationFlags(no_prompt=True),
    "no_aggregation": AblationFlags(no_aggregation=True),
    "no_normalization": AblationFlags(no_normalization=True),
    "dense_adapter": AblationFlags(dense_adapter=True),
}


def run_ablation(cfg: ExperimentConfig) -> dict[str, list[EvalReport]]:
    """Pretrain + infer for the full model and each ablation variant under
    a shared seed; returns reports keyed by variant name."""
    cfg.validate()
    results: dict[str, list[EvalReport]] = {}
    for name, flags in ABLATION_VARIANTS.items():
        variant = ExperimentConfig(**{**cfg.__dict__})
        variant.ablation = flags
        variant.output_dir = Path(cfg.output_dir) / f"ablation_{name}"
        if flags.no_aggregation:
            logger.info("variant %s: aggregation iterations forced to 0", name)
        _ckpt, _log = run_pretrain(variant)
        adapter = _reload_adapter(variant, _ckpt)
        results[name] = run_inference(variant, adapter)
    return results


def _reload_adapter(cfg: ExperimentConfig, ckpt: Path):
    from .adapter import load_checkpoint

    if ckpt.suffix == ".npy":
        return DenseAdapter(w=np.load(ckpt), dropout_rate=0.0)
    a = load_checkpoint(ckpt)
    if a.dim != cfg.provider.dim:
        raise ConfigError(
            f"checkpoint dim {a.dim} does not match provider dim {cfg.provider.dim}"
        )
    return a
