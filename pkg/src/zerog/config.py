"""Experiment configuration: a single JSON file mapping onto the module
configs, with validation of the cross-dataset contract."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .aggregate import AggregationConfig
from .embeddings import ProviderSpec
from .errors import ConfigError
from .sampler import SamplerConfig


@dataclass(frozen=True)
class AdapterConfig:
    rank: int = 4
    alpha: float = 16.0
    dropout: float = 0.1


@dataclass(frozen=True)
class OptimizerConfig:
    lr: float = 1e-4
    weight_decay: float = 0.01
    betas: tuple[float, float] = (0.9, 0.999)
    epsilon: float = 1e-8


@dataclass(frozen=True)
class AblationFlags:
    no_prompt: bool = False
    no_aggregation: bool = False
    no_normalization: bool = False
    dense_adapter: bool = False


@dataclass
class ExperimentConfig:
    source_datasets: list[Path]
    target_datasets: list[Path]
    provider: ProviderSpec
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    aggregation: AggregationConfig = field(default_factory=AggregationConfig)
    adapter: AdapterConfig = field(default_factory=AdapterConfig)
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    epochs: int = 3
    seed: int = 0
    ablation: AblationFlags = field(default_factory=AblationFlags)
    output_dir: Path = Path("zerog-out")
    generic_prompt_text: str | None = None  # override per-dataset prompt text

    def validate(self) -> None:
        if not self.source_datasets:
            raise ConfigError("source_datasets must not be empty")
        for p in [*self.source_datasets, *self.target_datasets]:
            if not Path(p).is_dir():
                raise ConfigError(f"dataset directory does not exist: {p}")
        src_names = {Path(p).name for p in self.source_datasets}
        tgt_names = {Path(p).name for p in self.target_datasets}
        overlap = src_names & tgt_names
        if overlap:
            raise ConfigError(
                f"source and target dataset sets must be disjoint; shared: {sorted(overlap)}"
            )

    def effective(self) -> "ExperimentConfig":
        """Apply ablation flags to the module configs."""
        cfg = self
        sampler = cfg.sampler
        agg = cfg.aggregation
        if cfg.ablation.no_prompt:
            sampler = SamplerConfig(
                k=sampler.k, max_nodes=sampler.max_nodes,
                filter_ratio=sampler.filter_ratio,
                skip_oversize=sampler.skip_oversize, attach_prompts=False,
            )
        if cfg.ablation.no_aggregation:
            agg = AggregationConfig(iterations=0, normalize=agg.normalize)
        if cfg.ablation.no_normalization:
            agg = AggregationConfig(iterations=agg.iterations, normalize=False)
        out = ExperimentConfig(**{**self.__dict__})
        out.sampler = sampler
        out.aggregation = agg
        return out

    def to_jsonable(self) -> dict:
        return {
            "source_datasets": [str(p) for p in self.source_datasets],
            "target_datasets": [str(p) for p in self.target_datasets],
            "provider": {
                "kind": self.provider.kind,
                "dim": self.provider.dim,
                "endpoint": self.provider.endpoint,
                "seed": self.provider.seed,
                "cache_path": self.provider.cache_path,
                "max_sequence_length": self.provider.max_sequence_length,
                "normalize": self.provider.normalize,
            },
            "sampler": {
                "k": self.sampler.k,
                "max_nodes": self.sampler.max_nodes,
                "filter_ratio": str(self.sampler.filter_ratio),
                "skip_oversize": self.sampler.skip_oversize,
                "attach_prompts": self.sampler.attach_prompts,
            },
            "aggregation": {
                "iterations": self.aggregation.iterations,
                "normalize": self.aggregation.normalize,
            },
            "adapter": {
                "rank": self.adapter.rank,
                "alpha": self.adapter.alpha,
                "dropout": self.adapter.dropout,
            },
            "optimizer": {
                "lr": self.optimizer.lr,
                "weight_decay": self.optimizer.weight_decay,
                "betas": list(self.optimizer.betas),
                "epsilon": self.optimizer.epsilon,
            },
            "epochs": self.epochs,
            "seed": self.seed,
            "ablation": {
                "no_prompt": self.ablation.no_prompt,
                "no_aggregation": self.ablation.no_aggregation,
                "no_normalization": self.ablation.no_normalization,
                "dense_adapter": self.ablation.dense_adapter,
            },
            "output_dir": str(self.output_dir),
        }


def _parse_ratio(value) -> Fraction:
    if isinstance(value, str):
        return Fraction(value)
    return Fraction(value).limit_denominator(10**6)


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed config JSON: {exc}") from exc
    return config_from_dict(raw, base_dir=path.parent)


def config_from_dict(raw: dict, base_dir: Path = Path(".")) -> ExperimentConfig:
    def resolve(p):
        p = Path(p)
        return p if p.is_absolute() else base_dir / p

    prov = raw.get("provider", {})
    provider = ProviderSpec(
        kind=prov.get("kind", "mock"),
        dim=int(prov.get("dim", 768)),
        endpoint=prov.get("endpoint"),
        seed=prov.get("seed", 0 if prov.get("kind", "mock") == "mock" else None),
        cache_path=prov.get("cache_path"),
        max_sequence_length=int(prov.get("max_sequence_length", 256)),
        normalize=bool(prov.get("normalize", False)),
    )
    samp = raw.get("sampler", {})
    sampler = SamplerConfig(
        k=int(samp.get("k", 2)),
        max_nodes=int(samp.get("max_nodes", 256)),
        filter_ratio=_parse_ratio(samp.get("filter_ratio", "1/2")),
        skip_oversize=bool(samp.get("skip_oversize", False)),
        attach_prompts=bool(samp.get("attach_prompts", True)),
    )
    agg = raw.get("aggregation", {})
    aggregation = AggregationConfig(
        iterations=int(agg.get("iterations", 8)),
        normalize=bool(agg.get("normalize", True)),
    )
    ad = raw.get("adapter", {})
    adapter = AdapterConfig(
        rank=int(ad.get("rank", 4)),
        alpha=float(ad.get("alpha", 16.0)),
        dropout=float(ad.get("dropout", 0.1)),
    )
    op = raw.get("optimizer", {})
    optimizer = OptimizerConfig(
        lr=float(op.get("lr", 1e-4)),
        weight_decay=float(op.get("weight_decay", 0.01)),
        betas=tuple(op.get("betas", (0.9, 0.999))),
        epsilon=float(op.get("epsilon", 1e-8)),
    )
    ab = raw.get("ablation", {})
    ablation = AblationFlags(
        no_prompt=bool(ab.get("no_prompt", False)),
        no_aggregation=bool(ab.get("no_aggregation", False)),
        no_normalization=bool(ab.get("no_normalization", False)),
        dense_adapter=bool(ab.get("dense_adapter", False)),
    )
    cfg = ExperimentConfig(
        source_datasets=[resolve(p) for p in raw.get("source_datasets", [])],
        target_datasets=[resolve(p) for p in raw.get("target_datasets", [])],
        provider=provider,
        sampler=sampler,
        aggregation=aggregation,
        adapter=adapter,
        optimizer=optimizer,
        epochs=int(raw.get("epochs", 3)),
        seed=int(raw.get("seed", 0)),
        ablation=ablation,
        output_dir=resolve(raw.get("output_dir", "zerog-out")),
        generic_prompt_text=raw.get("generic_prompt_text"),
    )
    return cfg
