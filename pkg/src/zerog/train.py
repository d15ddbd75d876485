"""Pre-training loop: one subgraph per optimizer step, a fixed number of
epochs, deterministic shuffling from the experiment seed."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .aggregate import AggregationConfig
from .embeddings import EmbeddingTable
from .errors import ConfigError
from .loss import subgraph_loss
from .optim import AdamState, optimizer_step
from .sampler import Subgraph

logger = logging.getLogger(__name__)


@dataclass
class TrainLog:
    step_losses: list[float] = field(default_factory=list)
    epochs: int = 0
    skipped_steps: int = 0


def pretrain(
    subgraphs: list[Subgraph],
    tables: dict[str, EmbeddingTable],
    adapter,
    agg: AggregationConfig,
    opt: AdamState,
    epochs: int = 3,
    seed: int = 0,
) -> TrainLog:
    """Train `adapter` in place; batch size is one subgraph per step."""
    if not subgraphs:
        raise ConfigError("empty pre-training set")
    for s in subgraphs:
        if s.source_dataset not in tables:
            raise ConfigError(f"no embedding table for dataset {s.source_dataset!r}")

    log = TrainLog(epochs=epochs)
    dropout_rng = np.random.default_rng([seed, 0xD0])
    params = adapter.parameters()
    for epoch in range(epochs):
        order = np.random.default_rng([seed, epoch]).permutation(len(subgraphs))
        for i in order:
            s = subgraphs[i]
            report = subgraph_loss(
                s, tables[s.source_dataset], adapter, agg,
                training=True, rng=dropout_rng,
            )
            if not optimizer_step(params, report.grads, opt):
                log.skipped_steps += 1
            log.step_losses.append(report.loss_value)
        logger.info(
            "epoch %d/%d: mean loss %.4f over %d steps",
            epoch + 1, epochs,
            float(np.mean(log.step_losses[-len(subgraphs):])), len(subgraphs),
        )
    return log
