"""Similarity cross-entropy over subgraphs, with hand-derived gradients.

Forward path per subgraph: gather raw node rows (plus the prompting row)
and the class rows for the labels present, push both blocks through the
adapter, aggregate the node block, then score labeled nodes against the
class block by dot product and take -log softmax at the true class.

Backward exploits symmetry of the mixing operator: the gradient through
lambda aggregation rounds is the same operator applied lambda times to the
upstream gradient.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .aggregate import AggregationConfig, apply_mixing, mixing_matrix
from .embeddings import EmbeddingTable
from .errors import ConfigError, NumericError
from .sampler import Subgraph


@dataclass
class LossReport:
    loss_value: float
    node_terms: int
    grads: dict[str, np.ndarray]  # keyed by adapter parameter name


def _gather_blocks(s: Subgraph, table: EmbeddingTable):
    x_nodes = table.node_vectors[s.node_ids].astype(np.float64)
    if s.prompt_attached:
        x_nodes = np.vstack([x_nodes, table.prompt_vector.astype(np.float64)])
    classes = sorted(s.labels_present)
    x_cls = table.class_vectors[classes].astype(np.float64)
    labeled = [i for i, lab in enumerate(s.node_labels) if lab is not None]
    pos = {c: i for i, c in enumerate(classes)}
    targets = np.array([pos[s.node_labels[i]] for i in labeled], dtype=np.intp)
    return x_nodes, x_cls, np.array(labeled, dtype=np.intp), targets


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def subgraph_loss(
    s: Subgraph,
    table: EmbeddingTable,
    a,
    agg: AggregationConfig,
    training: bool = False,
    rng=None,
) -> LossReport:
    """Loss and analytic adapter gradients for one subgraph.

    The prompting node and unlabeled members contribute structure through
    aggregation but add no loss term.
    """
    if not s.labels_present:
        raise ConfigError("subgraph has no labeled nodes (was it filtered?)")
    x_nodes, x_cls, labeled, targets = _gather_blocks(s, table)

    h_nodes, cache_nodes = a.forward(x_nodes, training=training, rng=rng)
    h_cls, cache_cls = a.forward(x_cls, training=training, rng=rng)

    op = mixing_matrix(s, agg)
    z = apply_mixing(h_nodes, op, agg.iterations)

    logits = z[labeled] @ h_cls.T
    if not np.all(np.isfinite(logits)):
        raise NumericError("non-finite logits in subgraph loss")
    logp = _log_softmax(logits)
    loss = float(-logp[np.arange(len(labeled)), targets].sum())

    # softmax - onehot, per labeled row
    g_logits = np.exp(logp)
    g_logits[np.arange(len(labeled)), targets] -= 1.0

    dz = np.zeros_like(z)
    dz[labeled] = g_logits @ h_cls
    d_cls = g_logits.T @ z[labeled]
    dh_nodes = apply_mixing(dz, op, agg.iterations)

    grads = a.zero_grads()
    a.backward(cache_nodes, dh_nodes, grads)
    a.backward(cache_cls, d_cls, grads)
    for g in grads.values():
        if not np.all(np.isfinite(g)):
            raise NumericError("non-finite gradient in subgraph loss")
    return LossReport(loss_value=loss, node_terms=len(labeled), grads=grads)


def gradient_check(
    s: Subgraph,
    table: EmbeddingTable,
    a,
    agg: AggregationConfig,
    h: float = 1e-5,
    n_coords: int = 50,
    seed: int = 0,
) -> float:
    """Max relative error between analytic gradients and central finite
    differences over a random sample of parameter coordinates."""
    if h <= 0:
        raise ConfigError("perturbation h must be positive")
    report = subgraph_loss(s, table, a, agg)
    rng = np.random.default_rng(seed)
    params = a.parameters()
    flat = [(name, idx) for name, p in params.items() for idx in range(p.size)]
    picks = rng.choice(len(flat), size=min(n_coords, len(flat)), replace=False)

    worst = 0.0
    for k in picks:
        name, idx = flat[k]
        p = params[name]
        orig = p.flat[idx]
        p.flat[idx] = orig + h
        lo_hi = subgraph_loss(s, table, a, agg).loss_value
        p.flat[idx] = orig - h
        lo_lo = subgraph_loss(s, table, a, agg).loss_value
        p.flat[idx] = orig
        numeric = (lo_hi - lo_lo) / (2.0 * h)
        analytic = report.grads[name].flat[idx]
        denom = max(abs(numeric), abs(analytic), 1e-8)
        worst = max(worst, abs(numeric - analytic) / denom)
    return worst
