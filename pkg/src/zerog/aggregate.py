"""Parameter-free structure injection: self loops, symmetric degree
normalization, and repeated sparse neighborhood aggregation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError
from .sampler import Subgraph


@dataclass(frozen=True)
class AggregationConfig:
    iterations: int = 8     # lambda
    normalize: bool = True  # ablation switch

    def __post_init__(self):
        if self.iterations < 0:
            raise ConfigError("aggregation iterations must be >= 0")


def _augmented_adjacency(s: Subgraph) -> sp.csr_matrix:
    """A + I over local indices, prompt edges included when attached."""
    n = s.n_local
    if n == 0:
        raise ConfigError("empty subgraph")
    rows, cols = [], []
    for i, j in s.edges:
        rows += [i, j]
        cols += [j, i]
    rows += list(range(n))
    cols += list(range(n))
    data = np.ones(len(rows))
    return sp.csr_matrix((data, (rows, cols)), shape=(n, n))


@dataclass(frozen=True)
class NormalizedAdjacency:
    matrix: sp.csr_matrix  # symmetric, entries in [0, 1]


def normalize_adjacency(s: Subgraph) -> NormalizedAdjacency:
    """M^{-1/2} (A + I) M^{-1/2} with M the degree matrix of A + I."""
    a = _augmented_adjacency(s)
    deg = np.asarray(a.sum(axis=1)).ravel()
    inv_sqrt = 1.0 / np.sqrt(deg)  # every degree >= 1 after self loops
    d = sp.diags(inv_sqrt)
    return NormalizedAdjacency((d @ a @ d).tocsr())


def aggregate(h: np.ndarray, a_norm: NormalizedAdjacency, iterations: int) -> np.ndarray:
    """A_norm^lambda H via successive sparse multiplications."""
    n = a_norm.matrix.shape[0]
    if h.shape[0] != n:
        raise ConfigError(f"feature rows {h.shape[0]} != adjacency size {n}")
    out = h
    for _ in range(iterations):
        out = a_norm.matrix @ out
    return out


def aggregate_unnormalized(h: np.ndarray, s: Subgraph, iterations: int) -> np.ndarray:
    """(A + I)^lambda H, the no-normalization ablation."""
    a = _augmented_adjacency(s)
    if h.shape[0] != a.shape[0]:
        raise ConfigError(f"feature rows {h.shape[0]} != adjacency size {a.shape[0]}")
    out = h
    for _ in range(iterations):
        out = a @ out
    return out


def mixing_matrix(s: Subgraph, cfg: AggregationConfig) -> sp.csr_matrix | None:
    """The symmetric operator applied per aggregation round, or None when
    aggregation is disabled (iterations == 0)."""
    if cfg.iterations == 0:
        return None
    if cfg.normalize:
        return normalize_adjacency(s).matrix
    return _augmented_adjacency(s)


def apply_mixing(h: np.ndarray, op: sp.csr_matrix | None, iterations: int) -> np.ndarray:
    if op is None or iterations == 0:
        return h
    out = h
    for _ in range(iterations):
        out = op @ out
    return out
