"""Pre-training set construction: restricted k-hop extraction, the
class-diversity filter, and fully-connected prompting-node insertion."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field, replace
from fractions import Fraction

from .errors import ConfigError
from .graphdata import TextAttributedGraph


@dataclass
class Subgraph:
    """Induced subgraph around a center node.

    `node_ids` are original indices in BFS order (ascending hop distance,
    then id). When a prompting node is attached it occupies local index
    len(node_ids); it carries no label and no original id.
    """

    source_dataset: str
    center: int
    node_ids: list[int]
    node_labels: list[int | None]          # aligned with node_ids
    edges: list[tuple[int, int]] = field(default_factory=list)  # local (i, j), i < j
    prompt_attached: bool = False

    @property
    def n_local(self) -> int:
        return len(self.node_ids) + (1 if self.prompt_attached else 0)

    @property
    def prompt_index(self) -> int | None:
        return len(self.node_ids) if self.prompt_attached else None

    @property
    def labels_present(self) -> set[int]:
        return {lab for lab in self.node_labels if lab is not None}


def extract_khop(
    g: TextAttributedGraph, center: int, k: int, max_nodes: int = 256
) -> Subgraph:
    """BFS ball of radius k around `center`, truncated to `max_nodes` by
    ascending (hop distance, node id). Induced edges only; no prompt yet."""
    if not (0 <= center < g.node_count):
        raise IndexError(f"center {center} out of range")
    if k < 1:
        raise ConfigError("k must be >= 1")

    dist = {center: 0}
    frontier = deque([center])
    while frontier:
        u = frontier.popleft()
        if dist[u] == k:
            continue
        for v in g.adj[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                frontier.append(v)

    members = sorted(dist, key=lambda v: (dist[v], v))[:max_nodes]
    local = {v: i for i, v in enumerate(members)}
    edges = []
    for v in members:
        for u in g.adj[v]:
            if u in local and local[v] < local[u]:
                edges.append((local[v], local[u]))
    edges.sort()
    return Subgraph(
        source_dataset=g.name,
        center=center,
        node_ids=members,
        node_labels=[g.node_labels[v] for v in members],
        edges=edges,
    )


def passes_class_filter(
    s: Subgraph, total_classes: int, ratio: Fraction = Fraction(1, 2)
) -> bool:
    """Keep subgraphs whose distinct label count reaches ratio * |classes|,
    compared exactly in rational arithmetic (4 of 7 passes, 3 of 7 fails)."""
    if total_classes < 1:
        raise ConfigError("total_classes must be >= 1")
    return Fraction(len(s.labels_present)) >= ratio * total_classes


def attach_prompt(s: Subgraph) -> Subgraph:
    """Append the prompting node, connected to every existing local node."""
    if s.prompt_attached:
        raise ConfigError("prompt already attached")
    p = len(s.node_ids)
    return replace(
        s,
        edges=s.edges + [(i, p) for i in range(p)],
        prompt_attached=True,
    )


@dataclass(frozen=True)
class SamplerConfig:
    k: int = 2
    max_nodes: int = 256
    filter_ratio: Fraction = Fraction(1, 2)
    skip_oversize: bool = False  # alternative to truncation
    attach_prompts: bool = True  # off for the no-prompt ablation

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError("sampler k must be >= 1")
        if self.max_nodes < 1:
            raise ConfigError("sampler max_nodes must be >= 1")


def build_pretrain_set(
    graphs: list[TextAttributedGraph], cfg: SamplerConfig
) -> list[Subgraph]:
    """One candidate per node of each dataset, filtered by class diversity
    and size, prompts attached. Deterministic order: dataset order, then
    center id."""
    out: list[Subgraph] = []
    for g in graphs:
        for center in range(g.node_count):
            s = extract_khop(g, center, cfg.k, cfg.max_nodes if not cfg.skip_oversize else g.node_count)
            if cfg.skip_oversize and len(s.node_ids) > cfg.max_nodes:
                continue
            if not passes_class_filter(s, len(g.classes), cfg.filter_ratio):
                continue
            out.append(attach_prompt(s) if cfg.attach_prompts else s)
    return out


def sample_stats(
    graphs: list[TextAttributedGraph], cfg: SamplerConfig
) -> list[dict]:
    """Per-dataset candidate/kept counts and a size histogram for reporting."""
    rows = []
    for g in graphs:
        kept_sizes = []
        for center in range(g.node_count):
            s = extract_khop(g, center, cfg.k, cfg.max_nodes)
            if passes_class_filter(s, len(g.classes), cfg.filter_ratio):
                kept_sizes.append(len(s.node_ids))
        hist: dict[int, int] = {}
        for size in kept_sizes:
            hist[size] = hist.get(size, 0) + 1
        rows.append(
            {
                "dataset": g.name,
                "candidates": g.node_count,
                "kept": len(kept_sizes),
                "size_histogram": dict(sorted(hist.items())),
            }
        )
    return rows
