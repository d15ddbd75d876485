"""Text-attributed graph datasets: on-disk format, loading, and structural queries.

A dataset directory contains four UTF-8 JSON files:

    dataset.json   {"name": str, "description": str}
    classes.json   [{"name": str, "description": str}, ...]
    nodes.jsonl    {"id": int, "text": str, "label": int | null} per line
    edges.jsonl    {"src": int, "dst": int} per line

Graphs are undirected; edges on disk may appear in either or both
directions and are symmetrized and deduplicated on load.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DataFormatError


@dataclass(frozen=True)
class ClassCatalog:
    """Ordered class list; the class id is the position in `entries`."""

    entries: list[tuple[str, str]]  # (name, description)

    def __post_init__(self):
        names = [n for n, _ in self.entries]
        if len(set(names)) != len(names):
            raise DataFormatError("duplicate class names in catalog")
        for name, desc in self.entries:
            if not desc:
                raise DataFormatError(f"class {name!r} has an empty description")

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.entries]

    @property
    def descriptions(self) -> list[str]:
        return [d for _, d in self.entries]


@dataclass(frozen=True)
class DatasetStats:
    node_count: int
    edge_count: int
    average_degree: float
    class_count: int


@dataclass
class TextAttributedGraph:
    """Undirected graph whose nodes carry text attributes and optional labels.

    Adjacency is kept as per-node neighbor sets; no self-loops are stored
    (self-loops are added only inside aggregation).
    """

    name: str
    node_texts: list[str]
    node_labels: list[int | None]
    classes: ClassCatalog
    dataset_description: str
    adj: list[set[int]] = field(default_factory=list)

    def __post_init__(self):
        n = len(self.node_texts)
        if len(self.node_labels) != n:
            raise DataFormatError("node_texts and node_labels length mismatch")
        if not self.adj:
            self.adj = [set() for _ in range(n)]
        if len(self.adj) != n:
            raise DataFormatError("adjacency size does not match node count")
        for lab in self.node_labels:
            if lab is not None and not (0 <= lab < len(self.classes)):
                raise DataFormatError(f"label index {lab} out of range")

    @property
    def node_count(self) -> int:
        return len(self.node_texts)

    def add_edge(self, u: int, v: int) -> None:
        n = self.node_count
        if not (0 <= u < n and 0 <= v < n):
            raise DataFormatError(f"edge ({u},{v}) references a missing node")
        if u == v:
            return  # self-loops are never stored
        self.adj[u].add(v)
        self.adj[v].add(u)

    def neighbors(self, v: int) -> set[int]:
        if not (0 <= v < self.node_count):
            raise IndexError(f"node index {v} out of range")
        return set(self.adj[v])

    def edges(self) -> list[tuple[int, int]]:
        """Canonical undirected edge list, (u, v) with u < v, sorted."""
        out = []
        for u, nbrs in enumerate(self.adj):
            for v in nbrs:
                if u < v:
                    out.append((u, v))
        out.sort()
        return out

    @property
    def edge_count(self) -> int:
        return sum(len(s) for s in self.adj) // 2

    def check_symmetry(self) -> bool:
        return all(u in self.adj[v] for u, nbrs in enumerate(self.adj) for v in nbrs)

    def labeled_nodes(self) -> list[int]:
        return [i for i, lab in enumerate(self.node_labels) if lab is not None]


def compute_stats(g: TextAttributedGraph) -> DatasetStats:
    e = g.edge_count
    avg = 2.0 * e / g.node_count if g.node_count else 0.0
    return DatasetStats(g.node_count, e, avg, len(g.classes))


def _read_json(path: Path):
    if not path.is_file():
        raise DataFormatError(f"missing file: {path}")
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"malformed JSON in {path}: {exc}") from exc


def _read_jsonl(path: Path):
    if not path.is_file():
        raise DataFormatError(f"missing file: {path}")
    records = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"{path}:{lineno}: malformed record") from exc
    return records


def load_dataset(dir_path: str | Path, strict: bool = False) -> TextAttributedGraph:
    """Load a dataset directory into a validated graph.

    Edges are symmetrized and deduplicated unless `strict` is set, in which
    case an edge present in only one direction is an error.
    """
    d = Path(dir_path)
    meta = _read_json(d / "dataset.json")
    if not isinstance(meta, dict) or "name" not in meta or "description" not in meta:
        raise DataFormatError(f"{d / 'dataset.json'}: expected name and description")

    raw_classes = _read_json(d / "classes.json")
    catalog = ClassCatalog([(c["name"], c["description"]) for c in raw_classes])

    node_recs = _read_jsonl(d / "nodes.jsonl")
    for i, rec in enumerate(node_recs):
        if rec.get("id") != i:
            raise DataFormatError(f"nodes.jsonl: ids must be contiguous 0..N-1, got {rec.get('id')} at line {i}")
    texts = [rec["text"] for rec in node_recs]
    labels = [rec.get("label") for rec in node_recs]

    g = TextAttributedGraph(
        name=meta["name"],
        node_texts=texts,
        node_labels=labels,
        classes=catalog,
        dataset_description=meta["description"],
    )

    edge_recs = _read_jsonl(d / "edges.jsonl")
    if strict:
        directed = {(r["src"], r["dst"]) for r in edge_recs}
        for u, v in directed:
            if u != v and (v, u) not in directed:
                raise DataFormatError(f"edge ({u},{v}) has no reverse in strict mode")
    for rec in edge_recs:
        g.add_edge(rec["src"], rec["dst"])
    return g


def save_dataset(g: TextAttributedGraph, dir_path: str | Path) -> None:
    """Write the on-disk format with canonical ordering (stable bytes)."""
    d = Path(dir_path)
    d.mkdir(parents=True, exist_ok=True)

    def dump(obj):
        return json.dumps(obj, ensure_ascii=False, sort_keys=True)

    (d / "dataset.json").write_text(
        dump({"name": g.name, "description": g.dataset_description}) + "\n",
        encoding="utf-8",
    )
    (d / "classes.json").write_text(
        json.dumps(
            [{"name": n, "description": desc} for n, desc in g.classes.entries],
            ensure_ascii=False,
        )
        + "\n",
        encoding="utf-8",
    )
    with (d / "nodes.jsonl").open("w", encoding="utf-8") as fh:
        for i, (text, lab) in enumerate(zip(g.node_texts, g.node_labels)):
            fh.write(dump({"id": i, "text": text, "label": lab}) + "\n")
    with (d / "edges.jsonl").open("w", encoding="utf-8") as fh:
        for u, v in g.edges():
            fh.write(dump({"src": u, "dst": v}) + "\n")
