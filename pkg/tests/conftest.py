import json
from pathlib import Path

import numpy as np
import pytest

from zerog.embeddings import EmbeddingTable
from zerog.graphdata import ClassCatalog, TextAttributedGraph
from zerog.sampler import Subgraph


def make_graph(n, edges, labels=None, n_classes=2, name="toy"):
    catalog = ClassCatalog(
        [(f"c{i}", f"description of class {i}") for i in range(n_classes)]
    )
    g = TextAttributedGraph(
        name=name,
        node_texts=[f"node {i}" for i in range(n)],
        node_labels=labels if labels is not None else [0] * n,
        classes=catalog,
        dataset_description=f"toy dataset {name}",
    )
    for u, v in edges:
        g.add_edge(u, v)
    return g


def write_dataset_dir(tmp_path: Path, g: TextAttributedGraph) -> Path:
    d = tmp_path / g.name
    d.mkdir(parents=True, exist_ok=True)
    (d / "dataset.json").write_text(
        json.dumps({"name": g.name, "description": g.dataset_description})
    )
    (d / "classes.json").write_text(
        json.dumps([{"name": n, "description": de} for n, de in g.classes.entries])
    )
    with (d / "nodes.jsonl").open("w") as fh:
        for i in range(g.node_count):
            fh.write(json.dumps({"id": i, "text": g.node_texts[i],
                                 "label": g.node_labels[i]}) + "\n")
    with (d / "edges.jsonl").open("w") as fh:
        for u, v in g.edges():
            fh.write(json.dumps({"src": u, "dst": v}) + "\n")
    return d


def random_graph(rng, n, p=0.3, n_classes=3, name="rand"):
    labels = [int(rng.integers(0, n_classes)) for _ in range(n)]
    edges = [
        (i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p
    ]
    return make_graph(n, edges, labels=labels, n_classes=n_classes, name=name)


def random_subgraph(rng, n, n_classes=3, p=0.35, with_prompt=False,
                    unlabeled_frac=0.0, name="rand"):
    labels = [int(rng.integers(0, n_classes)) for _ in range(n)]
    if unlabeled_frac:
        for i in range(n):
            if rng.random() < unlabeled_frac and sum(
                l is not None for l in labels
            ) > 1:
                labels[i] = None
    edges = sorted(
        (i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p
    )
    s = Subgraph(
        source_dataset=name,
        center=0,
        node_ids=list(range(n)),
        node_labels=labels,
        edges=edges,
    )
    if with_prompt:
        from zerog.sampler import attach_prompt

        s = attach_prompt(s)
    return s


def random_table(rng, n_nodes, n_classes, dim):
    return EmbeddingTable(
        dim=dim,
        node_vectors=rng.normal(size=(n_nodes, dim)).astype(np.float32),
        class_vectors=rng.normal(size=(n_classes, dim)).astype(np.float32),
        prompt_vector=rng.normal(size=dim).astype(np.float32),
    )


@pytest.fixture
def triangle():
    return make_graph(3, [(0, 1), (1, 2), (0, 2)], labels=[0, 1, 0])


# --------------------------------------------------- embedding sidecar helpers


def write_sidecar_dataset(tmp_path, n_nodes=2, n_classes=1, name="toy"):
    d = tmp_path / name
    d.mkdir()
    (d / "dataset.json").write_text(
        json.dumps({"name": name, "description": f"dataset {name}"})
    )
    (d / "classes.json").write_text(json.dumps([
        {"name": f"c{i}", "description": f"class {i} of {name}"}
        for i in range(n_classes)
    ]))
    with (d / "nodes.jsonl").open("w") as fh:
        for i in range(n_nodes):
            fh.write(json.dumps({"id": i, "text": f"node {i} text",
                                 "label": i % n_classes}) + "\n")
    (d / "edges.jsonl").write_text("")
    return d


@pytest.fixture(scope="session")
def live_server():
    """A real sidecar service on an ephemeral port, backed by the
    deterministic hash encoder."""
    import threading
    import time

    import uvicorn

    from embed_sidecar.app import create_app
    from embed_sidecar.encoder import HashEncoder

    app = create_app(HashEncoder(dim=16), batch_cap=64)
    config = uvicorn.Config(app, host="127.0.0.1", port=0, log_level="warning")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 10
    while not server.started:
        if time.time() > deadline:
            raise RuntimeError("sidecar server did not start")
        time.sleep(0.02)
    port = server.servers[0].sockets[0].getsockname()[1]
    yield f"http://127.0.0.1:{port}"
    server.should_exit = True
    thread.join(timeout=5)
