"""Build binary embedding caches from dataset directories.

Reads the standard dataset layout (dataset.json, classes.json,
nodes.jsonl), fetches embeddings from a running sidecar in capped
batches with retry, and writes a ZGEMB1 cache ordered nodes -> classes
-> prompt so the graph pipeline can load it without a live model.
"""

from __future__ import annotations

import json
import struct
import time
import zlib
from pathlib import Path

import numpy as np
import requests

CACHE_MAGIC = b"ZGEMB1\n"


class CacheBuildError(RuntimeError):
    pass


def _read_dataset_texts(dataset_dir: Path) -> tuple[list[str], list[str], str]:
    """Node texts in id order, class descriptions in file order, and the
    dataset description."""
    meta = json.loads((dataset_dir / "dataset.json").read_text(encoding="utf-8"))
    classes = json.loads((dataset_dir / "classes.json").read_text(encoding="utf-8"))
    nodes = {}
    with (dataset_dir / "nodes.jsonl").open(encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rec = json.loads(line)
                nodes[int(rec["id"])] = rec["text"]
    node_texts = [nodes[i] for i in sorted(nodes)]
    class_texts = [c["description"] for c in classes]
    return node_texts, class_texts, meta["description"]


def _post_with_retry(endpoint: str, texts: list[str], max_length: int,
                     retries: int, dim: int | None) -> np.ndarray:
    url = endpoint.rstrip("/") + "/embed"
    last_error = None
    for attempt in range(retries):
        try:
            resp = requests.post(
                url, json={"texts": texts, "max_length": max_length}, timeout=120
            )
            resp.raise_for_status()
            body = resp.json()
            vecs = np.asarray(body["vectors"], dtype=np.float32)
            if dim is not None and body["dim"] != dim:
                raise CacheBuildError(
                    f"service dim changed mid-build: {body['dim']} != {dim}"
                )
            if vecs.shape != (len(texts), body["dim"]):
                raise CacheBuildError(f"bad vector shape {vecs.shape}")
            return vecs
        except requests.RequestException as exc:
            last_error = exc
            time.sleep(0.2 * (attempt + 1))
    raise CacheBuildError(f"embedding service unreachable after {retries} tries: "
                          f"{last_error}")


def write_zgemb(node_vectors: np.ndarray, class_vectors: np.ndarray,
                prompt_vector: np.ndarray, path: str | Path) -> None:
    """ZGEMB1: magic, u32 LE counts (nodes, classes, prompt=1, dim),
    float32 LE rows, u32 CRC32 of the row bytes."""
    n, dim = node_vectors.shape
    c = class_vectors.shape[0]
    payload = b"".join(
        np.ascontiguousarray(a, dtype="<f4").tobytes()
        for a in (node_vectors, class_vectors, prompt_vector)
    )
    header = CACHE_MAGIC + struct.pack("<IIII", n, c, 1, dim)
    crc = struct.pack("<I", zlib.crc32(payload) & 0xFFFFFFFF)
    Path(path).write_bytes(header + payload + crc)


def build_cache(
    dataset_dir: str | Path,
    out_path: str | Path,
    endpoint: str,
    max_length: int = 256,
    batch: int = 64,
    retries: int = 3,
) -> Path:
    """Embed one dataset through a running sidecar and write its cache."""
    dataset_dir = Path(dataset_dir)
    node_texts, class_texts, description = _read_dataset_texts(dataset_dir)
    texts = node_texts + class_texts + [description]

    rows = []
    dim = None
    for start in range(0, len(texts), batch):
        vecs = _post_with_retry(
            endpoint, texts[start : start + batch], max_length, retries, dim
        )
        dim = vecs.shape[1]
        rows.append(vecs)
    stacked = np.vstack(rows)

    n, c = len(node_texts), len(class_texts)
    out_path = Path(out_path)
    write_zgemb(stacked[:n], stacked[n : n + c], stacked[n + c], out_path)
    return out_path
