"""Embedding tables and pluggable providers.

Every node text, class description, and the dataset description are mapped
to d-dimensional vectors by a provider: a deterministic mock (hash-seeded
PRNG), a binary cache file, or an HTTP encoder service. The cache format is
bit-exact so the pipeline never needs a live model.
"""

from __future__ import annotations

import hashlib
import os
import struct
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataFormatError, NumericError, ProviderError
from .graphdata import TextAttributedGraph

CACHE_MAGIC = b"ZGEMB1\n"


@dataclass(frozen=True)
class EmbeddingTable:
    """Dense vectors for a dataset: one row per node, per class, plus one
    prompting-node row from the dataset description."""

    dim: int
    node_vectors: np.ndarray   # N x d, float32
    class_vectors: np.ndarray  # |C| x d, float32
    prompt_vector: np.ndarray  # d, float32

    def __post_init__(self):
        for name, arr, ncols in (
            ("node_vectors", self.node_vectors, self.dim),
            ("class_vectors", self.class_vectors, self.dim),
        ):
            if arr.ndim != 2 or arr.shape[1] != ncols:
                raise DataFormatError(f"{name} must be 2-D with {ncols} columns")
            if not np.all(np.isfinite(arr)):
                raise NumericError(f"non-finite values in {name}")
        if self.prompt_vector.shape != (self.dim,):
            raise DataFormatError("prompt_vector has wrong length")
        if not np.all(np.isfinite(self.prompt_vector)):
            raise NumericError("non-finite values in prompt_vector")


@dataclass(frozen=True)
class ProviderSpec:
    kind: str                       # cache-file | mock | http
    dim: int
    endpoint: str | None = None
    seed: int | None = None
    cache_path: str | None = None   # cache-file: explicit path, else per-dataset
    max_sequence_length: int = 256
    normalize: bool = False         # optional ablation; raw vectors by default

    def __post_init__(self):
        if self.kind not in ("cache-file", "mock", "http"):
            raise ConfigError(f"unknown provider kind {self.kind!r}")
        if self.kind == "http" and not self.endpoint:
            raise ConfigError("http provider requires an endpoint")
        if self.kind == "mock" and self.seed is None:
            raise ConfigError("mock provider requires a seed")


def hash64(seed: int, text: str) -> int:
    """Platform-stable 64-bit hash of (seed, text): first 8 bytes of
    SHA-256 over the little-endian seed followed by the UTF-8 text."""
    h = hashlib.sha256()
    h.update(struct.pack("<q", seed))
    h.update(text.encode("utf-8"))
    return int.from_bytes(h.digest()[:8], "little")


def mock_embed(text: str, dim: int, seed: int) -> np.ndarray:
    """Deterministic stand-in for a language model.

    Seeds a PCG64 generator with hash64(seed, text), draws `dim` values
    uniform in [-1, 1], and L2-normalizes.
    """
    if dim < 1:
        raise ConfigError("dim must be >= 1")
    rng = np.random.Generator(np.random.PCG64(hash64(seed, text)))
    v = rng.uniform(-1.0, 1.0, size=dim)
    norm = np.linalg.norm(v)
    if norm == 0.0:  # measure-zero, but keep the contract total
        v[0] = 1.0
        norm = 1.0
    return (v / norm).astype(np.float32)


def _http_embed(texts: list[str], spec: ProviderSpec) -> np.ndarray:
    import requests

    workers = max(1, int(os.environ.get("ZEROG_THREADS", "4")))
    batch = 64
    chunks = [texts[i : i + batch] for i in range(0, len(texts), batch)]

    def post(chunk):
        try:
            resp = requests.post(
                spec.endpoint.rstrip("/") + "/embed",
                json={"texts": chunk, "max_length": spec.max_sequence_length},
                timeout=120,
            )
            resp.raise_for_status()
        except requests.RequestException as exc:
            raise ProviderError(f"embedding service unreachable: {exc}") from exc
        body = resp.json()
        vecs = np.asarray(body["vectors"], dtype=np.float32)
        if body["dim"] != spec.dim or vecs.shape != (len(chunk), spec.dim):
            raise ProviderError(
                f"provider returned dim {body['dim']}, expected {spec.dim}"
            )
        return vecs

    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(post, chunks))
    return np.vstack(parts) if parts else np.zeros((0, spec.dim), dtype=np.float32)


def embed_dataset(
    g: TextAttributedGraph, spec: ProviderSpec, dataset_dir: str | Path | None = None
) -> EmbeddingTable:
    """Build the full embedding table for one dataset.

    Row order is nodes (by id), then classes (by id), then the prompting
    vector from the dataset description.
    """
    if spec.kind == "cache-file":
        path = spec.cache_path
        if path is None:
            if dataset_dir is None:
                raise ConfigError("cache-file provider needs cache_path or dataset_dir")
            path = Path(dataset_dir) / "embeddings.zgemb"
        table = read_cache(path)
        if table.dim != spec.dim:
            raise ProviderError(f"cache dim {table.dim} != spec dim {spec.dim}")
        if table.node_vectors.shape[0] != g.node_count:
            raise ProviderError("cache node count does not match dataset")
        if table.class_vectors.shape[0] != len(g.classes):
            raise ProviderError("cache class count does not match dataset")
        return table

    texts = list(g.node_texts) + g.classes.descriptions + [g.dataset_description]
    if spec.kind == "mock":
        rows = np.stack([mock_embed(t, spec.dim, spec.seed) for t in texts])
    else:
        rows = _http_embed(texts, spec)

    if spec.normalize:
        norms = np.linalg.norm(rows, axis=1, keepdims=True)
        rows = rows / np.where(norms == 0.0, 1.0, norms)

    n = g.node_count
    c = len(g.classes)
    return EmbeddingTable(
        dim=spec.dim,
        node_vectors=np.ascontiguousarray(rows[:n], dtype=np.float32),
        class_vectors=np.ascontiguousarray(rows[n : n + c], dtype=np.float32),
        prompt_vector=np.ascontiguousarray(rows[n + c], dtype=np.float32),
    )


def write_cache(table: EmbeddingTable, path: str | Path) -> None:
    """Binary cache: magic, u32 counts (nodes, classes, prompt=1, dim),
    float32 LE rows (nodes, classes, prompt), u32 CRC32 of the row bytes."""
    n = table.node_vectors.shape[0]
    c = table.class_vectors.shape[0]
    payload = b"".join(
        np.ascontiguousarray(a, dtype="<f4").tobytes()
        for a in (table.node_vectors, table.class_vectors, table.prompt_vector)
    )
    header = CACHE_MAGIC + struct.pack("<IIII", n, c, 1, table.dim)
    crc = struct.pack("<I", zlib.crc32(payload) & 0xFFFFFFFF)
    Path(path).write_bytes(header + payload + crc)


def read_cache(path: str | Path) -> EmbeddingTable:
    path = Path(path)
    if not path.is_file():
        raise DataFormatError(f"missing cache file: {path}")
    blob = path.read_bytes()
    if not blob.startswith(CACHE_MAGIC):
        raise DataFormatError(f"{path}: bad magic, not a ZGEMB1 cache")
    off = len(CACHE_MAGIC)
    if len(blob) < off + 16:
        raise DataFormatError(f"{path}: truncated header")
    n, c, p, dim = struct.unpack_from("<IIII", blob, off)
    off += 16
    if p != 1:
        raise DataFormatError(f"{path}: prompt_count {p} != 1")
    want = (n + c + 1) * dim * 4
    payload = blob[off : off + want]
    if len(payload) != want or len(blob) < off + want + 4:
        raise DataFormatError(f"{path}: truncated payload")
    (crc,) = struct.unpack_from("<I", blob, off + want)
    if crc != (zlib.crc32(payload) & 0xFFFFFFFF):
        raise DataFormatError(f"{path}: CRC32 mismatch")
    rows = np.frombuffer(payload, dtype="<f4").reshape(n + c + 1, dim)
    return EmbeddingTable(
        dim=dim,
        node_vectors=rows[:n].copy(),
        class_vectors=rows[n : n + c].copy(),
        prompt_vector=rows[n + c].copy(),
    )
