"""Pluggable text encoders.

The service wraps whichever encoder it is given: a real
sentence-transformers model, or a deterministic hash-seeded stand-in that
needs no model download (select it with the model name "hash" or
"hash:<dim>").
"""

from __future__ import annotations

import hashlib
import struct

import numpy as np


class HashEncoder:
    """Deterministic stand-in for a language model.

    Each text seeds a PCG64 generator with the first 8 bytes of
    SHA-256(little-endian seed || UTF-8 text); the vector is `dim` draws
    uniform in [-1, 1], L2-normalized. max_length truncates by
    whitespace-separated tokens.
    """

    pooling = "none"

    def __init__(self, dim: int = 32, seed: int = 0):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.dim = dim
        self.seed = seed
        self.name = f"hash:{dim}"

    def encode(self, texts: list[str], max_length: int = 256) -> np.ndarray:
        rows = np.empty((len(texts), self.dim), dtype=np.float32)
        for i, text in enumerate(texts):
            text = " ".join(text.split()[:max_length])
            h = hashlib.sha256()
            h.update(struct.pack("<q", self.seed))
            h.update(text.encode("utf-8"))
            rng = np.random.Generator(
                np.random.PCG64(int.from_bytes(h.digest()[:8], "little"))
            )
            v = rng.uniform(-1.0, 1.0, size=self.dim)
            norm = np.linalg.norm(v)
            if norm == 0.0:
                v[0] = 1.0
                norm = 1.0
            rows[i] = (v / norm).astype(np.float32)
        return rows


class SentenceTransformerEncoder:
    """Wraps a sentence-transformers model; loaded lazily on first use."""

    def __init__(self, model_name: str):
        self.name = model_name
        self._model = None

    def _load(self):
        if self._model is None:
            from sentence_transformers import SentenceTransformer

            self._model = SentenceTransformer(self.name)
        return self._model

    @property
    def dim(self) -> int:
        return int(self._load().get_sentence_embedding_dimension())

    @property
    def pooling(self) -> str:
        # sentence-transformers models typically mean-pool rather than
        # using a [CLS] token; report whatever the loaded model does
        model = self._load()
        try:
            pool = model[1]
            for mode in ("mean", "cls", "max"):
                if getattr(pool, f"pooling_mode_{mode}_tokens", False):
                    return mode
        except (IndexError, AttributeError):
            pass
        return "unknown"

    def encode(self, texts: list[str], max_length: int = 256) -> np.ndarray:
        model = self._load()
        model.max_seq_length = max_length
        return np.asarray(
            model.encode(texts, convert_to_numpy=True, show_progress_bar=False),
            dtype=np.float32,
        ).reshape(len(texts), -1)


def make_encoder(model_name: str):
    """"hash" or "hash:<dim>" builds the deterministic stub; any other
    name loads that sentence-transformers model."""
    if model_name == "hash":
        return HashEncoder()
    if model_name.startswith("hash:"):
        return HashEncoder(dim=int(model_name.split(":", 1)[1]))
    return SentenceTransformerEncoder(model_name)
