"""Additive adapters over encoder outputs.

The low-rank form is x -> x + alpha * (dropout(x) @ W_down @ W_up), with
W_up zero-initialized so a fresh adapter is exactly the identity map. A
dense d x d variant backs the full-parameter-update ablation.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataFormatError, NumericError

CKPT_MAGIC = b"ZGADP1\n"


def _dropout_mask(shape, rate: float, training: bool, rng) -> np.ndarray | None:
    """Inverted-dropout mask; None means the identity mask."""
    if not training or rate == 0.0:
        return None
    if rng is None:
        raise ConfigError("training with dropout requires an rng")
    keep = rng.random(shape) >= rate
    return keep.astype(np.float64) / (1.0 - rate)


@dataclass
class LowRankAdapter:
    w_down: np.ndarray  # d x r
    w_up: np.ndarray    # r x d
    alpha: float = 16.0
    dropout_rate: float = 0.1

    def __post_init__(self):
        d, r = self.w_down.shape
        if self.w_up.shape != (r, d):
            raise ConfigError(
                f"w_up shape {self.w_up.shape} inconsistent with w_down {self.w_down.shape}"
            )
        if self.alpha < 1.0:
            raise ConfigError("alpha must be >= 1")
        if not (0.0 <= self.dropout_rate < 1.0):
            raise ConfigError("dropout_rate must be in [0, 1)")
        if not (np.all(np.isfinite(self.w_down)) and np.all(np.isfinite(self.w_up))):
            raise NumericError("non-finite adapter weights")

    @property
    def dim(self) -> int:
        return self.w_down.shape[0]

    @property
    def rank(self) -> int:
        return self.w_down.shape[1]

    @classmethod
    def initialize(cls, dim: int, rank: int = 4, alpha: float = 16.0,
                   dropout_rate: float = 0.1, seed: int = 0) -> "LowRankAdapter":
        """W_down uniform(-1/sqrt(d), 1/sqrt(d)), W_up zero: identity start."""
        rng = np.random.default_rng(seed)
        bound = 1.0 / np.sqrt(dim)
        return cls(
            w_down=rng.uniform(-bound, bound, size=(dim, rank)),
            w_up=np.zeros((rank, dim)),
            alpha=alpha,
            dropout_rate=dropout_rate,
        )

    def parameters(self) -> dict[str, np.ndarray]:
        return {"w_down": self.w_down, "w_up": self.w_up}

    def parameter_count(self) -> int:
        return self.w_down.size + self.w_up.size

    def forward(self, x: np.ndarray, training: bool = False, rng=None):
        """Returns (output, cache) where cache feeds `backward`."""
        if x.shape[1] != self.dim:
            raise ConfigError(f"input dim {x.shape[1]} != adapter dim {self.dim}")
        mask = _dropout_mask(x.shape, self.dropout_rate, training, rng)
        xm = x if mask is None else x * mask
        out = x + self.alpha * (xm @ self.w_down @ self.w_up)
        return out, {"xm": xm}

    def backward(self, cache: dict, grad_out: np.ndarray,
                 grads: dict[str, np.ndarray]) -> None:
        """Accumulate dL/dW into `grads` given dL/d(output)."""
        xm = cache["xm"]
        grads["w_down"] += self.alpha * (xm.T @ (grad_out @ self.w_up.T))
        grads["w_up"] += self.alpha * ((xm @ self.w_down).T @ grad_out)

    def zero_grads(self) -> dict[str, np.ndarray]:
        return {k: np.zeros_like(v) for k, v in self.parameters().items()}


@dataclass
class DenseAdapter:
    """Full d x d additive update: x -> x + dropout(x) @ W. Stands in for
    the no-low-rank ablation."""

    w: np.ndarray
    dropout_rate: float = 0.1
    alpha: float = 1.0

    @property
    def dim(self) -> int:
        return self.w.shape[0]

    @property
    def rank(self) -> int:
        return self.w.shape[0]

    @classmethod
    def initialize(cls, dim: int, dropout_rate: float = 0.1, seed: int = 0,
                   **_ignored) -> "DenseAdapter":
        return cls(w=np.zeros((dim, dim)), dropout_rate=dropout_rate)

    def parameters(self) -> dict[str, np.ndarray]:
        return {"w": self.w}

    def parameter_count(self) -> int:
        return self.w.size

    def forward(self, x: np.ndarray, training: bool = False, rng=None):
        if x.shape[1] != self.dim:
            raise ConfigError(f"input dim {x.shape[1]} != adapter dim {self.dim}")
        mask = _dropout_mask(x.shape, self.dropout_rate, training, rng)
        xm = x if mask is None else x * mask
        return x + xm @ self.w, {"xm": xm}

    def backward(self, cache, grad_out, grads) -> None:
        grads["w"] += cache["xm"].T @ grad_out

    def zero_grads(self) -> dict[str, np.ndarray]:
        return {"w": np.zeros_like(self.w)}


def save_checkpoint(a: LowRankAdapter, path: str | Path) -> None:
    """ZGADP1 magic, u32 d, u32 r, f32 alpha, then W_down and W_up as
    little-endian float32 row-major, then u32 CRC32 of the weight bytes."""
    payload = (
        np.ascontiguousarray(a.w_down, dtype="<f4").tobytes()
        + np.ascontiguousarray(a.w_up, dtype="<f4").tobytes()
    )
    header = CKPT_MAGIC + struct.pack("<IIf", a.dim, a.rank, a.alpha)
    Path(path).write_bytes(
        header + payload + struct.pack("<I", zlib.crc32(payload) & 0xFFFFFFFF)
    )


def load_checkpoint(path: str | Path, dropout_rate: float = 0.0) -> LowRankAdapter:
    blob = Path(path).read_bytes()
    if not blob.startswith(CKPT_MAGIC):
        raise DataFormatError(f"{path}: bad magic, not a ZGADP1 checkpoint")
    off = len(CKPT_MAGIC)
    d, r, alpha = struct.unpack_from("<IIf", blob, off)
    off += 12
    want = 2 * d * r * 4
    payload = blob[off : off + want]
    if len(payload) != want or len(blob) < off + want + 4:
        raise DataFormatError(f"{path}: truncated checkpoint")
    (crc,) = struct.unpack_from("<I", blob, off + want)
    if crc != (zlib.crc32(payload) & 0xFFFFFFFF):
        raise DataFormatError(f"{path}: CRC32 mismatch")
    w = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    return LowRankAdapter(
        w_down=w[: d * r].reshape(d, r),
        w_up=w[d * r :].reshape(r, d),
        alpha=float(alpha),
        dropout_rate=dropout_rate,
    )


def apply_adapter(x: np.ndarray, a, training: bool = False, rng=None) -> np.ndarray:
    """Functional wrapper when the backward cache is not needed."""
    out, _ = a.forward(x, training=training, rng=rng)
    return out
