"""Crop embedding backends and similarity.

Two interchangeable backends produce L2-normalized vectors from RGB crops:

* ``ReferenceEmbedder``: a deterministic 24-dim color histogram, suitable for
  tests and offline runs. No external dependencies beyond numpy.
* ``RemoteEmbedder``: posts PNG-encoded crops to an HTTP service implementing
  ``POST /embed`` and returns its vectors.

Both satisfy the same protocol: ``embed(crops) -> (N, dim) float array`` with
rows in input order.
"""

from __future__ import annotations

import base64
import io
from typing import Protocol, Sequence

import numpy as np
import requests
from PIL import Image

from .core import ProbeConfig

HIST_BINS_PER_CHANNEL = 8
HIST_BIN_WIDTH = 256 // HIST_BINS_PER_CHANNEL  # 32


class EmbedServiceError(RuntimeError):
    """The remote embedding service failed or returned a malformed reply."""


class Embedder(Protocol):
    dim: int

    def embed(self, crops: Sequence[np.ndarray]) -> np.ndarray: ...


def padded_crop(img: np.ndarray, bbox: tuple[int, int, int, int],
                pad: int) -> np.ndarray:
    """Crop bbox (x_min, y_min, x_max, y_max) expanded by pad on all sides,
    clamped to the image bounds."""
    h, w = img.shape[:2]
    x_min, y_min, x_max, y_max = bbox
    x0 = max(0, x_min - pad)
    y0 = max(0, y_min - pad)
    x1 = min(w, x_max + pad)
    y1 = min(h, y_max + pad)
    if x0 >= x1 or y0 >= y1:
        raise ValueError(f"bbox {bbox} with pad {pad} yields an empty crop")
    return img[y0:y1, x0:x1]


def reference_embed(crop: np.ndarray) -> np.ndarray:
    """24-dim color histogram embedding of one RGB crop.

    Each channel is binned into 8 uniform bins of width 32 (value // 32);
    the three 8-bin histograms are concatenated R, G, B and the result is
    L2-normalized. Invariant under any permutation of the pixels.
    """
    if crop.ndim != 3 or crop.shape[2] != 3 or crop.size == 0:
        raise ValueError(f"expected a non-empty (H, W, 3) crop, got {crop.shape}")
    n = HIST_BINS_PER_CHANNEL
    binned = crop.astype(np.int64) // HIST_BIN_WIDTH
    vec = np.concatenate([
        np.bincount(binned[:, :, c].ravel(), minlength=n)[:n] for c in range(3)
    ]).astype(np.float64)
    norm = np.linalg.norm(vec)
    return vec / norm


class ReferenceEmbedder:
    """Batch wrapper over :func:`reference_embed`."""

    dim = 3 * HIST_BINS_PER_CHANNEL

    def embed(self, crops: Sequence[np.ndarray]) -> np.ndarray:
        if len(crops) == 0:
            return np.zeros((0, self.dim), dtype=np.float64)
        return np.stack([reference_embed(c) for c in crops])


def _encode_png(crop: np.ndarray) -> str:
    buf = io.BytesIO()
    Image.fromarray(np.asarray(crop, dtype=np.uint8), mode="RGB").save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


class RemoteEmbedder:
    """Client for an HTTP embedding service.

    Sends ``POST {base_url}/embed`` with ``{"images": [<b64 PNG>, ...]}`` in
    chunks of at most ``batch`` images and expects
    ``{"dim": D, "vectors": [[...], ...]}`` with one vector per input, in
    order. ``dim`` is learned from the first reply.
    """

    def __init__(self, base_url: str, batch: int = 64, timeout: float = 60.0):
        if batch < 1:
            raise ValueError(f"batch must be >= 1, got {batch}")
        self.base_url = base_url.rstrip("/")
        self.batch = batch
        self.timeout = timeout
        self.dim = -1  # unknown until the first reply

    def _post_chunk(self, crops: Sequence[np.ndarray]) -> np.ndarray:
        payload = {"images": [_encode_png(c) for c in crops]}
        try:
            resp = requests.post(f"{self.base_url}/embed", json=payload,
                                 timeout=self.timeout)
        except requests.RequestException as e:
            raise EmbedServiceError(f"embed request failed: {e}") from e
        if resp.status_code != 200:
            raise EmbedServiceError(
                f"embed service returned HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            body = resp.json()
            dim = int(body["dim"])
            vectors = np.asarray(body["vectors"], dtype=np.float64)
        except (ValueError, KeyError, TypeError) as e:
            raise EmbedServiceError(f"malformed embed reply: {e}") from e
        if vectors.ndim != 2 or vectors.shape != (len(crops), dim):
            raise EmbedServiceError(
                f"embed reply shape {vectors.shape} does not match "
                f"{len(crops)} inputs of dim {dim}")
        if self.dim == -1:
            self.dim = dim
        elif dim != self.dim:
            raise EmbedServiceError(f"embed dim changed from {self.dim} to {dim}")
        return vectors

    def embed(self, crops: Sequence[np.ndarray]) -> np.ndarray:
        if len(crops) == 0:
            return np.zeros((0, max(self.dim, 0)), dtype=np.float64)
        chunks = [
            self._post_chunk(crops[i:i + self.batch])
            for i in range(0, len(crops), self.batch)
        ]
        return np.vstack(chunks)


def get_embedder(config: ProbeConfig) -> Embedder:
    """Build the embedder named by ``config.embedder``.

    ``"reference"`` selects the histogram embedder; ``"remote:<url>"``
    selects the HTTP client pointed at ``<url>``.
    """
    name = config.embedder
    if name == "reference":
        return ReferenceEmbedder()
    if name.startswith("remote:"):
        url = name[len("remote:"):]
        if not url:
            raise ValueError("remote embedder needs a URL: remote:<url>")
        return RemoteEmbedder(url, batch=config.embed_batch)
    raise ValueError(f"unknown embedder {name!r}")


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Cosine of the angle between two vectors; 0.0 if either is zero."""
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))
