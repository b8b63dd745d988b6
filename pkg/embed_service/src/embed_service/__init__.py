"""Sidecar HTTP service for batched image embeddings."""

from .app import MAX_BATCH, EmbedRequest, create_app
from .model import (
    DEFAULT_MODEL_ID,
    TINY_MODEL_ID,
    ModelBundle,
    embed_images,
    load_bundle,
)

__version__ = "0.1.0"

__all__ = [
    "MAX_BATCH",
    "EmbedRequest",
    "create_app",
    "DEFAULT_MODEL_ID",
    "TINY_MODEL_ID",
    "ModelBundle",
    "embed_images",
    "load_bundle",
    "__version__",
]
