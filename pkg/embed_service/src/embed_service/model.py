"""Model loading and batched image embedding.

One bundle holds the vision model, its preprocessor and the metadata the
health endpoint reports. The default model is CLIP ViT-L/14 pulled from
the hub; ``tiny-random`` builds a small randomly initialised model with
the same 768-wide projection head from a fixed seed, for offline runs
and tests. Both paths share the exact preprocessing recipe (resize
shortest edge, center crop, CLIP mean/std normalisation) and produce
L2-normalised vectors.
"""

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import torch
from PIL import Image
from transformers import (
    CLIPImageProcessor,
    CLIPVisionConfig,
    CLIPVisionModelWithProjection,
)

DEFAULT_MODEL_ID = "openai/clip-vit-large-patch14"
TINY_MODEL_ID = "tiny-random"
_TINY_SEED = 1234


@dataclass(frozen=True)
class ModelBundle:
    model_id: str
    model: torch.nn.Module = field(repr=False)
    processor: CLIPImageProcessor = field(repr=False)
    device: str
    dim: int
    preprocess: str


def _describe(processor: CLIPImageProcessor) -> str:
    size = processor.size.get("shortest_edge")
    crop = processor.crop_size
    return (f"resize shortest edge {size}, center crop "
            f"{crop['height']}x{crop['width']}, CLIP mean/std normalize")


def _tiny_bundle(device: str) -> ModelBundle:
    config = CLIPVisionConfig(hidden_size=64, intermediate_size=128,
                              num_hidden_layers=2, num_attention_heads=2,
                              image_size=32, patch_size=8,
                              projection_dim=768)
    torch.manual_seed(_TINY_SEED)
    model = CLIPVisionModelWithProjection(config)
    processor = CLIPImageProcessor(size={"shortest_edge": 32},
                                   crop_size={"height": 32, "width": 32})
    return _finish(TINY_MODEL_ID, model, processor, device)


def _finish(model_id: str, model, processor, device: str) -> ModelBundle:
    model.to(device)
    model.eval()
    model.requires_grad_(False)
    return ModelBundle(model_id=model_id, model=model, processor=processor,
                       device=device, dim=int(model.config.projection_dim),
                       preprocess=_describe(processor))


def load_bundle(model_id: str = DEFAULT_MODEL_ID,
                device: str = "cpu") -> ModelBundle:
    """Load a model by id; ``tiny-random`` never touches the network."""
    if model_id == TINY_MODEL_ID:
        return _tiny_bundle(device)
    model = CLIPVisionModelWithProjection.from_pretrained(model_id)
    processor = CLIPImageProcessor.from_pretrained(model_id)
    return _finish(model_id, model, processor, device)


def embed_images(bundle: ModelBundle,
                 images: Sequence[Image.Image]) -> np.ndarray:
    """(N, dim) array of unit-norm embeddings, one row per input image."""
    inputs = bundle.processor(images=list(images), return_tensors="pt")
    pixels = inputs["pixel_values"].to(bundle.device)
    with torch.no_grad():
        out = bundle.model(pixel_values=pixels)
    vectors = out.image_embeds
    vectors = vectors / vectors.norm(dim=-1, keepdim=True)
    return vectors.cpu().numpy()
