"""Region classification and the per-image analysis driver.

A detected region is judged along two axes: how far its centroid sits from
the edit box center (in box-diagonal units) and how similar its padded crop
is to the padded edit-box crop, both taken from the generated image.

========  ==================  =================
class     distance            similarity
========  ==================  =================
spatial   d_norm <  alpha     s <= beta
semantic  d_norm >= alpha     s >  beta
mixed     d_norm <  alpha     s >  beta
random    d_norm >= alpha     s <= beta
========  ==================  =================

Both comparisons are strict on the same side, so a region exactly on both
thresholds (d_norm == alpha, s == beta) lands in ``random``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import EditBox, ProbeConfig, RegionClass
from .detect import RawRegion, change_map, extract_regions, spill_rate, ssim_outside_box
from .embed import Embedder, cosine_similarity, get_embedder, padded_crop


def classify_pair(d_norm: float, similarity: float,
                  alpha: float, beta: float) -> RegionClass:
    """Map one (distance, similarity) pair to its region class."""
    near = d_norm < alpha
    similar = similarity > beta
    if near and not similar:
        return RegionClass.SPATIAL
    if not near and similar:
        return RegionClass.SEMANTIC
    if near and similar:
        return RegionClass.MIXED
    return RegionClass.RANDOM


@dataclass(frozen=True)
class SpilloverRegion:
    """A detected region with its similarity score and class label."""

    raw: RawRegion
    similarity: float
    cls: RegionClass

    @property
    def area(self) -> int:
        return self.raw.area

    @property
    def bbox(self) -> tuple[int, int, int, int]:
        return self.raw.bbox

    @property
    def centroid(self) -> tuple[float, float]:
        return self.raw.centroid

    @property
    def d_pixels(self) -> float:
        return self.raw.d_pixels

    @property
    def d_norm(self) -> float:
        return self.raw.d_norm

    def to_dict(self) -> dict:
        return {
            "bbox": list(self.bbox),
            "centroid": list(self.centroid),
            "area": self.area,
            "d_pixels": self.d_pixels,
            "d_norm": self.d_norm,
            "similarity": self.similarity,
            "class": self.cls.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SpilloverRegion":
        raw = RawRegion(
            area=int(d["area"]),
            bbox=tuple(int(v) for v in d["bbox"]),
            centroid=tuple(float(v) for v in d["centroid"]),
            d_pixels=float(d["d_pixels"]),
            d_norm=float(d["d_norm"]),
        )
        return cls(raw=raw, similarity=float(d["similarity"]),
                   cls=RegionClass(d["class"]))


def classify_regions(generated: np.ndarray, box: EditBox,
                     regions: Sequence[RawRegion], config: ProbeConfig,
                     embedder: Embedder) -> list[SpilloverRegion]:
    """Score and label detected regions against the edit-box content.

    The padded edit crop and every padded region crop are embedded in one
    batch (edit crop first), all taken from the generated image.
    """
    if not regions:
        return []
    crops = [padded_crop(generated, box.as_tuple(), config.pad)]
    crops.extend(padded_crop(generated, r.bbox, config.pad) for r in regions)
    vectors = embedder.embed(crops)
    edit_vec = vectors[0]
    out = []
    for raw, vec in zip(regions, vectors[1:]):
        s = cosine_similarity(edit_vec, vec)
        out.append(SpilloverRegion(
            raw=raw, similarity=s,
            cls=classify_pair(raw.d_norm, s, config.alpha, config.beta),
        ))
    return out


def count_classes(regions: Sequence[SpilloverRegion]) -> dict:
    counts = {c.value: 0 for c in RegionClass}
    for r in regions:
        counts[r.cls.value] += 1
    counts["total"] = len(regions)
    return counts


@dataclass(frozen=True)
class ImageAnalysis:
    """Everything measured for one (original, generated) pair."""

    image_id: str
    model: str
    spill_rate: float
    ssim: float
    regions: tuple[SpilloverRegion, ...]
    config_hash: str

    def to_dict(self) -> dict:
        return {
            "image_id": self.image_id,
            "model": self.model,
            "spill_rate": self.spill_rate,
            "ssim": self.ssim,
            "regions": [r.to_dict() for r in self.regions],
            "counts": count_classes(self.regions),
            "config_hash": self.config_hash,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ImageAnalysis":
        return cls(
            image_id=str(d["image_id"]),
            model=str(d["model"]),
            spill_rate=float(d["spill_rate"]),
            ssim=float(d["ssim"]),
            regions=tuple(SpilloverRegion.from_dict(r) for r in d["regions"]),
            config_hash=str(d["config_hash"]),
        )


def analyze_pair(original: np.ndarray, generated: np.ndarray, box: EditBox,
                 config: ProbeConfig, embedder: Optional[Embedder] = None,
                 image_id: str = "", model: str = "") -> ImageAnalysis:
    """Run the full per-image pipeline: detect, measure, classify."""
    if embedder is None:
        embedder = get_embedder(config)
    changed = change_map(original, generated, box, config)
    rate = spill_rate(changed, box)
    ssim = ssim_outside_box(original, generated, box)
    raw = extract_regions(changed, box, config)
    regions = classify_regions(generated, box, raw, config, embedder)
    return ImageAnalysis(
        image_id=image_id, model=model, spill_rate=rate, ssim=ssim,
        regions=tuple(regions), config_hash=config.config_hash(),
    )
