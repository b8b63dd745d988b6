"""Per-image and per-model summary metrics.

The world-understanding score (WUS) is the ratio of semantic to spatial
region counts with a small stabilizer in the denominator; it is undefined
(None) for images with fewer regions than ``min_regions_for_wus``, since a
ratio over a handful of regions is mostly noise. Semantic density is the
average number of semantic regions per analyzed image.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .classify import ImageAnalysis
from .core import ProbeConfig, RegionClass


def wus(n_semantic: int, n_spatial: int, epsilon: float = 0.01) -> float:
    """World-understanding score: n_semantic / (n_spatial + epsilon)."""
    if n_semantic < 0 or n_spatial < 0:
        raise ValueError("region counts must be non-negative")
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    return n_semantic / (n_spatial + epsilon)


def image_wus(analysis: ImageAnalysis, config: ProbeConfig) -> Optional[float]:
    """WUS for one image, or None when it has too few regions to score."""
    if len(analysis.regions) < config.min_regions_for_wus:
        return None
    n_sem = sum(1 for r in analysis.regions if r.cls is RegionClass.SEMANTIC)
    n_spa = sum(1 for r in analysis.regions if r.cls is RegionClass.SPATIAL)
    return wus(n_sem, n_spa, config.epsilon)


def semantic_density(n_semantic_total: int, images_used: int) -> float:
    """Mean semantic regions per analyzed image."""
    if images_used <= 0:
        raise ValueError(f"images_used must be positive, got {images_used}")
    if n_semantic_total < 0:
        raise ValueError("semantic count must be non-negative")
    return n_semantic_total / images_used


@dataclass(frozen=True)
class ModelAggregate:
    """Model-level summary over a set of per-image analyses.

    ``mean_spill_rate`` and ``mean_ssim`` are unweighted per-image means.
    ``class_proportions`` pools regions across images. ``wus_mean`` averages
    per-image WUS over the images where it is defined (None when it is
    defined for none); ``wus_pooled`` is the ratio over pooled counts.
    """

    model: str
    images_used: int
    mean_spill_rate: float
    mean_ssim: float
    total_regions: int
    regions_per_image: float
    class_counts: dict
    class_proportions: dict
    wus_mean: Optional[float]
    wus_images: int
    wus_pooled: float
    semantic_total: int
    semantic_density: float

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "images_used": self.images_used,
            "mean_spill_rate": self.mean_spill_rate,
            "mean_ssim": self.mean_ssim,
            "total_regions": self.total_regions,
            "regions_per_image": self.regions_per_image,
            "class_counts": dict(self.class_counts),
            "class_proportions": dict(self.class_proportions),
            "wus_mean": self.wus_mean,
            "wus_images": self.wus_images,
            "wus_pooled": self.wus_pooled,
            "semantic_total": self.semantic_total,
            "semantic_density": self.semantic_density,
        }


def aggregate_model(model: str, analyses: Sequence[ImageAnalysis],
                    config: ProbeConfig) -> ModelAggregate:
    """Summarize one model's analyses; order-independent (sorted by image_id)."""
    if not analyses:
        raise ValueError(f"no analyses to aggregate for model {model!r}")
    ordered = sorted(analyses, key=lambda a: a.image_id)
    n = len(ordered)

    counts = {c.value: 0 for c in RegionClass}
    for a in ordered:
        for r in a.regions:
            counts[r.cls.value] += 1
    total = sum(counts.values())
    proportions = {
        k: (v / total if total else 0.0) for k, v in counts.items()
    }

    wus_values = [w for a in ordered if (w := image_wus(a, config)) is not None]
    wus_mean = sum(wus_values) / len(wus_values) if wus_values else None
    wus_pooled = wus(counts[RegionClass.SEMANTIC.value],
                     counts[RegionClass.SPATIAL.value], config.epsilon)

    sem_total = counts[RegionClass.SEMANTIC.value]
    return ModelAggregate(
        model=model,
        images_used=n,
        mean_spill_rate=sum(a.spill_rate for a in ordered) / n,
        mean_ssim=sum(a.ssim for a in ordered) / n,
        total_regions=total,
        regions_per_image=total / n,
        class_counts=counts,
        class_proportions=proportions,
        wus_mean=wus_mean,
        wus_images=len(wus_values),
        wus_pooled=wus_pooled,
        semantic_total=sem_total,
        semantic_density=semantic_density(sem_total, n),
    )
