"""Threshold sensitivity sweeps.

Classification depends on the raw features only through the two thresholds,
so a sweep never re-detects or re-embeds: the per-region
(distance, similarity) pairs are cached once per image and every
(alpha, beta) cell is recomputed from that cache. A cell's score for a
model is the same WUS aggregate used elsewhere: the per-image mean over
images with enough regions to score.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from .classify import ImageAnalysis, classify_pair
from .core import ProbeConfig, RegionClass
from .metrics import wus

RANK_DECIMALS = 9  # WUS values closer than this are treated as tied


@dataclass(frozen=True)
class ImageFeatures:
    """The sweep-relevant remainder of one analyzed image."""

    image_id: str
    pairs: tuple[tuple[float, float], ...]  # (d_norm, similarity) per region


@dataclass(frozen=True)
class FeatureCache:
    """Per-model cached features, ordered by image_id."""

    models: Mapping[str, tuple[ImageFeatures, ...]]

    def model_names(self) -> tuple[str, ...]:
        return tuple(sorted(self.models))


def build_cache(analyses_by_model: Mapping[str, Sequence[ImageAnalysis]]) -> FeatureCache:
    out = {}
    for model, analyses in analyses_by_model.items():
        feats = [
            ImageFeatures(
                image_id=a.image_id,
                pairs=tuple((r.d_norm, r.similarity) for r in a.regions),
            )
            for a in sorted(analyses, key=lambda a: a.image_id)
        ]
        out[model] = tuple(feats)
    return FeatureCache(models=out)


@dataclass(frozen=True)
class SweepCell:
    """One model's score at one (alpha, beta) operating point."""

    alpha: float
    beta: float
    model: str
    wus_mean: Optional[float]  # None when no image could be scored
    wus_images: int
    n_semantic: int  # pooled over all regions at this operating point
    n_spatial: int


@dataclass(frozen=True)
class SweepResult:
    alphas: tuple[float, ...]
    betas: tuple[float, ...]
    cells: tuple[SweepCell, ...]

    def cell(self, alpha: float, beta: float, model: str) -> SweepCell:
        for c in self.cells:
            if c.alpha == alpha and c.beta == beta and c.model == model:
                return c
        raise KeyError((alpha, beta, model))

    def grid(self) -> dict:
        """{(alpha, beta): {model: wus_mean}} view of the cells."""
        out: dict = {}
        for c in self.cells:
            out.setdefault((c.alpha, c.beta), {})[c.model] = c.wus_mean
        return out


def _score_model(features: Sequence[ImageFeatures], alpha: float, beta: float,
                 config: ProbeConfig) -> tuple[Optional[float], int, int, int]:
    values = []
    pooled_sem = 0
    pooled_spa = 0
    for img in features:
        n_sem = 0
        n_spa = 0
        for d, s in img.pairs:
            cls = classify_pair(d, s, alpha, beta)
            if cls is RegionClass.SEMANTIC:
                n_sem += 1
            elif cls is RegionClass.SPATIAL:
                n_spa += 1
        pooled_sem += n_sem
        pooled_spa += n_spa
        if len(img.pairs) >= config.min_regions_for_wus:
            values.append(wus(n_sem, n_spa, config.epsilon))
    mean = sum(values) / len(values) if values else None
    return mean, len(values), pooled_sem, pooled_spa


def sweep(cache: FeatureCache, alphas: Sequence[float], betas: Sequence[float],
          config: ProbeConfig) -> SweepResult:
    """Score every model at every (alpha, beta) combination."""
    alphas = tuple(float(a) for a in alphas)
    betas = tuple(float(b) for b in betas)
    if not alphas or not betas:
        raise ValueError("sweep needs at least one alpha and one beta")
    cells = []
    for alpha in alphas:
        for beta in betas:
            for model in cache.model_names():
                mean, n_scored, n_sem, n_spa = _score_model(
                    cache.models[model], alpha, beta, config)
                cells.append(SweepCell(
                    alpha=alpha, beta=beta, model=model,
                    wus_mean=mean, wus_images=n_scored,
                    n_semantic=n_sem, n_spatial=n_spa,
                ))
    return SweepResult(alphas=alphas, betas=betas, cells=tuple(cells))


@dataclass(frozen=True)
class RankingStability:
    """Whether the model ordering by WUS is the same in every sweep cell."""

    stable: bool
    reference: tuple[str, ...]  # ordering in the first cell, best first
    violations: tuple[dict, ...]  # [{alpha, beta, ranking | reason}, ...]


def _cell_ranking(scores: Mapping[str, Optional[float]]) -> Optional[tuple[str, ...]]:
    """Models best-first, or None when the order is ambiguous (tie / unscored)."""
    if any(v is None for v in scores.values()):
        return None
    rounded = {m: round(v, RANK_DECIMALS) for m, v in scores.items()}
    if len(set(rounded.values())) != len(rounded):
        return None
    return tuple(sorted(rounded, key=lambda m: -rounded[m]))


def check_ranking_stability(result: SweepResult) -> RankingStability:
    """Compare the per-cell model ranking against the first cell's.

    Any cell whose ranking differs, ties, or is unscorable is reported as a
    violation with its (alpha, beta) named.
    """
    grid = result.grid()
    keys = [(a, b) for a in result.alphas for b in result.betas]
    reference = None
    violations = []
    for a, b in keys:
        ranking = _cell_ranking(grid[(a, b)])
        if ranking is None:
            violations.append({"alpha": a, "beta": b, "reason": "tie or unscored model"})
            continue
        if reference is None:
            reference = ranking
        elif ranking != reference:
            violations.append({"alpha": a, "beta": b, "ranking": list(ranking)})
    return RankingStability(
        stable=not violations and reference is not None,
        reference=reference if reference is not None else (),
        violations=tuple(violations),
    )
