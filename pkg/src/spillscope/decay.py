"""Spatial decay of changed area with distance from the edit box.

Regions are bucketed by centroid distance (in box-diagonal units) into
half-open bins [lo, hi); whatever lands at or beyond the last edge goes to
an overflow bucket. Each bin's density is its pooled region area divided by
the area of the annulus the bin spans (pi * (hi^2 - lo^2), in squared
diagonal units), so a spatially uniform change field gives a flat profile.
Profiles are reported normalized to 100 at the first non-empty bin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .core import DEFAULT_DISTANCE_BINS


@dataclass(frozen=True)
class DistanceBin:
    """One [lo, hi) distance bin with pooled region statistics."""

    lo: float
    hi: float
    count: int
    area_total: int
    n_similar: int  # regions with similarity strictly above beta

    @property
    def annulus_area(self) -> float:
        return math.pi * (self.hi ** 2 - self.lo ** 2)

    @property
    def density(self) -> float:
        return self.area_total / self.annulus_area

    @property
    def semantic_pct(self) -> Optional[float]:
        """Percent of the bin's regions that are embedding-similar; None if empty."""
        if self.count == 0:
            return None
        return 100.0 * self.n_similar / self.count


@dataclass(frozen=True)
class OverflowBucket:
    """Regions at or beyond the last bin edge."""

    threshold: float
    count: int
    area_total: int


def bin_regions(regions: Sequence, edges: Sequence[float] = DEFAULT_DISTANCE_BINS,
                beta: float = 0.80) -> tuple[list[DistanceBin], OverflowBucket]:
    """Bucket regions by d_norm into [lo, hi) bins plus the overflow bucket.

    ``regions`` only needs ``d_norm``, ``area`` and ``similarity`` attributes.
    """
    edges = [float(e) for e in edges]
    if len(edges) < 2 or any(b <= a for a, b in zip(edges, edges[1:])):
        raise ValueError(f"bin edges must be strictly increasing: {edges}")
    counts = [0] * (len(edges) - 1)
    areas = [0] * (len(edges) - 1)
    similar = [0] * (len(edges) - 1)
    over_count = 0
    over_area = 0
    for r in regions:
        d = r.d_norm
        if d < edges[0]:
            raise ValueError(f"region distance {d} below first edge {edges[0]}")
        if d >= edges[-1]:
            over_count += 1
            over_area += r.area
            continue
        # bins are few; linear scan keeps the [lo, hi) convention obvious
        for i in range(len(edges) - 1):
            if edges[i] <= d < edges[i + 1]:
                counts[i] += 1
                areas[i] += r.area
                if r.similarity > beta:
                    similar[i] += 1
                break
    bins = [
        DistanceBin(lo=edges[i], hi=edges[i + 1], count=counts[i],
                    area_total=areas[i], n_similar=similar[i])
        for i in range(len(edges) - 1)
    ]
    return bins, OverflowBucket(threshold=edges[-1], count=over_count,
                                area_total=over_area)


def decay_profile(bins: Sequence[DistanceBin]) -> list[float]:
    """Densities rescaled so the first non-empty bin reads 100.

    Empty bins read 0. If every bin is empty the profile is all zeros.
    """
    anchor = next((b.density for b in bins if b.count > 0), None)
    if anchor is None:
        return [0.0] * len(bins)
    return [100.0 * b.density / anchor if b.count > 0 else 0.0 for b in bins]


def semantic_proportions(bins: Sequence[DistanceBin]) -> list[Optional[float]]:
    """Per-bin percent of embedding-similar regions; None for empty bins."""
    return [b.semantic_pct for b in bins]
