"""Pixel-level change detection.

Pipeline: RGB -> luma -> Gaussian blur -> absolute difference -> strict
threshold -> zero out the edit box -> 8-connected components -> per-region
geometry. Also computes the outside-box spill rate and mean SSIM, both
defined over non-edit-box pixels only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .core import EditBox, ProbeConfig, box_center, box_diag

LUMA_WEIGHTS = (0.299, 0.587, 0.114)

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
SSIM_L = 255.0


def to_grayscale(img: np.ndarray) -> np.ndarray:
    """(H, W, 3) uint8 RGB -> (H, W) float64 luma in [0, 255].

    Uses the 0.299 / 0.587 / 0.114 weighting; no rounding or clipping.
    """
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) image, got shape {img.shape}")
    r, g, b = LUMA_WEIGHTS
    f = img.astype(np.float64)
    return r * f[:, :, 0] + g * f[:, :, 1] + b * f[:, :, 2]


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian of radius ceil(3*sigma)."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    radius = math.ceil(3.0 * sigma)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def gaussian_blur(gray: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur with mirrored (symmetric) borders.

    The border reflects about the edge pixel, i.e. pad value at distance k
    equals the pixel at distance k-1 inside.
    """
    kernel = gaussian_kernel(sigma)
    out = ndimage.correlate1d(gray, kernel, axis=0, mode="reflect")
    return ndimage.correlate1d(out, kernel, axis=1, mode="reflect")


def change_map(original: np.ndarray, generated: np.ndarray,
               box: EditBox, config: ProbeConfig) -> np.ndarray:
    """Bool map of changed pixels outside the edit box.

    Both images are converted to luma and blurred with the same sigma; a
    pixel is changed when the absolute blurred difference strictly exceeds
    tau. Pixels inside the box are forced False.
    """
    if original.shape != generated.shape:
        raise ValueError(
            f"image shapes differ: {original.shape} vs {generated.shape}")
    box.validate_for(original.shape[1], original.shape[0])
    a = gaussian_blur(to_grayscale(original), config.sigma)
    b = gaussian_blur(to_grayscale(generated), config.sigma)
    changed = np.abs(a - b) > config.tau
    changed[box.slices()] = False
    return changed


def spill_rate(changed: np.ndarray, box: EditBox) -> float:
    """Fraction of non-edit-box pixels that changed.

    Pixel-level: counts every changed pixel outside the box, including those
    in regions too small to survive the area filter. Returns 0.0 when the
    box covers the whole image.
    """
    h, w = changed.shape
    outside_total = h * w - box.area
    if outside_total == 0:
        return 0.0
    outside_changed = int(changed.sum())  # box already zeroed in change_map
    return outside_changed / outside_total


@dataclass(frozen=True)
class RawRegion:
    """Geometry of one 8-connected changed region outside the edit box."""

    area: int
    bbox: tuple[int, int, int, int]  # x_min, y_min, x_max, y_max (exclusive max)
    centroid: tuple[float, float]    # (x, y), mean of member pixel coordinates
    d_pixels: float                  # centroid distance to edit box center
    d_norm: float                    # d_pixels / box diagonal


def extract_regions(changed: np.ndarray, box: EditBox,
                    config: ProbeConfig) -> list[RawRegion]:
    """Label 8-connected components, drop those under min_area, compute
    geometry, and order by area descending then (y_min, x_min) of the bbox.
    """
    structure = np.ones((3, 3), dtype=int)
    labels, count = ndimage.label(changed, structure=structure)
    if count == 0:
        return []

    areas = np.bincount(labels.ravel(), minlength=count + 1)[1:]
    keep = np.nonzero(areas >= config.min_area)[0] + 1
    if keep.size == 0:
        return []

    cx, cy = box_center(box)
    diag = box_diag(box)

    ys, xs = np.nonzero(changed)
    lab = labels[ys, xs]
    order = np.argsort(lab, kind="stable")
    ys, xs, lab = ys[order], xs[order], lab[order]
    # contiguous runs per label id
    starts = np.searchsorted(lab, np.arange(1, count + 1))
    ends = np.searchsorted(lab, np.arange(1, count + 1), side="right")

    regions = []
    for lid in keep:
        s, e = starts[lid - 1], ends[lid - 1]
        ry, rx = ys[s:e], xs[s:e]
        x_min, x_max = int(rx.min()), int(rx.max()) + 1
        y_min, y_max = int(ry.min()), int(ry.max()) + 1
        cxr = float(rx.mean())
        cyr = float(ry.mean())
        d = math.hypot(cxr - cx, cyr - cy)
        regions.append(RawRegion(
            area=int(areas[lid - 1]),
            bbox=(x_min, y_min, x_max, y_max),
            centroid=(cxr, cyr),
            d_pixels=d,
            d_norm=d / diag,
        ))

    regions.sort(key=lambda r: (-r.area, r.bbox[1], r.bbox[0]))
    return regions


# ---------------------------------------------------------------------------
# SSIM


def _ssim_window() -> np.ndarray:
    radius = SSIM_WINDOW // 2
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / SSIM_SIGMA) ** 2)
    return k / k.sum()


def _local_mean(img: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    out = ndimage.correlate1d(img, kernel, axis=0, mode="reflect")
    return ndimage.correlate1d(out, kernel, axis=1, mode="reflect")


def ssim_map(a_gray: np.ndarray, b_gray: np.ndarray) -> np.ndarray:
    """Per-pixel SSIM between two luma images (no blur applied).

    11x11 Gaussian window with sigma 1.5, stability constants
    C1 = (K1*L)^2, C2 = (K2*L)^2 with K1=0.01, K2=0.03, L=255.
    """
    if a_gray.shape != b_gray.shape:
        raise ValueError(f"shapes differ: {a_gray.shape} vs {b_gray.shape}")
    h, w = a_gray.shape
    if h < SSIM_WINDOW or w < SSIM_WINDOW:
        raise ValueError(
            f"image {w}x{h} smaller than the {SSIM_WINDOW}px SSIM window")
    kernel = _ssim_window()
    c1 = (SSIM_K1 * SSIM_L) ** 2
    c2 = (SSIM_K2 * SSIM_L) ** 2

    mu_a = _local_mean(a_gray, kernel)
    mu_b = _local_mean(b_gray, kernel)
    mu_aa = _local_mean(a_gray * a_gray, kernel)
    mu_bb = _local_mean(b_gray * b_gray, kernel)
    mu_ab = _local_mean(a_gray * b_gray, kernel)

    var_a = mu_aa - mu_a * mu_a
    var_b = mu_bb - mu_b * mu_b
    cov = mu_ab - mu_a * mu_b

    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return num / den


def ssim_outside_box(original: np.ndarray, generated: np.ndarray,
                     box: EditBox) -> float:
    """Mean of the SSIM map over pixels outside the edit box.

    Computed on unblurred luma. Returns 1.0 if the box covers the image.
    """
    a = to_grayscale(original)
    b = to_grayscale(generated)
    box.validate_for(a.shape[1], a.shape[0])
    smap = ssim_map(a, b)
    mask = np.ones(a.shape, dtype=bool)
    mask[box.slices()] = False
    if not mask.any():
        return 1.0
    return float(smap[mask].mean())
