"""Synthetic image-pair fixtures with known ground truth.

Each fixture is an (original, generated) pair: a noisy gray background that
is pixel-identical in both images, an edit box whose interior is recolored
in the generated image, and a set of planted elliptical blobs outside the
box that exist only in the generated image. Because the background noise is
identical in both images it cancels exactly in the difference, so detection
behaves deterministically.

Color choices are coupled to the 32-wide histogram bins of the reference
embedder. Every blob sits on a "mat" rectangle painted identically in both
images with a color falling in the same histogram bins as the blob itself,
and the edit box gets a matching mat ring. A padded crop therefore contains
only colors from a single bin triple, which pins the crop similarity near
1.0 for related blobs and near 0.0 for unrelated ones regardless of blob
size. The recolored patch is inset 2 px inside the box so the blurred edit
difference decays below the detection threshold before it leaves the box.

Group presets: A plants near unrelated blobs (expected class spatial),
B far related blobs (semantic), C far unrelated blobs (random).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .core import (
    DatasetManifest,
    EditBox,
    ManifestEntry,
    RegionClass,
    box_center,
    box_diag,
    save_image,
    save_manifest,
)
from .detect import LUMA_WEIGHTS

PRNG_NAME = "pcg64"  # numpy default_rng bit generator
DEFAULT_MODEL_NAME = "synthetic"

# Palette. Bin triples refer to value // 32 per RGB channel.
BACKGROUND_BASE = 150          # +- uniform noise, identical in both images
BACKGROUND_NOISE = 10
EDIT_ORIGINAL_COLOR = (60, 60, 200)    # bins (1, 1, 6)
EDIT_NEW_COLOR = (230, 60, 60)         # bins (7, 1, 1)
EDIT_MAT_COLOR = (235, 45, 45)         # bins (7, 1, 1), same triple as the new color
RELATED_BLOB_COLOR = (230, 60, 60)     # bins (7, 1, 1)
RELATED_MAT_COLOR = (245, 50, 50)      # bins (7, 1, 1)
UNRELATED_BLOB_COLOR = (60, 200, 230)  # bins (1, 6, 7)
UNRELATED_MAT_COLOR = (45, 210, 245)   # bins (1, 6, 7)

EDIT_INSET = 2    # px between box edge and the recolored patch
MAT_PAD = 12      # blob mat margin: crop pad (10) plus detection slack
EDIT_MAT_PAD = 10  # edit mat ring width: exactly the crop pad
PLACE_TRIES = 500

DEFAULT_SIZE = (1024, 1024)  # (width, height)
DEFAULT_BOX_SIZE = 64
DEFAULT_CONTRAST = 33.0


class UnplaceableBlobError(RuntimeError):
    """No non-overlapping position was found for a blob."""


@dataclass(frozen=True)
class GroupPreset:
    n_blobs: tuple[int, int]      # inclusive range
    d_range: tuple[float, float]  # target centroid distance, diagonal units
    area_range: tuple[int, int]   # target blob area in px
    related: bool
    intended: RegionClass


GROUP_PRESETS = {
    "A": GroupPreset((2, 4), (0.8, 1.4), (200, 900), False, RegionClass.SPATIAL),
    "B": GroupPreset((2, 4), (1.6, 5.0), (200, 2000), True, RegionClass.SEMANTIC),
    "C": GroupPreset((1, 2), (1.6, 5.0), (200, 2000), False, RegionClass.RANDOM),
}


def luma_of(color: Sequence[float]) -> float:
    r, g, b = LUMA_WEIGHTS
    return r * color[0] + g * color[1] + b * color[2]


@dataclass(frozen=True)
class PlantedBlob:
    """One planted ellipse: exact pixel set plus intent."""

    runs: tuple[tuple[int, int, int], ...]  # (y, x_start, x_end) half-open
    bbox: tuple[int, int, int, int]
    centroid: tuple[float, float]
    area: int
    d_norm: float
    related: bool
    intended: RegionClass

    def mask(self, shape: tuple[int, int]) -> np.ndarray:
        m = np.zeros(shape, dtype=bool)
        for y, x0, x1 in self.runs:
            m[y, x0:x1] = True
        return m

    def to_dict(self) -> dict:
        return {
            "runs": [list(r) for r in self.runs],
            "bbox": list(self.bbox),
            "centroid": list(self.centroid),
            "area": self.area,
            "d_norm": self.d_norm,
            "related": self.related,
            "intended_class": self.intended.value,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PlantedBlob":
        return cls(
            runs=tuple(tuple(int(v) for v in r) for r in d["runs"]),
            bbox=tuple(int(v) for v in d["bbox"]),
            centroid=tuple(float(v) for v in d["centroid"]),
            area=int(d["area"]),
            d_norm=float(d["d_norm"]),
            related=bool(d["related"]),
            intended=RegionClass(d["intended_class"]),
        )


@dataclass(frozen=True)
class GroundTruth:
    image_id: str
    group: str
    seed: int
    size: tuple[int, int]  # (width, height)
    box: EditBox
    contrast: float
    blobs: tuple[PlantedBlob, ...]
    prng: str = PRNG_NAME

    def to_dict(self) -> dict:
        return {
            "image_id": self.image_id,
            "group": self.group,
            "seed": self.seed,
            "size": list(self.size),
            "box": list(self.box.as_tuple()),
            "contrast": self.contrast,
            "prng": self.prng,
            "blobs": [b.to_dict() for b in self.blobs],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GroundTruth":
        return cls(
            image_id=str(d["image_id"]),
            group=str(d["group"]),
            seed=int(d["seed"]),
            size=tuple(int(v) for v in d["size"]),
            box=EditBox(*(int(v) for v in d["box"])),
            contrast=float(d["contrast"]),
            prng=str(d["prng"]),
            blobs=tuple(PlantedBlob.from_dict(b) for b in d["blobs"]),
        )


@dataclass(frozen=True)
class Fixture:
    original: np.ndarray
    generated: np.ndarray
    box: EditBox
    truth: GroundTruth


def iou(a: np.ndarray, b: np.ndarray) -> float:
    """Intersection over union of two boolean masks."""
    union = np.logical_or(a, b).sum()
    if union == 0:
        return 1.0
    return float(np.logical_and(a, b).sum() / union)


def _rects_overlap(r1, r2) -> bool:
    return r1[0] < r2[2] and r2[0] < r1[2] and r1[1] < r2[3] and r2[1] < r1[3]


def _rasterize_ellipse(cx: int, cy: int, a: float, b: float):
    """Pixel runs of {(x, y): ((x-cx)/a)^2 + ((y-cy)/b)^2 <= 1}."""
    runs = []
    area = 0
    sx = 0.0
    sy = 0.0
    for y in range(cy - math.ceil(b), cy + math.ceil(b) + 1):
        t = 1.0 - ((y - cy) / b) ** 2
        if t < 0:
            continue
        half = a * math.sqrt(t)
        x0 = math.ceil(cx - half)
        x1 = math.floor(cx + half) + 1
        if x1 <= x0:
            continue
        runs.append((y, x0, x1))
        n = x1 - x0
        area += n
        sx += n * (x0 + x1 - 1) / 2.0
        sy += n * y
    if area == 0:
        raise ValueError("degenerate ellipse")
    return runs, area, (sx / area, sy / area)


def _paint_runs(img: np.ndarray, runs, color) -> None:
    for y, x0, x1 in runs:
        img[y, x0:x1] = color


def _plant_blobs(rng: np.random.Generator, preset: GroupPreset, size, box: EditBox,
                 group: str, seed: int):
    """Choose non-overlapping blob geometries; returns (blobs, mats)."""
    width, height = size
    cx0, cy0 = box_center(box)
    diag = box_diag(box)
    edit_mat = (box.x_min - EDIT_MAT_PAD, box.y_min - EDIT_MAT_PAD,
                box.x_max + EDIT_MAT_PAD, box.y_max + EDIT_MAT_PAD)
    n_blobs = int(rng.integers(preset.n_blobs[0], preset.n_blobs[1] + 1))
    blobs = []
    mats = []
    for bi in range(n_blobs):
        placed = False
        for _ in range(PLACE_TRIES):
            area_target = int(rng.integers(preset.area_range[0], preset.area_range[1] + 1))
            aspect = float(rng.uniform(1.0, 1.4))
            a = math.sqrt(area_target * aspect / math.pi)
            b = a / aspect
            if rng.random() < 0.5:
                a, b = b, a
            d_target = float(rng.uniform(*preset.d_range))
            angle = float(rng.uniform(0.0, 2.0 * math.pi))
            bcx = int(round(cx0 + d_target * diag * math.cos(angle)))
            bcy = int(round(cy0 + d_target * diag * math.sin(angle)))
            ra = math.ceil(a)
            rb = math.ceil(b)
            mat = (bcx - ra - MAT_PAD, bcy - rb - MAT_PAD,
                   bcx + ra + 1 + MAT_PAD, bcy + rb + 1 + MAT_PAD)
            if mat[0] < 0 or mat[1] < 0 or mat[2] > width or mat[3] > height:
                continue
            if _rects_overlap(mat, edit_mat):
                continue
            if any(_rects_overlap(mat, m) for m in mats):
                continue
            runs, area, centroid = _rasterize_ellipse(bcx, bcy, a, b)
            d_norm = math.hypot(centroid[0] - cx0, centroid[1] - cy0) / diag
            # revalidate the class zone after pixelation
            if preset.intended is RegionClass.SPATIAL and d_norm > 1.45:
                continue
            if preset.intended is not RegionClass.SPATIAL and d_norm < 1.55:
                continue
            xs0 = min(r[1] for r in runs)
            xs1 = max(r[2] for r in runs)
            ys0 = runs[0][0]
            ys1 = runs[-1][0] + 1
            blobs.append(PlantedBlob(
                runs=tuple(runs), bbox=(xs0, ys0, xs1, ys1),
                centroid=centroid, area=area, d_norm=d_norm,
                related=preset.related, intended=preset.intended,
            ))
            mats.append(mat)
            placed = True
            break
        if not placed:
            raise UnplaceableBlobError(
                f"could not place blob {bi + 1}/{n_blobs} (group {group}, seed {seed})")
    return blobs, mats


def generate_fixture(group: str, seed: int, *, size=DEFAULT_SIZE,
                     box: Optional[EditBox] = None,
                     contrast: float = DEFAULT_CONTRAST,
                     image_id: str = "") -> Fixture:
    """Build one deterministic fixture for a group preset.

    The contrast parameter sets the luma gap between each blob and the
    original pixels underneath it; detection is guaranteed for values
    around 30-38 at the default blur and threshold.
    """
    if group not in GROUP_PRESETS:
        raise ValueError(f"unknown group {group!r}, expected one of {sorted(GROUP_PRESETS)}")
    preset = GROUP_PRESETS[group]
    width, height = size
    if box is None:
        bx = (width - DEFAULT_BOX_SIZE) // 2
        by = (height - DEFAULT_BOX_SIZE) // 2
        box = EditBox(bx, by, bx + DEFAULT_BOX_SIZE, by + DEFAULT_BOX_SIZE)
    box.validate_for(width, height)
    if box.x_min < EDIT_MAT_PAD or box.y_min < EDIT_MAT_PAD \
            or box.x_max + EDIT_MAT_PAD > width or box.y_max + EDIT_MAT_PAD > height:
        raise ValueError("edit box too close to the border for its mat ring")

    rng = np.random.default_rng(seed)
    noise = rng.integers(-BACKGROUND_NOISE, BACKGROUND_NOISE + 1,
                         size=(height, width, 3))
    background = np.clip(BACKGROUND_BASE + noise, 0, 255).astype(np.uint8)
    original = background.copy()
    generated = background.copy()

    # edit mat ring, identical in both images
    em = (box.x_min - EDIT_MAT_PAD, box.y_min - EDIT_MAT_PAD,
          box.x_max + EDIT_MAT_PAD, box.y_max + EDIT_MAT_PAD)
    for img in (original, generated):
        img[em[1]:em[3], em[0]:em[2]] = EDIT_MAT_COLOR
    # box interior and the inset recolor
    original[box.slices()] = EDIT_ORIGINAL_COLOR
    generated[box.slices()] = EDIT_ORIGINAL_COLOR
    generated[box.y_min + EDIT_INSET:box.y_max - EDIT_INSET,
              box.x_min + EDIT_INSET:box.x_max - EDIT_INSET] = EDIT_NEW_COLOR

    blobs, mats = _plant_blobs(rng, preset, size, box, group, seed)
    blob_color = RELATED_BLOB_COLOR if preset.related else UNRELATED_BLOB_COLOR
    mat_color = RELATED_MAT_COLOR if preset.related else UNRELATED_MAT_COLOR
    under_gray = int(np.clip(round(luma_of(blob_color) + contrast), 0, 255))
    for blob, mat in zip(blobs, mats):
        for img in (original, generated):
            img[mat[1]:mat[3], mat[0]:mat[2]] = mat_color
        _paint_runs(original, blob.runs, (under_gray, under_gray, under_gray))
        _paint_runs(generated, blob.runs, blob_color)

    truth = GroundTruth(
        image_id=image_id or f"{group}{seed:06d}", group=group, seed=seed,
        size=(width, height), box=box, contrast=contrast, blobs=tuple(blobs),
    )
    return Fixture(original=original, generated=generated, box=box, truth=truth)


def write_batch(group: str, count: int, seed: int, out_dir, *,
                size=DEFAULT_SIZE, contrast: float = DEFAULT_CONTRAST) -> Path:
    """Render a batch of fixtures to disk in the manifest layout.

    Writes originals/, generated/<model>/, truth/ and manifest.json under
    out_dir; returns the manifest path. Image seeds are derived as
    (seed, index) so batches are reproducible and images independent.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    out = Path(out_dir)
    (out / "originals").mkdir(parents=True, exist_ok=True)
    (out / "generated" / DEFAULT_MODEL_NAME).mkdir(parents=True, exist_ok=True)
    (out / "truth").mkdir(parents=True, exist_ok=True)

    entries = []
    for i in range(count):
        image_id = f"{group}{i:04d}"
        fixture = generate_fixture(
            group, seed=int(np.random.default_rng([seed, i]).integers(2 ** 31)),
            size=size, contrast=contrast, image_id=image_id)
        orig_rel = f"originals/{image_id}.png"
        gen_rel = f"generated/{DEFAULT_MODEL_NAME}/{image_id}.png"
        save_image(fixture.original, out / orig_rel)
        save_image(fixture.generated, out / gen_rel)
        (out / "truth" / f"{image_id}.json").write_text(
            json.dumps(fixture.truth.to_dict(), indent=2) + "\n", encoding="utf-8")
        entries.append(ManifestEntry(
            image_id=image_id, category="synthetic", group=group,
            original=orig_rel, generated={DEFAULT_MODEL_NAME: gen_rel},
            edit_box=fixture.box,
        ))

    manifest = DatasetManifest(entries=tuple(entries), base_dir=out)
    manifest_path = out / "manifest.json"
    save_manifest(manifest, manifest_path)
    return manifest_path


def load_truth(truth_dir, image_id: str) -> GroundTruth:
    path = Path(truth_dir) / f"{image_id}.json"
    return GroundTruth.from_dict(json.loads(path.read_text(encoding="utf-8")))
