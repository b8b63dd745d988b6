"""Shared domain types, configuration, and dataset manifest handling.

Conventions used throughout the package:

* Color images are ``numpy`` arrays of shape ``(H, W, 3)``, dtype ``uint8``,
  RGB channel order.
* Grayscale intermediates are float64 arrays of shape ``(H, W)`` in [0, 255].
* Binary change maps are bool arrays of shape ``(H, W)``.
* Points are ``(x, y)`` with ``x`` the column and ``y`` the row.
* Rectangles use inclusive-min / exclusive-max pixel coordinates, so the
  area of a box is ``(x_max - x_min) * (y_max - y_min)``.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np
from PIL import Image

SUPPORTED_FORMATS = {"PNG", "JPEG"}


class ManifestError(ValueError):
    """Raised when a dataset manifest cannot be loaded or validated.

    Carries optional context: the offending file, 1-based line number (for
    JSON syntax errors), and the entry index / field name (for schema errors).
    """

    def __init__(self, message, path=None, line=None, entry=None, field=None):
        parts = [message]
        if path is not None:
            parts.append(f"file={path}")
        if line is not None:
            parts.append(f"line={line}")
        if entry is not None:
            parts.append(f"entry={entry}")
        if field is not None:
            parts.append(f"field={field}")
        super().__init__("; ".join(str(p) for p in parts))
        self.path = path
        self.line = line
        self.entry = entry
        self.field = field


class RegionClass(str, Enum):
    """Four-way taxonomy of a changed region outside the edit box."""

    SPATIAL = "spatial"
    SEMANTIC = "semantic"
    MIXED = "mixed"
    RANDOM = "random"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


@dataclass(frozen=True)
class EditBox:
    """The annotated edit rectangle, inclusive-min / exclusive-max."""

    x_min: int
    y_min: int
    x_max: int
    y_max: int

    def __post_init__(self):
        if not (0 <= self.x_min < self.x_max and 0 <= self.y_min < self.y_max):
            raise ValueError(f"invalid edit box {self.as_tuple()}")

    def as_tuple(self) -> tuple[int, int, int, int]:
        return (self.x_min, self.y_min, self.x_max, self.y_max)

    @property
    def width(self) -> int:
        return self.x_max - self.x_min

    @property
    def height(self) -> int:
        return self.y_max - self.y_min

    @property
    def area(self) -> int:
        return self.width * self.height

    def validate_for(self, width: int, height: int) -> None:
        """Check the box fits an image of the given dimensions."""
        if self.x_max > width or self.y_max > height:
            raise ValueError(
                f"edit box {self.as_tuple()} exceeds image bounds {width}x{height}"
            )

    def slices(self) -> tuple[slice, slice]:
        """(row, column) slices selecting the box interior."""
        return (slice(self.y_min, self.y_max), slice(self.x_min, self.x_max))

    @classmethod
    def from_string(cls, text: str) -> "EditBox":
        """Parse 'x_min,y_min,x_max,y_max'."""
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 4:
            raise ValueError(f"expected 4 comma-separated integers, got {text!r}")
        return cls(*(int(p) for p in parts))


def box_center(box: EditBox) -> tuple[float, float]:
    """Real-valued center of the box, ((x_min+x_max)/2, (y_min+y_max)/2)."""
    return ((box.x_min + box.x_max) / 2.0, (box.y_min + box.y_max) / 2.0)


def box_diag(box: EditBox) -> float:
    """Euclidean length of the box diagonal; strictly positive."""
    return math.hypot(box.x_max - box.x_min, box.y_max - box.y_min)


DEFAULT_DISTANCE_BINS = (0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 5.0, 10.0)


@dataclass(frozen=True)
class ProbeConfig:
    """All tunables of the detection / classification pipeline.

    Defaults follow the reference operating point: pixel threshold 15 on the
    0-255 scale, blur sigma 2.0, minimum region area 100 px, distance factor
    1.5, similarity threshold 0.80, 10 px crop padding, and 7 distance bins.
    """

    tau: float = 15.0
    sigma: float = 2.0
    min_area: int = 100
    alpha: float = 1.5
    beta: float = 0.80
    pad: int = 10
    epsilon: float = 0.01
    min_regions_for_wus: int = 5
    distance_bins: tuple[float, ...] = DEFAULT_DISTANCE_BINS
    embed_batch: int = 64
    embedder: str = "reference"

    def __post_init__(self):
        if not (0 < self.tau < 255):
            raise ValueError(f"tau must be in (0, 255), got {self.tau}")
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.min_area < 1:
            raise ValueError(f"min_area must be >= 1, got {self.min_area}")
        if self.alpha <= 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if not (-1 < self.beta < 1):
            raise ValueError(f"beta must be in (-1, 1), got {self.beta}")
        if self.pad < 0:
            raise ValueError(f"pad must be non-negative, got {self.pad}")
        if self.embed_batch < 1:
            raise ValueError(f"embed_batch must be >= 1, got {self.embed_batch}")
        bins = tuple(float(b) for b in self.distance_bins)
        if len(bins) < 2 or bins[0] != 0.0:
            raise ValueError("distance_bins must start at 0 and define >= 1 bin")
        if any(b2 <= b1 for b1, b2 in zip(bins, bins[1:])):
            raise ValueError(f"distance_bins must be strictly increasing: {bins}")
        object.__setattr__(self, "distance_bins", bins)

    def to_dict(self) -> dict:
        return {
            "tau": self.tau,
            "sigma": self.sigma,
            "min_area": self.min_area,
            "alpha": self.alpha,
            "beta": self.beta,
            "pad": self.pad,
            "epsilon": self.epsilon,
            "min_regions_for_wus": self.min_regions_for_wus,
            "distance_bins": list(self.distance_bins),
            "embed_batch": self.embed_batch,
            "embedder": self.embedder,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ProbeConfig":
        known = {f: d[f] for f in cls.__dataclass_fields__ if f in d}
        if "distance_bins" in known:
            known["distance_bins"] = tuple(known["distance_bins"])
        return cls(**known)

    def config_hash(self) -> str:
        """Stable short hash of the snapshot, embedded in every output."""
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]

    def with_overrides(self, **kwargs) -> "ProbeConfig":
        return replace(self, **kwargs)


# ---------------------------------------------------------------------------
# Image I/O


def load_image(path) -> np.ndarray:
    """Decode a PNG or JPEG file to an (H, W, 3) uint8 RGB array."""
    with Image.open(path) as im:
        if im.format not in SUPPORTED_FORMATS:
            raise ValueError(f"unsupported image format {im.format!r} for {path}")
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def save_image(arr: np.ndarray, path) -> None:
    """Write an (H, W, 3) uint8 RGB array losslessly as PNG."""
    Image.fromarray(np.asarray(arr, dtype=np.uint8), mode="RGB").save(path, format="PNG")


def image_dimensions(path) -> tuple[int, int]:
    """(width, height) from the file header without decoding pixel data."""
    with Image.open(path) as im:
        return im.size


# ---------------------------------------------------------------------------
# Dataset manifest


@dataclass(frozen=True)
class ManifestEntry:
    image_id: str
    category: str
    original: str
    generated: Mapping[str, str]
    edit_box: EditBox
    group: Optional[str] = None
    absent: frozenset = frozenset()  # models whose generated file is missing

    def has_model(self, model: str) -> bool:
        return model in self.generated and model not in self.absent


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple[ManifestEntry, ...]
    base_dir: Path

    def models(self) -> tuple[str, ...]:
        names = sorted({m for e in self.entries for m in e.generated})
        return tuple(names)

    def usable(self, model: str) -> tuple[ManifestEntry, ...]:
        return tuple(e for e in self.entries if e.has_model(model))

    def usable_count(self, model: str) -> int:
        return len(self.usable(model))

    def resolve(self, relpath: str) -> Path:
        p = Path(relpath)
        return p if p.is_absolute() else self.base_dir / p


def _require(entry: Mapping, key: str, idx: int, path) -> object:
    if key not in entry:
        raise ManifestError(f"missing required key {key!r}", path=path, entry=idx, field=key)
    return entry[key]


def load_manifest(path) -> DatasetManifest:
    """Load and validate a manifest file.

    The manifest is a UTF-8 JSON array of entry objects with keys
    ``image_id``, ``category``, optional ``group``, ``original``,
    ``generated`` (model name -> relative path) and ``edit_box``
    (``[x_min, y_min, x_max, y_max]``).

    Originals must exist (the edit box is validated against their
    dimensions here); generated files that are missing on disk are
    retained but flagged absent for that model.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ManifestError("manifest file not found", path=path)
    except json.JSONDecodeError as e:
        raise ManifestError(f"manifest is not valid JSON: {e.msg}", path=path, line=e.lineno)
    if not isinstance(raw, list):
        raise ManifestError("manifest top level must be a JSON array", path=path)

    base = path.parent
    entries = []
    seen_ids = set()
    for idx, item in enumerate(raw):
        if not isinstance(item, Mapping):
            raise ManifestError("entry must be a JSON object", path=path, entry=idx)
        image_id = str(_require(item, "image_id", idx, path))
        if image_id in seen_ids:
            raise ManifestError(f"duplicate image_id {image_id!r}", path=path, entry=idx, field="image_id")
        seen_ids.add(image_id)
        category = str(_require(item, "category", idx, path))
        group = item.get("group")
        if group is not None and group not in ("A", "B", "C"):
            raise ManifestError(f"group must be A, B or C, got {group!r}", path=path, entry=idx, field="group")
        original = str(_require(item, "original", idx, path))
        if not original:
            raise ManifestError("original path is empty", path=path, entry=idx, field="original")
        generated = _require(item, "generated", idx, path)
        if not isinstance(generated, Mapping) or not all(
            isinstance(v, str) and v for v in generated.values()
        ):
            raise ManifestError("generated must map model names to non-empty paths",
                                path=path, entry=idx, field="generated")
        box_raw = _require(item, "edit_box", idx, path)
        try:
            box = EditBox(*(int(v) for v in box_raw))
        except (TypeError, ValueError) as e:
            raise ManifestError(f"bad edit_box {box_raw!r}: {e}", path=path, entry=idx, field="edit_box")

        orig_path = Path(original)
        if not orig_path.is_absolute():
            orig_path = base / orig_path
        if not orig_path.is_file():
            raise ManifestError(f"original image not found: {orig_path}", path=path, entry=idx, field="original")
        w, h = image_dimensions(orig_path)
        try:
            box.validate_for(w, h)
        except ValueError as e:
            raise ManifestError(str(e), path=path, entry=idx, field="edit_box")

        absent = frozenset(
            model for model, rel in generated.items()
            if not (Path(rel) if Path(rel).is_absolute() else base / rel).is_file()
        )
        entries.append(ManifestEntry(
            image_id=image_id, category=category, group=group,
            original=original, generated=dict(generated), edit_box=box,
            absent=absent,
        ))
    return DatasetManifest(entries=tuple(entries), base_dir=base)


def save_manifest(manifest: DatasetManifest, path) -> None:
    """Serialize back to the manifest schema (absence flags are derived,
    not stored, so load -> save -> load round-trips)."""
    out = []
    for e in manifest.entries:
        item = {
            "image_id": e.image_id,
            "category": e.category,
            "original": e.original,
            "generated": dict(sorted(e.generated.items())),
            "edit_box": list(e.edit_box.as_tuple()),
        }
        if e.group is not None:
            item["group"] = e.group
        out.append(item)
    Path(path).write_text(json.dumps(out, indent=2, sort_keys=True) + "\n", encoding="utf-8")
