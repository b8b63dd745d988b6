"""Domain types, config, image I/O, and manifest handling."""

import json
import math

import numpy as np
import pytest
from PIL import Image

from spillscope.core import (
    DatasetManifest,
    EditBox,
    ManifestError,
    ProbeConfig,
    box_center,
    box_diag,
    load_image,
    load_manifest,
    save_image,
    save_manifest,
)


class TestEditBox:
    def test_geometry(self):
        box = EditBox(2, 3, 10, 7)
        assert box.width == 8
        assert box.height == 4
        assert box.area == 32
        assert box.as_tuple() == (2, 3, 10, 7)

    @pytest.mark.parametrize("coords", [
        (-1, 0, 4, 4), (0, -2, 4, 4), (4, 0, 4, 4), (5, 0, 4, 4),
        (0, 4, 4, 4), (0, 0, 0, 4), (0, 0, 4, 0),
    ])
    def test_invalid(self, coords):
        with pytest.raises(ValueError):
            EditBox(*coords)

    def test_from_string(self):
        assert EditBox.from_string(" 1, 2 ,9,8") == EditBox(1, 2, 9, 8)
        with pytest.raises(ValueError):
            EditBox.from_string("1,2,3")
        with pytest.raises(ValueError):
            EditBox.from_string("1,2,3,x")

    def test_validate_for(self):
        EditBox(0, 0, 10, 10).validate_for(10, 10)
        with pytest.raises(ValueError):
            EditBox(0, 0, 11, 10).validate_for(10, 10)
        with pytest.raises(ValueError):
            EditBox(0, 0, 10, 11).validate_for(10, 10)

    def test_slices_select_interior(self):
        arr = np.zeros((6, 8))
        arr[EditBox(1, 2, 4, 5).slices()] = 1
        assert arr.sum() == 9
        assert arr[2, 1] == 1 and arr[5, 1] == 0 and arr[2, 4] == 0

    def test_center_and_diag(self):
        box = EditBox(0, 0, 3, 4)
        assert box_center(box) == (1.5, 2.0)
        assert box_diag(box) == 5.0

    def test_normalized_distance_example(self):
        # centroid (6.5, 6.0) against box (0, 0, 3, 4): sqrt(41) / 5
        box = EditBox(0, 0, 3, 4)
        cx, cy = box_center(box)
        d = math.hypot(6.5 - cx, 6.0 - cy)
        assert d == pytest.approx(6.4031242374328485, abs=1e-12)
        assert d / box_diag(box) == pytest.approx(1.2806248474865697, abs=1e-12)


class TestProbeConfig:
    def test_defaults(self):
        c = ProbeConfig()
        assert c.tau == 15.0
        assert c.sigma == 2.0
        assert c.min_area == 100
        assert c.alpha == 1.5
        assert c.beta == 0.80
        assert c.pad == 10
        assert c.epsilon == 0.01
        assert c.min_regions_for_wus == 5
        assert c.distance_bins == (0.0, 0.5, 1.0, 1.5, 2.0, 3.0, 5.0, 10.0)
        assert c.embed_batch == 64
        assert c.embedder == "reference"

    @pytest.mark.parametrize("kwargs", [
        {"tau": 0.0}, {"tau": 255.0}, {"sigma": 0.0}, {"min_area": 0},
        {"alpha": 0.0}, {"beta": 1.0}, {"beta": -1.0}, {"pad": -1},
        {"embed_batch": 0}, {"distance_bins": (0.5, 1.0)},
        {"distance_bins": (0.0,)}, {"distance_bins": (0.0, 1.0, 1.0)},
        {"distance_bins": (0.0, 2.0, 1.0)},
    ])
    def test_validation(self, kwargs):
        with pytest.raises(ValueError):
            ProbeConfig(**kwargs)

    def test_round_trip(self):
        c = ProbeConfig(tau=20.0, distance_bins=(0.0, 1.0, 4.0))
        assert ProbeConfig.from_dict(c.to_dict()) == c

    def test_hash_stability_and_sensitivity(self):
        assert ProbeConfig().config_hash() == ProbeConfig().config_hash()
        assert ProbeConfig().config_hash() != ProbeConfig(tau=16).config_hash()
        assert len(ProbeConfig().config_hash()) == 12

    def test_with_overrides(self):
        c = ProbeConfig().with_overrides(beta=0.9)
        assert c.beta == 0.9
        assert c.tau == 15.0


class TestImageIO:
    def test_png_round_trip(self, tmp_path):
        arr = np.random.default_rng(0).integers(0, 256, (12, 9, 3), dtype=np.uint8)
        save_image(arr, tmp_path / "x.png")
        assert np.array_equal(load_image(tmp_path / "x.png"), arr)

    def test_jpeg_loads(self, tmp_path):
        arr = np.full((16, 16, 3), 128, dtype=np.uint8)
        Image.fromarray(arr).save(tmp_path / "x.jpg", format="JPEG")
        out = load_image(tmp_path / "x.jpg")
        assert out.shape == (16, 16, 3)
        assert out.dtype == np.uint8

    def test_other_formats_rejected(self, tmp_path):
        Image.fromarray(np.zeros((8, 8, 3), np.uint8)).save(
            tmp_path / "x.bmp", format="BMP")
        with pytest.raises(ValueError, match="unsupported"):
            load_image(tmp_path / "x.bmp")


def _write_png(path, size=(20, 16)):
    path.parent.mkdir(parents=True, exist_ok=True)
    arr = np.zeros((size[1], size[0], 3), dtype=np.uint8)
    save_image(arr, path)


def _manifest_tree(tmp_path, entries):
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps(entries), encoding="utf-8")
    return path


def _entry(i=0, **overrides):
    e = {
        "image_id": f"img{i:03d}",
        "category": "object_recolor",
        "original": f"originals/img{i:03d}.png",
        "generated": {"m1": f"generated/m1/img{i:03d}.png"},
        "edit_box": [2, 2, 10, 10],
    }
    e.update(overrides)
    return e


class TestManifest:
    def test_load_valid(self, tmp_path):
        _write_png(tmp_path / "originals/img000.png")
        _write_png(tmp_path / "generated/m1/img000.png")
        m = load_manifest(_manifest_tree(tmp_path, [_entry(0, group="A")]))
        assert len(m.entries) == 1
        e = m.entries[0]
        assert e.image_id == "img000"
        assert e.group == "A"
        assert e.edit_box == EditBox(2, 2, 10, 10)
        assert e.has_model("m1")
        assert m.models() == ("m1",)
        assert m.usable_count("m1") == 1

    def test_missing_file(self, tmp_path):
        with pytest.raises(ManifestError, match="not found"):
            load_manifest(tmp_path / "nope.json")

    def test_bad_json_reports_line(self, tmp_path):
        path = tmp_path / "manifest.json"
        path.write_text('[\n{"image_id": "a",}\n]', encoding="utf-8")
        with pytest.raises(ManifestError, match="line=2"):
            load_manifest(path)

    def test_top_level_must_be_array(self, tmp_path):
        path = tmp_path / "manifest.json"
        path.write_text('{"image_id": "a"}', encoding="utf-8")
        with pytest.raises(ManifestError, match="array"):
            load_manifest(path)

    @pytest.mark.parametrize("key", ["image_id", "category", "original",
                                     "generated", "edit_box"])
    def test_missing_key(self, tmp_path, key):
        entry = _entry(0)
        del entry[key]
        with pytest.raises(ManifestError, match=key):
            load_manifest(_manifest_tree(tmp_path, [entry]))

    def test_duplicate_image_id(self, tmp_path):
        _write_png(tmp_path / "originals/img000.png")
        _write_png(tmp_path / "generated/m1/img000.png")
        with pytest.raises(ManifestError, match="duplicate"):
            load_manifest(_manifest_tree(tmp_path, [_entry(0), _entry(0)]))

    def test_missing_original_is_an_error(self, tmp_path):
        _write_png(tmp_path / "generated/m1/img000.png")
        with pytest.raises(ManifestError, match="original image not found"):
            load_manifest(_manifest_tree(tmp_path, [_entry(0)]))

    def test_missing_generated_is_flagged_absent(self, tmp_path):
        _write_png(tmp_path / "originals/img000.png")
        m = load_manifest(_manifest_tree(tmp_path, [_entry(0)]))
        e = m.entries[0]
        assert "m1" in e.absent
        assert not e.has_model("m1")
        assert m.usable_count("m1") == 0
        assert m.models() == ("m1",)  # still listed, just unusable

    def test_box_must_fit_original(self, tmp_path):
        _write_png(tmp_path / "originals/img000.png", size=(8, 8))
        with pytest.raises(ManifestError, match="edit_box"):
            load_manifest(_manifest_tree(tmp_path, [_entry(0)]))

    def test_bad_group(self, tmp_path):
        _write_png(tmp_path / "originals/img000.png")
        _write_png(tmp_path / "generated/m1/img000.png")
        with pytest.raises(ManifestError, match="group"):
            load_manifest(_manifest_tree(tmp_path, [_entry(0, group="Z")]))

    def test_save_round_trip(self, tmp_path):
        _write_png(tmp_path / "originals/img000.png")
        _write_png(tmp_path / "generated/m1/img000.png")
        _write_png(tmp_path / "originals/img001.png")
        _write_png(tmp_path / "generated/m1/img001.png")
        m1 = load_manifest(_manifest_tree(
            tmp_path, [_entry(0, group="B"), _entry(1)]))
        save_manifest(m1, tmp_path / "copy.json")
        m2 = load_manifest(tmp_path / "copy.json")
        assert [e.image_id for e in m2.entries] == ["img000", "img001"]
        assert m2.entries[0].group == "B"
        assert m2.entries[0].edit_box == m1.entries[0].edit_box
        assert m2.entries[0].generated == m1.entries[0].generated
