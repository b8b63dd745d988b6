"""Batch execution over a manifest and rendering of results.

A batch run writes one JSON per (model, image) under
``<out>/results/<model>/<image_id>.json`` plus the config snapshot at
``<out>/config.json``. Workers only parallelize independent per-image work
and every file is written from exactly one task, so outputs are
byte-identical regardless of worker count. Timing goes to a separate
``run_info.json`` that deterministic comparisons should ignore.

The report step reads a run directory back and emits delimited tables plus
rendered figures; the sweep step reuses the cached per-region features.
"""

from __future__ import annotations

import csv
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .ablation import SweepResult, build_cache, check_ranking_stability, sweep
from .classify import ImageAnalysis, analyze_pair
from .core import DatasetManifest, ManifestEntry, ProbeConfig, RegionClass, load_image
from .decay import bin_regions, decay_profile, semantic_proportions
from .embed import get_embedder
from .metrics import ModelAggregate, aggregate_model


class ReportError(RuntimeError):
    """A run directory is missing, inconsistent, or unreadable."""


# ---------------------------------------------------------------------------
# Batch


@dataclass
class ModelRunStats:
    model: str
    n_ok: int = 0
    n_failed: int = 0
    n_absent: int = 0
    failures: list = field(default_factory=list)  # (image_id, message)

    @property
    def mostly_failed(self) -> bool:
        attempted = self.n_ok + self.n_failed
        return attempted > 0 and self.n_failed > self.n_ok


@dataclass
class BatchSummary:
    out_dir: Path
    per_model: dict
    elapsed_seconds: float

    @property
    def any_model_mostly_failed(self) -> bool:
        return any(s.mostly_failed for s in self.per_model.values())


def _analyze_entry(entry: ManifestEntry, model: str, manifest: DatasetManifest,
                   config: ProbeConfig) -> ImageAnalysis:
    original = load_image(manifest.resolve(entry.original))
    generated = load_image(manifest.resolve(entry.generated[model]))
    embedder = get_embedder(config)
    return analyze_pair(original, generated, entry.edit_box, config,
                        embedder=embedder, image_id=entry.image_id, model=model)


def run_batch(manifest: DatasetManifest, models: Sequence[str],
              config: ProbeConfig, out_dir, workers: int = 8,
              log=sys.stderr) -> BatchSummary:
    """Analyze every usable (model, image) pair and write the run directory.

    Per-image failures are logged and skipped; the summary records them so
    the caller can decide whether a model's run is unusable.
    """
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    known = manifest.models()
    for m in models:
        if m not in known:
            raise ValueError(f"model {m!r} not in manifest (has {list(known)})")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(
        json.dumps({**config.to_dict(), "config_hash": config.config_hash()},
                   indent=2, sort_keys=True) + "\n", encoding="utf-8")

    stats = {m: ModelRunStats(model=m) for m in models}
    tasks = []
    for model in models:
        (out / "results" / model).mkdir(parents=True, exist_ok=True)
        for entry in manifest.entries:
            if model not in entry.generated:
                continue
            if model in entry.absent:
                stats[model].n_absent += 1
                continue
            tasks.append((model, entry))

    def work(task):
        model, entry = task
        analysis = _analyze_entry(entry, model, manifest, config)
        path = out / "results" / model / f"{entry.image_id}.json"
        path.write_text(json.dumps(analysis.to_dict(), indent=2, sort_keys=True) + "\n",
                        encoding="utf-8")

    started = time.monotonic()
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {pool.submit(work, t): t for t in tasks}
        for future, (model, entry) in futures.items():
            try:
                future.result()
                stats[model].n_ok += 1
            except Exception as e:  # soft per-image failure
                stats[model].n_failed += 1
                stats[model].failures.append((entry.image_id, str(e)))
                print(f"[{model}] {entry.image_id}: {e}", file=log)
    elapsed = time.monotonic() - started

    (out / "run_info.json").write_text(json.dumps({
        "elapsed_seconds": elapsed,
        "workers": workers,
        "models": {m: {"ok": s.n_ok, "failed": s.n_failed, "absent": s.n_absent}
                   for m, s in stats.items()},
    }, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return BatchSummary(out_dir=out, per_model=stats, elapsed_seconds=elapsed)


# ---------------------------------------------------------------------------
# Reading a run directory back


def load_run_config(run_dir) -> ProbeConfig:
    path = Path(run_dir) / "config.json"
    if not path.is_file():
        raise ReportError(f"no config.json under {run_dir}")
    return ProbeConfig.from_dict(json.loads(path.read_text(encoding="utf-8")))


def load_results(run_dir) -> dict:
    """{model: [ImageAnalysis, ...]} from a run directory, sorted by image_id.

    All files must share one config_hash; mixing runs is an error.
    """
    results_root = Path(run_dir) / "results"
    if not results_root.is_dir():
        raise ReportError(f"no results directory under {run_dir}")
    out = {}
    hashes = set()
    for model_dir in sorted(p for p in results_root.iterdir() if p.is_dir()):
        analyses = []
        for f in sorted(model_dir.glob("*.json")):
            try:
                analyses.append(ImageAnalysis.from_dict(
                    json.loads(f.read_text(encoding="utf-8"))))
            except (ValueError, KeyError) as e:
                raise ReportError(f"unreadable result file {f}: {e}")
        if analyses:
            out[model_dir.name] = sorted(analyses, key=lambda a: a.image_id)
            hashes.update(a.config_hash for a in analyses)
    if not out:
        raise ReportError(f"no results found under {run_dir}")
    if len(hashes) > 1:
        raise ReportError(f"results mix config hashes: {sorted(hashes)}")
    return out


# ---------------------------------------------------------------------------
# Delimited exports


def _write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def export_main_results(aggregates: Sequence[ModelAggregate], path: Path) -> None:
    header = ["model", "images_used", "spill_rate_pct", "ssim",
              "regions_per_image", "spatial_pct", "semantic_pct", "mixed_pct",
              "random_pct", "wus", "wus_images", "wus_pooled",
              "semantic_total", "semantic_density"]
    rows = []
    for agg in aggregates:
        p = agg.class_proportions
        rows.append([
            agg.model, agg.images_used,
            100.0 * agg.mean_spill_rate, agg.mean_ssim, agg.regions_per_image,
            100.0 * p[RegionClass.SPATIAL.value],
            100.0 * p[RegionClass.SEMANTIC.value],
            100.0 * p[RegionClass.MIXED.value],
            100.0 * p[RegionClass.RANDOM.value],
            "" if agg.wus_mean is None else agg.wus_mean,
            agg.wus_images, agg.wus_pooled,
            agg.semantic_total, agg.semantic_density,
        ])
    _write_csv(path, header, rows)


def _pooled_regions(analyses: Sequence[ImageAnalysis]):
    return [r for a in analyses for r in a.regions]


def export_decay(results: dict, config: ProbeConfig, out: Path) -> dict:
    """Write decay tables; returns {model: (bins, overflow)} for reuse."""
    binned = {}
    density_rows = []
    proportion_rows = []
    overflow_rows = []
    for model in sorted(results):
        bins, overflow = bin_regions(_pooled_regions(results[model]),
                                     edges=config.distance_bins, beta=config.beta)
        binned[model] = (bins, overflow)
        profile = decay_profile(bins)
        props = semantic_proportions(bins)
        for b, norm, prop in zip(bins, profile, props):
            density_rows.append([model, b.lo, b.hi, b.count, b.area_total,
                                 b.density, norm])
            proportion_rows.append([model, b.lo, b.hi, b.count,
                                    "" if prop is None else prop])
        overflow_rows.append([model, overflow.threshold, overflow.count,
                              overflow.area_total])
    _write_csv(out / "decay_density.csv",
               ["model", "bin_lo", "bin_hi", "count", "area_total", "density",
                "density_normalized"], density_rows)
    _write_csv(out / "semantic_proportion.csv",
               ["model", "bin_lo", "bin_hi", "count", "semantic_pct"],
               proportion_rows)
    _write_csv(out / "decay_overflow.csv",
               ["model", "threshold", "count", "area_total"], overflow_rows)
    return binned


def export_sweep(result: SweepResult, out: Path) -> None:
    rows = [
        [c.alpha, c.beta, c.model,
         "" if c.wus_mean is None else c.wus_mean,
         c.wus_images, c.n_semantic, c.n_spatial]
        for c in result.cells
    ]
    _write_csv(out / "sweep.csv",
               ["alpha", "beta", "model", "wus", "wus_images", "n_semantic",
                "n_spatial"], rows)
    stability = check_ranking_stability(result)
    (out / "stability.json").write_text(json.dumps({
        "stable": stability.stable,
        "reference": list(stability.reference),
        "violations": [dict(v) for v in stability.violations],
    }, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Figures


def _bin_labels(config: ProbeConfig) -> list[str]:
    e = config.distance_bins
    return [f"{lo:g}-{hi:g}" for lo, hi in zip(e, e[1:])]


def render_decay_figure(binned: dict, config: ProbeConfig, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    labels = _bin_labels(config)
    x = range(len(labels))
    for model in sorted(binned):
        bins, _ = binned[model]
        profile = decay_profile(bins)
        xs = [i for i, b in enumerate(bins) if b.count > 0]
        ys = [profile[i] for i in xs]
        ax.plot(xs, ys, marker="o", label=model)
    ax.set_yscale("log")
    ax.set_xticks(list(x))
    ax.set_xticklabels(labels)
    ax.set_xlabel("centroid distance (box diagonals)")
    ax.set_ylabel("area density (first bin = 100)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_proportion_figure(binned: dict, config: ProbeConfig, path: Path) -> None:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    labels = _bin_labels(config)
    for model in sorted(binned):
        bins, _ = binned[model]
        xs = [i for i, b in enumerate(bins) if b.count > 0]
        ys = [bins[i].semantic_pct for i in xs]
        ax.plot(xs, ys, marker="o", label=model)
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels)
    ax.set_ylim(0, 100)
    ax.set_xlabel("centroid distance (box diagonals)")
    ax.set_ylabel("similar regions (%)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_class_mix_figure(aggregates: Sequence[ModelAggregate], path: Path) -> None:
    fig, ax = plt.subplots(figsize=(7, 1.2 + 0.6 * len(aggregates)))
    models = [a.model for a in aggregates]
    left = [0.0] * len(aggregates)
    for cls in RegionClass:
        widths = [100.0 * a.class_proportions[cls.value] for a in aggregates]
        ax.barh(models, widths, left=left, label=cls.value)
        left = [l + w for l, w in zip(left, widths)]
    ax.set_xlim(0, 100)
    ax.set_xlabel("share of regions (%)")
    ax.invert_yaxis()
    ax.legend(ncol=4, fontsize="small")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


# ---------------------------------------------------------------------------
# Top-level report / sweep entry points


def write_report(run_dir, out_dir) -> list[Path]:
    """Aggregate a run directory into tables and figures; returns paths."""
    config = load_run_config(run_dir)
    results = load_results(run_dir)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    aggregates = [aggregate_model(m, results[m], config) for m in sorted(results)]
    export_main_results(aggregates, out / "main_results.csv")
    (out / "aggregates.json").write_text(json.dumps(
        [a.to_dict() for a in aggregates], indent=2, sort_keys=True) + "\n",
        encoding="utf-8")
    binned = export_decay(results, config, out)
    render_decay_figure(binned, config, out / "decay_density.png")
    render_proportion_figure(binned, config, out / "semantic_proportion.png")
    render_class_mix_figure(aggregates, out / "class_mix.png")
    return sorted(out.iterdir())


def write_sweep(run_dir, out_dir, alphas: Sequence[float],
                betas: Sequence[float]) -> SweepResult:
    """Threshold sweep over a run directory's cached features."""
    config = load_run_config(run_dir)
    results = load_results(run_dir)
    cache = build_cache(results)
    result = sweep(cache, alphas, betas, config)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    export_sweep(result, out)
    return result
