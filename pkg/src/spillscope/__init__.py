"""Measure where image-editing models change pixels they were not asked to.

Given an (original, generated) pair and the edit box, the pipeline detects
changed pixels outside the box, groups them into regions, classifies each
region by distance and crop similarity, and aggregates model-level metrics,
decay profiles, and threshold sweeps.
"""

from .ablation import (
    FeatureCache,
    RankingStability,
    SweepCell,
    SweepResult,
    build_cache,
    check_ranking_stability,
    sweep,
)
from .classify import (
    ImageAnalysis,
    SpilloverRegion,
    analyze_pair,
    classify_pair,
    classify_regions,
)
from .core import (
    DatasetManifest,
    EditBox,
    ManifestEntry,
    ManifestError,
    ProbeConfig,
    RegionClass,
    box_center,
    box_diag,
    load_image,
    load_manifest,
    save_image,
    save_manifest,
)
from .decay import DistanceBin, OverflowBucket, bin_regions, decay_profile, semantic_proportions
from .detect import (
    RawRegion,
    change_map,
    extract_regions,
    gaussian_blur,
    spill_rate,
    ssim_map,
    ssim_outside_box,
    to_grayscale,
)
from .embed import (
    EmbedServiceError,
    ReferenceEmbedder,
    RemoteEmbedder,
    cosine_similarity,
    get_embedder,
    padded_crop,
    reference_embed,
)
from .metrics import ModelAggregate, aggregate_model, image_wus, semantic_density, wus
from .report import BatchSummary, ReportError, run_batch, write_report, write_sweep
from .synth import (
    Fixture,
    GroundTruth,
    PlantedBlob,
    UnplaceableBlobError,
    generate_fixture,
    iou,
    load_truth,
    write_batch,
)

__version__ = "0.1.0"
