"""Command-line front end.

Subcommands:

* ``analyze``: one image pair, per-image JSON on stdout.
* ``batch``: a manifest of pairs, results directory on disk.
* ``report``: aggregate a results directory into tables and figures.
* ``sweep``: threshold sensitivity grid over a results directory.
* ``synth``: render synthetic fixture batches with ground truth.

Exit codes: 0 on success (including per-image soft failures), 1 when a step
fails outright or a model's run mostly failed, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .classify import analyze_pair
from .core import EditBox, ManifestError, ProbeConfig, load_image, load_manifest
from .report import ReportError, run_batch, write_report, write_sweep
from .synth import DEFAULT_CONTRAST, GROUP_PRESETS, write_batch

DEFAULT_BETAS = (0.70, 0.75, 0.80, 0.85, 0.90)
DEFAULT_ALPHAS = (1.0, 1.5, 2.0)


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    d = ProbeConfig()
    p.add_argument("--tau", type=float, default=d.tau,
                   help="pixel change threshold on blurred luma (default %(default)s)")
    p.add_argument("--sigma", type=float, default=d.sigma,
                   help="Gaussian blur sigma (default %(default)s)")
    p.add_argument("--min-area", type=int, default=d.min_area,
                   help="minimum region area in px (default %(default)s)")
    p.add_argument("--alpha", type=float, default=d.alpha,
                   help="distance threshold in box diagonals (default %(default)s)")
    p.add_argument("--beta", type=float, default=d.beta,
                   help="crop similarity threshold (default %(default)s)")
    p.add_argument("--pad", type=int, default=d.pad,
                   help="crop padding in px (default %(default)s)")
    p.add_argument("--embedder", default=d.embedder,
                   help="'reference' or 'remote:<url>' (default %(default)s)")
    p.add_argument("--bins", default=",".join(f"{b:g}" for b in d.distance_bins),
                   help="distance bin edges (default %(default)s)")


def _config_from_args(args) -> ProbeConfig:
    return ProbeConfig(
        tau=args.tau, sigma=args.sigma, min_area=args.min_area,
        alpha=args.alpha, beta=args.beta, pad=args.pad,
        embedder=args.embedder,
        distance_bins=tuple(float(v) for v in args.bins.split(",")),
    )


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(","))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spillscope",
        description="Detect and classify out-of-box changes made by image edits.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="analyze one original/generated pair")
    p.add_argument("original", help="path to the original image")
    p.add_argument("generated", help="path to the generated image")
    p.add_argument("--box", required=True,
                   help="edit box as x_min,y_min,x_max,y_max")
    _add_config_flags(p)

    p = sub.add_parser("batch", help="analyze every pair in a manifest")
    p.add_argument("--manifest", required=True, help="manifest JSON path")
    p.add_argument("--models", default=None,
                   help="comma-separated model names (default: all in manifest)")
    p.add_argument("--out", required=True, help="run directory to create")
    p.add_argument("--workers", type=int, default=8,
                   help="parallel workers (default %(default)s)")
    _add_config_flags(p)

    p = sub.add_parser("report", help="tables and figures from a run directory")
    p.add_argument("--in", dest="run_dir", required=True, help="run directory")
    p.add_argument("--out", default=None,
                   help="output directory (default <in>/report)")

    p = sub.add_parser("sweep", help="threshold sweep over a run directory")
    p.add_argument("--in", dest="run_dir", required=True, help="run directory")
    p.add_argument("--out", default=None,
                   help="output directory (default <in>/sweep)")
    p.add_argument("--betas", type=_float_list,
                   default=DEFAULT_BETAS, help="similarity thresholds to try")
    p.add_argument("--alphas", type=_float_list,
                   default=DEFAULT_ALPHAS, help="distance thresholds to try")

    p = sub.add_parser("synth", help="render synthetic fixtures")
    p.add_argument("--group", required=True, choices=sorted(GROUP_PRESETS),
                   help="fixture preset")
    p.add_argument("--count", type=int, required=True, help="number of pairs")
    p.add_argument("--seed", type=int, required=True, help="batch seed")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--contrast", type=float, default=DEFAULT_CONTRAST,
                   help="blob luma contrast (default %(default)s)")

    return parser


def cmd_analyze(args) -> int:
    config = _config_from_args(args)
    box = EditBox.from_string(args.box)
    original = load_image(args.original)
    generated = load_image(args.generated)
    analysis = analyze_pair(original, generated, box, config,
                            image_id=Path(args.generated).stem)
    json.dump(analysis.to_dict(), sys.stdout, indent=2, sort_keys=True)
    print()
    return 0


def cmd_batch(args) -> int:
    config = _config_from_args(args)
    manifest = load_manifest(args.manifest)
    models = args.models.split(",") if args.models else list(manifest.models())
    summary = run_batch(manifest, models, config, args.out, workers=args.workers)
    for model in models:
        s = summary.per_model[model]
        print(f"{model}: {s.n_ok} ok, {s.n_failed} failed, {s.n_absent} absent")
    print(f"run directory: {summary.out_dir} ({summary.elapsed_seconds:.1f}s)")
    return 1 if summary.any_model_mostly_failed else 0


def cmd_report(args) -> int:
    out = args.out if args.out else str(Path(args.run_dir) / "report")
    paths = write_report(args.run_dir, out)
    for p in paths:
        print(p)
    return 0


def cmd_sweep(args) -> int:
    out = args.out if args.out else str(Path(args.run_dir) / "sweep")
    result = write_sweep(args.run_dir, out, alphas=args.alphas, betas=args.betas)
    from .ablation import check_ranking_stability
    stability = check_ranking_stability(result)
    if stability.stable:
        print("ranking stable: " + " > ".join(stability.reference))
    else:
        print("ranking NOT stable; violating cells:")
        for v in stability.violations:
            print(f"  alpha={v['alpha']} beta={v['beta']}: "
                  + str(v.get("ranking", v.get("reason"))))
    print(f"sweep written to {out}")
    return 0


def cmd_synth(args) -> int:
    manifest_path = write_batch(args.group, args.count, args.seed, args.out,
                                contrast=args.contrast)
    print(manifest_path)
    return 0


COMMANDS = {
    "analyze": cmd_analyze,
    "batch": cmd_batch,
    "report": cmd_report,
    "sweep": cmd_sweep,
    "synth": cmd_synth,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ManifestError, ReportError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
