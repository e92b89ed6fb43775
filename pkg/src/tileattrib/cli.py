"""Command-line entry point: `attrib <subcommand> --config <path> ...`."""

import argparse
import sys
from pathlib import Path

from .config import load_config
from .ensemble import MEMBER_COUNT
from .exceptions import ConfigError, TileAttribError
from .metrics import format_report_table
from . import pipeline

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3

SUBCOMMANDS = (
    "ingest", "qc", "tile", "split", "train", "calibrate", "evaluate", "analyze", "render",
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="attrib",
        description=(
            "Tile-based artwork attribution pipeline: corpus ingestion and QC, "
            "512x512 tiling, balanced splitting, a five-member tile-classifier "
            "ensemble with calibrated threshold, image verdicts, and overlay maps."
        ),
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    helps = {
        "ingest": "load and validate the manifest, cache normalized records",
        "qc": "run quality control on every artwork image",
        "tile": "cut QC-passed artworks into the 512x512 tile store",
        "split": "assign artworks to train/val/test (80/10/10, tile-balanced)",
        "train": f"train the {MEMBER_COUNT}-member ensemble on the train split",
        "calibrate": "pick the decision threshold on the validation split",
        "evaluate": "score the test split at tile and image level",
        "analyze": "predict, aggregate, and report one artwork (needs --artwork)",
        "render": "draw uncertainty/confidence overlays from an existing report",
    }
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", required=True, help="pipeline config JSON")
        if name in ("split", "train"):
            p.add_argument("--seed", type=int, default=None,
                           help="override the configured seed for this stage")
        if name in ("analyze", "render"):
            p.add_argument("--artwork", required=True, help="artwork_id to process")
            p.add_argument("--out", default=None, help="output directory override")
        if name == "analyze":
            p.add_argument("--threshold", type=float, default=None,
                           help="decision threshold override in (0, 1)")
    return parser


def _dispatch(args) -> int:
    config = load_config(args.config)
    name = args.subcommand
    if name == "ingest":
        records = pipeline.run_ingest(config)
        print(f"ingested {len(records)} records -> {config.work_dir / 'records.json'}")
    elif name == "qc":
        payload = pipeline.run_qc(config)
        print(f"qc passed {len(payload['passed'])}/{len(payload['reports'])} "
              f"-> {config.work_dir / 'qc.json'}")
    elif name == "split":
        assignment = pipeline.run_split(config, seed=args.seed)
        train, val, test = assignment.sizes
        print(f"split works train={train} val={val} test={test} "
              f"-> {config.work_dir / 'split.json'}")
    elif name == "tile":
        result = pipeline.run_tile(config)
        print(f"wrote {result['tiles']} tiles -> {config.work_dir / 'tiles'}")
    elif name == "train":
        path = pipeline.run_train(config, seed=args.seed)
        print(f"trained {MEMBER_COUNT} members -> {path}")
    elif name == "calibrate":
        tau = pipeline.run_calibrate(config)
        print(f"calibrated threshold {tau:.4f} -> {config.work_dir / 'ensemble'}")
    elif name == "evaluate":
        report = pipeline.run_evaluate(config)
        print(format_report_table(report))
    elif name == "analyze":
        if args.threshold is not None and not 0.0 < args.threshold < 1.0:
            raise ConfigError(f"--threshold must lie in (0, 1), got {args.threshold}")
        report = pipeline.run_analyze(
            config, args.artwork, threshold=args.threshold,
            out_dir=Path(args.out) if args.out else None,
        )
        print(f"{report.artwork_id}: {report.decision} "
              f"prob={report.image_prob:.4f} tau={report.threshold:.4f} "
              f"tiles {report.tiles_positive}/{report.tiles_total}")
    elif name == "render":
        upath, cpath = pipeline.run_render(
            config, args.artwork, out_dir=Path(args.out) if args.out else None
        )
        print(f"wrote {upath}\nwrote {cpath}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, matching the validation code
        return int(exc.code) if exc.code else EXIT_OK
    try:
        return _dispatch(args)
    except TileAttribError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001 - runtime failure boundary
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    raise SystemExit(main())
