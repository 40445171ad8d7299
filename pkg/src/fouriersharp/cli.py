"""Command-line front end.

Exit codes: 0 success, 2 usage or input error, 3 degenerate stack statistics.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

from . import baseline, correlation, pipeline, raster, synth
from .errors import DegenerateInputError

log = logging.getLogger("fouriersharp")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_DEGENERATE = 3

# RunConfig field -> parser for values coming from a config file
_CONFIG_KEYS = {
    "resize_longest": int,
    "clahe_clip": float,
    "clahe_tiles": lambda s: _parse_tiles(s),
    "angles": lambda s: _parse_floats(s),
    "aa_sigma": float,
    "z_threshold": float,
    "min_tail": int,
    "output_format": str,
    "threads": int,
}


class UsageError(Exception):
    pass


def _parse_floats(text: str) -> tuple[float, ...]:
    parts = [p for p in text.replace(" ", "").split(",") if p]
    try:
        return tuple(float(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated number list: {text!r}") from None


def _parse_tiles(text: str) -> tuple[int, int]:
    try:
        rows, cols = text.lower().split("x")
        return int(rows), int(cols)
    except ValueError:
        raise argparse.ArgumentTypeError(f"tile grid must look like 8x8, got {text!r}") from None


def read_config_file(path: str | Path) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment. Keys use dashes or underscores."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key == "format":
            key = "output_format"
        if key not in _CONFIG_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            out[key] = _CONFIG_KEYS[key](value)
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise UsageError(f"{path}:{lineno}: {exc}") from None
    return out


def build_config(args: argparse.Namespace) -> pipeline.RunConfig:
    """Defaults, overridden by the config file, overridden by explicit flags."""
    values = read_config_file(args.config) if args.config else {}
    for key in _CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    try:
        return pipeline.RunConfig(**values)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _stack_paths(input_dir: str) -> list[Path]:
    try:
        paths = raster.list_images(input_dir)
    except OSError as exc:
        raise UsageError(f"cannot read directory: {exc}") from None
    if not paths:
        raise UsageError(f"no PNG/TIFF/JPEG images in {input_dir}")
    if len({p.stem for p in paths}) != len(paths):
        raise UsageError("image file names must have distinct stems (they become source ids)")
    if len(paths) < 2:
        raise DegenerateInputError("stack statistics need at least two images")
    return paths


def cmd_score(args: argparse.Namespace) -> int:
    config = build_config(args)
    paths = _stack_paths(args.input_dir)
    descriptors = pipeline.compute_descriptors(paths, config, Path(args.dump_dir) if args.dump_dir else None)
    if args.descriptors_csv:
        Path(args.descriptors_csv).write_text(pipeline.descriptors_to_csv(descriptors))
    result = pipeline.assess_descriptors(descriptors, config)
    if args.command == "rank":
        text = result.to_rank_csv()
    elif config.output_format == "json":
        text = result.to_json()
    else:
        text = result.to_csv()
    _emit(text, args.output)
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    scores = correlation.read_scores(args.scores_csv, args.score_column)
    labels = correlation.read_labels(args.labels_csv)
    report = correlation.evaluate(scores, labels)
    if args.format == "table":
        text = report.to_table(args.dataset, args.method)
    else:
        text = report.to_json()
    _emit(text, args.output)
    return EXIT_OK


def cmd_generate(args: argparse.Namespace) -> int:
    sigmas = list(args.sigmas)
    if not sigmas:
        raise UsageError("sigma list is empty")
    base = raster.to_luminance(raster.load_image(args.base_image))
    stack = synth.generate_stack(base, sigmas, args.noise_std, args.sharp_cutoff, args.seed)
    try:
        manifest = synth.write_stack(stack, args.out_dir, extra={"base_image": Path(args.base_image).name})
    except OSError as exc:
        raise UsageError(f"cannot write to {args.out_dir}: {exc}") from None
    log.info("wrote %d images to %s (stack_sha256=%s)", len(stack.images), args.out_dir, manifest["stack_sha256"])
    return EXIT_OK


def cmd_baseline(args: argparse.Namespace) -> int:
    if args.metric not in baseline.SUPPORTED_METRICS:
        raise UsageError(f"unknown metric {args.metric!r}; supported: {', '.join(baseline.SUPPORTED_METRICS)}")
    try:
        paths = raster.list_images(args.input_dir)
    except OSError as exc:
        raise UsageError(f"cannot read directory: {exc}") from None
    if not paths:
        raise UsageError(f"no PNG/TIFF/JPEG images in {args.input_dir}")

    def one(path: Path) -> baseline.BaselineScore:
        gray = raster.to_luminance(raster.load_image(path))
        return baseline.kanjar_score(gray, path.stem, args.divisor)

    scores = pipeline.map_images(one, paths, args.threads or 1)
    if args.format == "json":
        payload = [{"source_id": s.source_id, "metric": s.metric, "score": s.value} for s in scores]
        text = json.dumps(payload, indent=2) + "\n"
    else:
        text = baseline.scores_to_csv(scores)
    _emit(text, args.output)
    return EXIT_OK


def _add_pipeline_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("input_dir", help="directory of PNG/TIFF/JPEG images, one stack")
    p.add_argument("--config", help="key = value file; explicit flags take precedence")
    p.add_argument("--output", "-o", help="write the report here instead of stdout")
    p.add_argument("--format", dest="output_format", choices=("csv", "json"), default=None)
    p.add_argument("--resize-longest", dest="resize_longest", type=int, default=None)
    p.add_argument("--clahe-clip", dest="clahe_clip", type=float, default=None)
    p.add_argument("--clahe-tiles", dest="clahe_tiles", type=_parse_tiles, default=None, metavar="ROWSxCOLS")
    p.add_argument("--angles", type=_parse_floats, default=None, help="comma-separated degrees")
    p.add_argument("--aa-sigma", dest="aa_sigma", type=float, default=None)
    p.add_argument("--z-threshold", dest="z_threshold", type=float, default=None)
    p.add_argument("--min-tail", dest="min_tail", type=int, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--dump-dir", dest="dump_dir", help="write enhanced image, spectrum and mask PNGs")
    p.add_argument("--descriptors-csv", dest="descriptors_csv", help="write raw descriptors as CSV")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fouriersharp", description=__doc__)
    parser.add_argument("--verbose", "-v", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", help="score and label every image of a stack")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("rank", help="like score, but only print rank order")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("evaluate", help="PLCC/SRCC/KRCC of scores against labels")
    p.add_argument("scores_csv")
    p.add_argument("labels_csv")
    p.add_argument("--score-column", dest="score_column", default=None)
    p.add_argument("--format", choices=("json", "table"), default="json")
    p.add_argument("--dataset", default="-", help="dataset name for the table row")
    p.add_argument("--method", default="-", help="method name for the table row")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("generate", help="write a synthetic blur stack from a base image")
    p.add_argument("base_image")
    p.add_argument("out_dir")
    p.add_argument("--sigmas", type=_parse_floats, default=(0.0, 0.5, 1.0, 2.0, 4.0, 8.0))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise-std", dest="noise_std", type=float, default=synth.DEFAULT_NOISE_STD)
    p.add_argument("--sharp-cutoff", dest="sharp_cutoff", type=float, default=synth.DEFAULT_SHARP_CUTOFF)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("baseline", help="score images with a reference metric")
    p.add_argument("input_dir")
    p.add_argument("--metric", default="kanjar")
    p.add_argument("--divisor", type=float, default=baseline.DEFAULT_THRESHOLD_DIVISOR)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_baseline)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except DegenerateInputError as exc:
        print(f"fouriersharp: degenerate stack: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (UsageError, ValueError, OSError) as exc:
        print(f"fouriersharp: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
