"""End-to-end scoring: run configuration, per-image descriptor pipeline, stack assessment."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import raster, spectral
from .stats import DEFAULT_MIN_TAIL, StackAssessment, classify_stack

DEFAULT_ANGLES_DEG = tuple(float(d) for d in range(0, 101, 5))


@dataclass
class RunConfig:
    resize_longest: int = 512
    clahe_clip: float = 2.0
    clahe_tiles: tuple[int, int] = (8, 8)
    angles: tuple[float, ...] = DEFAULT_ANGLES_DEG
    aa_sigma: float = 1.0
    z_threshold: float = 1.0
    min_tail: int = DEFAULT_MIN_TAIL
    output_format: str = "csv"
    threads: int = field(default_factory=lambda: os.cpu_count() or 1)

    def __post_init__(self) -> None:
        self.clahe_tiles = tuple(int(t) for t in self.clahe_tiles)
        self.angles = tuple(float(a) for a in self.angles)
        if self.resize_longest < 1:
            raise ValueError("resize_longest must be positive")
        if self.clahe_clip <= 0:
            raise ValueError("clahe_clip must be positive")
        if len(self.clahe_tiles) != 2 or min(self.clahe_tiles) < 1:
            raise ValueError("clahe_tiles must be two positive integers")
        if not self.angles:
            raise ValueError("angle list is empty")
        if self.aa_sigma <= 0:
            raise ValueError("aa_sigma must be positive")
        if self.min_tail < 2:
            raise ValueError("min_tail must be >= 2")
        if self.threads < 1:
            raise ValueError("threads must be positive")
        if self.output_format not in ("csv", "json"):
            raise ValueError("output_format must be csv or json")

    def echo(self) -> dict:
        """Settings that affect scores; thread count and output format excluded."""
        d = asdict(self)
        d.pop("threads")
        d.pop("output_format")
        d["clahe_tiles"] = list(self.clahe_tiles)
        d["angles"] = list(self.angles)
        return d


def gray_descriptor(
    gray: np.ndarray, config: RunConfig, source_id: str = "", dump_dir: Path | None = None
) -> spectral.Descriptor:
    """Descriptor of an already-luminance image: resize, CLAHE, pad, DFT, sample.

    With ``dump_dir`` set, the enhanced image, the log-magnitude spectrum and
    the mask are written there as PNGs.
    """
    small = raster.fit_longest_side(gray, config.resize_longest)
    enhanced = raster.clahe(small, config.clahe_clip, config.clahe_tiles)
    spec = spectral.shift_spectrum(spectral.dft2(spectral.zero_pad_square(enhanced)))
    mask = spectral.build_line_mask(spec.size, spectral.radial_angles(config.angles), config.aa_sigma)
    if dump_dir is not None:
        dump_dir = Path(dump_dir)
        dump_dir.mkdir(parents=True, exist_ok=True)
        raster.save_gray_png(enhanced, dump_dir / f"{source_id}_enhanced.png")
        raster.save_gray_png(spectral.log_magnitude_image(spec), dump_dir / f"{source_id}_spectrum.png")
        mask_path = dump_dir / f"mask_{spec.size}.png"
        if not mask_path.exists():
            raster.save_gray_png(mask.weights * (255.0 / mask.weights.max()), mask_path)
    return spectral.extract_descriptor(spec, mask, source_id)


def image_descriptor(
    path: str | os.PathLike, config: RunConfig, dump_dir: Path | None = None
) -> spectral.Descriptor:
    path = Path(path)
    return gray_descriptor(raster.to_luminance(raster.load_image(path)), config, path.stem, dump_dir)


def descriptors_to_csv(descriptors: Sequence[spectral.Descriptor]) -> str:
    """One row per image: ``source_id, v0, v1, ...``."""
    width = max((len(d) for d in descriptors), default=0)
    lines = [",".join(["source_id"] + [f"v{i}" for i in range(width)])]
    for d in descriptors:
        lines.append(",".join([d.source_id] + [repr(float(v)) for v in d.values]))
    return "\n".join(lines) + "\n"


def map_images(fn: Callable, items: Sequence, threads: int) -> list:
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def assess_descriptors(descriptors: Sequence[spectral.Descriptor], config: RunConfig) -> StackAssessment:
    result = classify_stack(descriptors, config.z_threshold, config.min_tail)
    result.config = config.echo()
    return result


def compute_descriptors(
    paths: Iterable[str | os.PathLike], config: RunConfig, dump_dir: Path | None = None
) -> list[spectral.Descriptor]:
    """Per-image pipeline on a thread pool; output order follows ``paths``."""
    return map_images(lambda p: image_descriptor(p, config, dump_dir), list(paths), config.threads)


def assess_paths(paths: Iterable[str | os.PathLike], config: RunConfig) -> StackAssessment:
    return assess_descriptors(compute_descriptors(paths, config), config)


def assess_arrays(images: Sequence[np.ndarray], config: RunConfig, ids: Sequence[str] | None = None) -> StackAssessment:
    """Score in-memory gray images (values in [0, 255])."""
    ids = list(ids) if ids is not None else [str(i) for i in range(len(images))]
    descriptors = map_images(
        lambda pair: gray_descriptor(pair[1], config, pair[0]), list(zip(ids, images)), config.threads
    )
    return assess_descriptors(descriptors, config)
