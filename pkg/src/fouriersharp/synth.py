"""Synthetic focal stacks from the degradation model ``g = f * h + noise``."""

from __future__ import annotations

import hashlib
import json
import math
import os
from datetime import datetime, timezone
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import ndimage, signal

from .raster import quantize, save_gray_png

DEFAULT_NOISE_STD = 2.0
DEFAULT_SHARP_CUTOFF = 0.5


@dataclass(frozen=True)
class PSFKernel:
    weights: np.ndarray
    sigma: float

    @property
    def size(self) -> int:
        return self.weights.shape[0]


def gaussian_psf(sigma: float) -> PSFKernel:
    """Sampled, unit-sum Gaussian of side ``2 * ceil(3 sigma) + 1``; ``sigma = 0`` is the delta."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0:
        return PSFKernel(np.ones((1, 1)), 0.0)
    half = math.ceil(3 * sigma)
    x = np.arange(-half, half + 1, dtype=np.float64)
    g = np.exp(-(x**2) / (2 * sigma * sigma))
    w = np.outer(g, g)
    return PSFKernel(w / w.sum(), float(sigma))


def degrade(img: np.ndarray, psf: PSFKernel | np.ndarray, noise_std: float = 0.0, seed: int = 0) -> np.ndarray:
    """Convolve with ``psf`` (reflective borders), add seeded Gaussian noise, clamp to [0, 255].

    ``psf`` may be a :class:`PSFKernel` or any odd-sized 2D weight array.
    """
    img = np.asarray(img, dtype=np.float64)
    kernel = np.asarray(psf.weights if isinstance(psf, PSFKernel) else psf, dtype=np.float64)
    if kernel.ndim != 2 or kernel.shape[0] % 2 == 0 or kernel.shape[1] % 2 == 0:
        raise ValueError(f"kernel must be 2D with odd sides, got {kernel.shape}")
    if kernel.shape[0] > img.shape[0] or kernel.shape[1] > img.shape[1]:
        raise ValueError(f"kernel {kernel.shape} is larger than image {img.shape}")
    if noise_std < 0:
        raise ValueError("noise_std must be >= 0")

    if kernel.size == 1:
        out = img * kernel[0, 0]
    elif kernel.size <= 49:
        # scipy's "reflect" is the half-sample symmetric extension
        out = ndimage.convolve(img, kernel, mode="reflect")
    else:
        ay, ax = kernel.shape[0] // 2, kernel.shape[1] // 2
        padded = np.pad(img, ((ay, ay), (ax, ax)), mode="symmetric")
        out = signal.fftconvolve(padded, kernel, mode="valid")
    if noise_std > 0:
        out = out + np.random.default_rng(seed).normal(0.0, noise_std, size=out.shape)
    return np.clip(out, 0.0, 255.0)


@dataclass
class SyntheticStack:
    images: list[np.ndarray]
    sigmas: list[float]
    labels: list[str]
    noise_std: float
    sharp_cutoff: float
    seed: int
    ids: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.ids:
            width = max(3, len(str(len(self.images) - 1)))
            self.ids = [f"frame_{i:0{width}d}" for i in range(len(self.images))]


def generate_stack(
    base: np.ndarray,
    sigmas: Sequence[float],
    noise_std: float = DEFAULT_NOISE_STD,
    sharp_cutoff: float = DEFAULT_SHARP_CUTOFF,
    seed: int = 0,
) -> SyntheticStack:
    """One degraded copy of ``base`` per sigma; image ``i`` draws noise from ``seed + i``."""
    sigmas = [float(s) for s in sigmas]
    if not sigmas:
        raise ValueError("sigma list is empty")
    images = [degrade(base, gaussian_psf(s), noise_std, seed + i) for i, s in enumerate(sigmas)]
    labels = ["sharp" if s <= sharp_cutoff else "blurred" for s in sigmas]
    return SyntheticStack(images, sigmas, labels, noise_std, sharp_cutoff, seed)


def write_stack(
    stack: SyntheticStack, out_dir: str | os.PathLike, extra: dict | None = None, compress_level: int = 6
) -> dict:
    """Write ``<id>.png`` files, ``labels.csv`` and ``manifest.json``; return the manifest.

    The manifest's ``stack_sha256`` digests every written byte except the
    manifest itself, so it is stable across runs; ``created_at`` is not.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    digest = hashlib.sha256()
    for sid, img in zip(stack.ids, stack.images):
        path = out / f"{sid}.png"
        save_gray_png(img, path, compress_level)
        digest.update(sid.encode())
        digest.update(quantize(img).tobytes())
        digest.update(repr(img.shape).encode())

    lines = ["source_id,sigma,label"]
    lines += [f"{sid},{s!r},{1 if lab == 'sharp' else 0}" for sid, s, lab in zip(stack.ids, stack.sigmas, stack.labels)]
    labels_text = "\n".join(lines) + "\n"
    (out / "labels.csv").write_text(labels_text)
    digest.update(labels_text.encode())

    params = {
        "seed": stack.seed,
        "sigmas": stack.sigmas,
        "noise_std": stack.noise_std,
        "sharp_cutoff": stack.sharp_cutoff,
        "images": [f"{sid}.png" for sid in stack.ids],
    }
    if extra:
        params.update(extra)
    digest.update(json.dumps(params, sort_keys=True).encode())
    manifest = dict(params, stack_sha256=digest.hexdigest(), created_at=datetime.now(timezone.utc).isoformat())
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


def texture(shape: tuple[int, int], seed: int = 0, kind: str = "blobs") -> np.ndarray:
    """Deterministic synthetic base image in [0, 255] with broadband detail.

    ``kind`` is one of ``blobs`` (random disks and smoothed noise), ``checker``
    (rotated checkerboard), ``grating`` (sum of sinusoid gratings) or ``noise``
    (uniform white noise).
    """
    rng = np.random.default_rng(seed)
    h, w = shape
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    if kind == "noise":
        return rng.uniform(0.0, 255.0, size=shape)
    if kind == "checker":
        theta = rng.uniform(0, math.pi)
        period = rng.uniform(12, 40)
        u = xx * math.cos(theta) + yy * math.sin(theta)
        v = -xx * math.sin(theta) + yy * math.cos(theta)
        img = ((np.floor(u / period) + np.floor(v / period)) % 2) * 160 + 48
        return img
    if kind == "grating":
        img = np.zeros(shape)
        for _ in range(6):
            theta = rng.uniform(0, math.pi)
            freq = rng.uniform(0.02, 0.35)
            img += np.cos(2 * math.pi * freq * (xx * math.cos(theta) + yy * math.sin(theta)) + rng.uniform(0, 6.3))
        return 127.5 + img * (110.0 / 6)
    if kind == "blobs":
        img = ndimage.gaussian_filter(rng.normal(0, 1, size=shape), 3.0)
        img = 128 + img * (40 / max(img.std(), 1e-12))
        n = max(8, (h * w) // 2500)
        cy = rng.uniform(0, h, n)
        cx = rng.uniform(0, w, n)
        rad = rng.uniform(3, max(4.0, min(h, w) / 12), n)
        val = rng.uniform(-90, 90, n)
        for y0, x0, r, v in zip(cy, cx, rad, val):
            y_lo, y_hi = int(max(0, y0 - r - 1)), int(min(h, y0 + r + 2))
            x_lo, x_hi = int(max(0, x0 - r - 1)), int(min(w, x0 + r + 2))
            sub_y, sub_x = yy[y_lo:y_hi, x_lo:x_hi], xx[y_lo:y_hi, x_lo:x_hi]
            inside = (sub_y - y0) ** 2 + (sub_x - x0) ** 2 <= r * r
            img[y_lo:y_hi, x_lo:x_hi][inside] += v
        return np.clip(img, 0, 255)
    raise ValueError(f"unknown texture kind {kind!r}")
