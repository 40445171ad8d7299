"""Zero padding, normalized 2D DFT, quadrant shift, radial line masks and descriptors."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import ndimage


@dataclass(frozen=True)
class Spectrum:
    """Square matrix of DFT coefficients; ``shifted`` puts DC at ``(L/2, L/2)``."""

    coeffs: np.ndarray
    shifted: bool = False

    @property
    def size(self) -> int:
        return self.coeffs.shape[0]


@dataclass(frozen=True)
class RadialMask:
    size: int
    weights: np.ndarray
    angles: tuple[float, ...]


@dataclass(frozen=True)
class Descriptor:
    """Per-radius mean of masked spectral magnitudes, length ``L / 2``."""

    values: np.ndarray
    source_id: str = ""

    def __len__(self) -> int:
        return len(self.values)


def _is_pow2(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


def next_pow2(n: int) -> int:
    return 1 << max(0, (int(n) - 1).bit_length())


def zero_pad_square(img: np.ndarray) -> np.ndarray:
    """Place ``img`` top-left in an ``S x S`` zero matrix, ``S`` the next power of two."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2 or img.size == 0:
        raise ValueError(f"expected a non-empty 2D image, got shape {img.shape}")
    side = next_pow2(max(img.shape))
    if img.shape == (side, side):
        return img.copy()
    out = np.zeros((side, side))
    out[: img.shape[0], : img.shape[1]] = img
    return out


def fft2_normalized(data: np.ndarray) -> np.ndarray:
    """FFT of any 2D array scaled by ``1 / (M N)``."""
    data = np.asarray(data, dtype=np.float64)
    return np.fft.fft2(data) / data.size


def dft2(img: np.ndarray) -> Spectrum:
    """Forward 2D DFT with the ``1 / (M N)`` normalization, via FFT.

    Raises:
        ValueError: input is not a square power-of-two matrix.
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2 or img.shape[0] != img.shape[1] or not _is_pow2(img.shape[0]):
        raise ValueError(f"dft2 needs a square power-of-two image, got shape {img.shape}")
    return Spectrum(fft2_normalized(img), shifted=False)


def shift_spectrum(spec: Spectrum) -> Spectrum:
    """Swap quadrants 1<->3 and 2<->4 so DC lands at the centre."""
    if spec.shifted:
        raise ValueError("spectrum is already shifted")
    return Spectrum(np.fft.fftshift(spec.coeffs), shifted=True)


def radial_angles(degrees: Sequence[float] = tuple(range(0, 101, 5))) -> list[float]:
    """Ray angles in radians; default 0, 5, ..., 100 degrees."""
    return [d * math.pi / 180.0 for d in degrees]


def _round_half_away(x: np.ndarray | float) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    return (np.sign(x) * np.floor(np.abs(x) + 0.5)).astype(np.intp)


def _ray_pixels(size: int, angle: float, radii: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Row/column of the nearest pixel to each radius along ``angle`` (row axis down)."""
    c = size // 2
    cols = _round_half_away(c + radii * math.cos(angle))
    rows = _round_half_away(c - radii * math.sin(angle))
    return rows, cols


def _draw_line(canvas: np.ndarray, r0: int, c0: int, r1: int, c1: int) -> None:
    steps = max(abs(r1 - r0), abs(c1 - c0))
    t = np.linspace(0.0, 1.0, steps + 1)
    rows = _round_half_away(r0 + t * (r1 - r0))
    cols = _round_half_away(c0 + t * (c1 - c0))
    n = canvas.shape[0]
    keep = (rows >= 0) & (rows < n) & (cols >= 0) & (cols < n)
    canvas[rows[keep], cols[keep]] = 1.0


def build_line_mask(size: int, angles: Sequence[float], aa_sigma: float = 1.0) -> RadialMask:
    """Lines from the centre to radius ``size / 2`` at each angle, Gaussian-antialiased.

    Endpoints are ``(xc + r cos a, yc - r sin a)`` rounded to the nearest pixel;
    the parts that fall past the matrix edge are dropped. Masks are cached per
    ``(size, angles, aa_sigma)`` and returned read-only.
    """
    if not _is_pow2(size):
        raise ValueError(f"mask size must be a power of two, got {size}")
    angles = tuple(float(a) for a in angles)
    if not angles:
        raise ValueError("at least one angle is required")
    if aa_sigma <= 0:
        raise ValueError("aa_sigma must be > 0")
    return _cached_mask(int(size), angles, float(aa_sigma))


@lru_cache(maxsize=16)
def _cached_mask(size: int, angles: tuple[float, ...], aa_sigma: float) -> RadialMask:
    canvas = np.zeros((size, size))
    c = size // 2
    radius = size / 2
    for a in angles:
        (r1,), (c1,) = _ray_pixels(size, a, np.array([radius]))
        _draw_line(canvas, c, c, int(r1), int(c1))
    weights = np.clip(ndimage.gaussian_filter(canvas, aa_sigma, mode="constant"), 0.0, 1.0)
    weights.setflags(write=False)
    return RadialMask(size=size, weights=weights, angles=angles)


def extract_descriptor(spec: Spectrum, mask: RadialMask, source_id: str = "") -> Descriptor:
    """Average the masked magnitude along every ray at radii ``0 .. L/2 - 1``.

    Each ray is read at the nearest pixel to every unit radius step, so all rays
    contribute exactly ``L / 2`` samples and no rounding ever lands back on the
    DC bin for radius >= 1.
    """
    if not spec.shifted:
        raise ValueError("descriptor extraction needs a shifted spectrum")
    if spec.size != mask.size:
        raise ValueError(f"spectrum size {spec.size} != mask size {mask.size}")
    plane = mask.weights * np.abs(spec.coeffs)
    k = spec.size // 2
    radii = np.arange(k, dtype=np.float64)
    acc = np.zeros(k)
    for a in mask.angles:
        rows, cols = _ray_pixels(spec.size, a, radii)
        acc += plane[rows, cols]
    return Descriptor(acc / len(mask.angles), source_id)


def descriptor_from_gray(
    img: np.ndarray, angles: Sequence[float] | None = None, aa_sigma: float = 1.0, source_id: str = ""
) -> Descriptor:
    """Zero-pad, transform, shift and sample a preprocessed gray image."""
    spec = shift_spectrum(dft2(zero_pad_square(img)))
    mask = build_line_mask(spec.size, radial_angles() if angles is None else angles, aa_sigma)
    return extract_descriptor(spec, mask, source_id)


def log_magnitude_image(spec: Spectrum) -> np.ndarray:
    """``log(1 + |F|)`` stretched to [0, 255] for debug dumps."""
    mag = np.log1p(np.abs(spec.coeffs))
    top = mag.max()
    return mag * (255.0 / top) if top > 0 else mag
