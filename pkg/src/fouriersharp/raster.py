"""Image loading and the pre-processing chain: luminance, bilinear resize, CLAHE.

Images are plain numpy arrays. An RGB image is ``(H, W, 3)`` float64 with
values in [0, 255]; a gray image is ``(H, W)`` float64. Gray values stay
floating point through the pipeline and are quantized only inside
:func:`clahe` (256-bin histograms) and by :func:`save_gray_png`.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import ImageFormatError

SUPPORTED_FORMATS = {"PNG", "TIFF", "JPEG", "MPO"}
IMAGE_SUFFIXES = (".png", ".tif", ".tiff", ".jpg", ".jpeg")

LUMA_WEIGHTS = (0.299, 0.587, 0.114)


def load_image(path: str | os.PathLike) -> np.ndarray:
    """Decode a PNG/TIFF/JPEG file into an ``(H, W, 3)`` float array in [0, 255].

    Grayscale sources are replicated into three equal channels. 16-bit data is
    rescaled to the 8-bit range.

    Raises:
        FileNotFoundError / OSError: the file cannot be opened.
        ImageFormatError: the file is not a decodable image of a supported format.
    """
    path = Path(path)
    with open(path, "rb") as fh:
        try:
            with Image.open(fh) as im:
                if im.format not in SUPPORTED_FORMATS:
                    raise ImageFormatError(f"{path}: unsupported format {im.format!r}")
                im.load()
                return _to_rgb_array(im)
        except UnidentifiedImageError as exc:
            raise ImageFormatError(f"{path}: not a recognised image") from exc
        except (OSError, SyntaxError, ValueError) as exc:
            if isinstance(exc, ImageFormatError):
                raise
            # PIL reports truncated/corrupt payloads as OSError
            raise ImageFormatError(f"{path}: cannot decode ({exc})") from exc


def _to_rgb_array(im: Image.Image) -> np.ndarray:
    if im.mode.startswith("I;16"):
        gray = np.asarray(im, dtype=np.float64) / 257.0
    elif im.mode in ("I", "F"):
        data = np.asarray(im, dtype=np.float64)
        if data.max(initial=0.0) > 255.0:
            data = data / 257.0
        gray = np.clip(data, 0.0, 255.0)
    elif im.mode in ("L", "LA", "1"):
        gray = np.asarray(im.convert("L"), dtype=np.float64)
    else:
        return np.asarray(im.convert("RGB"), dtype=np.float64)
    return np.repeat(gray[:, :, None], 3, axis=2)


def to_luminance(rgb: np.ndarray) -> np.ndarray:
    """Weighted channel sum ``0.299 R + 0.587 G + 0.114 B``, unquantized."""
    rgb = np.asarray(rgb, dtype=np.float64)
    if rgb.ndim != 3 or rgb.shape[2] != 3:
        raise ValueError(f"expected an (H, W, 3) array, got shape {rgb.shape}")
    r, g, b = LUMA_WEIGHTS
    return r * rgb[:, :, 0] + g * rgb[:, :, 1] + b * rgb[:, :, 2]


def _validate_gray(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2 or img.size == 0:
        raise ValueError(f"expected a non-empty 2D gray image, got shape {img.shape}")
    return img


def _corner_aligned(n_src: int, n_dst: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Lower neighbour index, upper neighbour index and weight per destination sample."""
    if n_dst == 1 or n_src == 1:
        pos = np.zeros(n_dst)
    else:
        pos = np.arange(n_dst) * ((n_src - 1) / (n_dst - 1))
    lo = np.minimum(np.floor(pos).astype(np.intp), max(n_src - 2, 0))
    hi = np.minimum(lo + 1, n_src - 1)
    return lo, hi, pos - lo


def resize_bilinear(img: np.ndarray, target_w: int, target_h: int) -> np.ndarray:
    """Bilinear resize with corner-aligned coordinates.

    Source corners map onto destination corners, so a row ``[a, b]`` resized to
    width 3 becomes ``[a, (a + b) / 2, b]``. Separable evaluation of the
    four-neighbour interpolant ``a x + b y + c x y + d``.
    """
    img = _validate_gray(img)
    if target_w < 1 or target_h < 1:
        raise ValueError(f"target size must be >= 1x1, got {target_w}x{target_h}")
    h, w = img.shape
    if (target_h, target_w) == (h, w):
        return img.copy()

    y0, y1, wy = _corner_aligned(h, target_h)
    x0, x1, wx = _corner_aligned(w, target_w)
    rows = img[y0] * (1.0 - wy)[:, None] + img[y1] * wy[:, None]
    out = rows[:, x0] * (1.0 - wx)[None, :] + rows[:, x1] * wx[None, :]
    # a convex combination can overshoot by an ulp
    return np.clip(out, img.min(), img.max())


def fit_longest_side(img: np.ndarray, longest: int = 512) -> np.ndarray:
    """Downscale so that ``max(H, W) == longest``, keeping the aspect ratio.

    Images already within the limit are returned unchanged.
    """
    img = _validate_gray(img)
    if longest < 1:
        raise ValueError("longest must be >= 1")
    h, w = img.shape
    if max(h, w) <= longest:
        return img
    scale = longest / max(h, w)
    return resize_bilinear(img, max(1, round(w * scale)), max(1, round(h * scale)))


def quantize(img: np.ndarray) -> np.ndarray:
    """Round half up to uint8 after clamping to [0, 255]."""
    return np.clip(np.floor(np.asarray(img, dtype=np.float64) + 0.5), 0, 255).astype(np.uint8)


def _tile_edges(n: int, tiles: int) -> np.ndarray:
    return (np.arange(tiles + 1) * n) // tiles


def _clip_histogram(hist: np.ndarray, clip: int) -> np.ndarray:
    """Clip bins at ``clip`` and spread the excess evenly, remainder to the lowest bins."""
    excess = int(np.maximum(hist - clip, 0).sum())
    if excess == 0:
        return hist
    out = np.minimum(hist, clip)
    nbins = hist.size
    out += excess // nbins
    out[: excess % nbins] += 1
    return out


def clahe(img: np.ndarray, clip_limit: float = 2.0, tiles: tuple[int, int] = (8, 8)) -> np.ndarray:
    """Contrast-limited adaptive histogram equalization.

    The image is split into a ``tiles = (rows, cols)`` grid. Each tile gets a
    256-bin histogram clipped at ``clip_limit`` times the uniform bin height;
    the clipped excess is redistributed and the cumulative histogram becomes
    the tile's gray-level mapping. Output pixels blend the mappings of the four
    nearest tile centres bilinearly.

    A tile holding a single gray level keeps the identity mapping, so flat
    regions (and constant images) come through unchanged.

    Args:
        img: 2D gray image, nominal range [0, 255].
        clip_limit: clip height relative to ``tile_pixels / 256``; must be > 0.
        tiles: tile grid as (rows, cols), each >= 1.

    Returns:
        Float image in [0, 255].
    """
    img = _validate_gray(img)
    if clip_limit <= 0:
        raise ValueError("clip_limit must be > 0")
    ty, tx = int(tiles[0]), int(tiles[1])
    if ty < 1 or tx < 1:
        raise ValueError(f"tile grid must be at least 1x1, got {tiles}")
    h, w = img.shape
    if h < ty or w < tx:
        raise ValueError(f"image {w}x{h} is smaller than the {tx}x{ty} tile grid")

    q = quantize(img)
    ye, xe = _tile_edges(h, ty), _tile_edges(w, tx)
    identity = np.arange(256, dtype=np.float64)
    luts = np.empty((ty, tx, 256))
    for i in range(ty):
        for j in range(tx):
            block = q[ye[i] : ye[i + 1], xe[j] : xe[j + 1]]
            hist = np.bincount(block.ravel(), minlength=256).astype(np.int64)
            if np.count_nonzero(hist) == 1:
                luts[i, j] = identity
                continue
            npix = block.size
            clip = max(1, int(clip_limit * npix / 256))
            cdf = np.cumsum(_clip_histogram(hist, clip))
            luts[i, j] = cdf * (255.0 / npix)

    yi0, yi1, wy = _blend_weights(h, ye)
    xi0, xi1, wx = _blend_weights(w, xe)
    wy = wy[:, None]
    wx = wx[None, :]
    a = luts[yi0[:, None], xi0[None, :], q]
    b = luts[yi0[:, None], xi1[None, :], q]
    c = luts[yi1[:, None], xi0[None, :], q]
    d = luts[yi1[:, None], xi1[None, :], q]
    out = (1 - wy) * ((1 - wx) * a + wx * b) + wy * ((1 - wx) * c + wx * d)
    return np.clip(out, 0.0, 255.0)


def _blend_weights(n: int, edges: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-pixel pair of tile indices and the weight of the second one."""
    centres = (edges[:-1] + edges[1:] - 1) / 2.0
    pix = np.arange(n, dtype=np.float64)
    if centres.size == 1:
        zeros = np.zeros(n, dtype=np.intp)
        return zeros, zeros, np.zeros(n)
    hi = np.clip(np.searchsorted(centres, pix, side="right"), 1, centres.size - 1)
    lo = hi - 1
    wt = np.clip((pix - centres[lo]) / (centres[hi] - centres[lo]), 0.0, 1.0)
    return lo, hi, wt


def preprocess(
    rgb: np.ndarray,
    resize_longest: int = 512,
    clahe_clip: float = 2.0,
    clahe_tiles: tuple[int, int] = (8, 8),
) -> np.ndarray:
    """Luminance, downscale, then CLAHE."""
    gray = fit_longest_side(to_luminance(rgb), resize_longest)
    return clahe(gray, clahe_clip, clahe_tiles)


def save_gray_png(img: np.ndarray, path: str | os.PathLike, compress_level: int = 6) -> None:
    """Write an 8-bit grayscale PNG (round-half-up quantization)."""
    Image.fromarray(quantize(img)).save(path, format="PNG", compress_level=compress_level)


def list_images(directory: str | os.PathLike) -> list[Path]:
    """Supported image files in ``directory`` sorted lexicographically by name."""
    directory = Path(directory)
    if not directory.is_dir():
        raise NotADirectoryError(f"{directory} is not a directory")
    return sorted(
        (p for p in directory.iterdir() if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES),
        key=lambda p: p.name,
    )
