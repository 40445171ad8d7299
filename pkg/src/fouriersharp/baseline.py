"""Fraction-of-high-frequency-components baseline metric (Kanjar-style)."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .spectral import fft2_normalized

DEFAULT_THRESHOLD_DIVISOR = 1000.0
SUPPORTED_METRICS = ("kanjar",)


@dataclass(frozen=True)
class BaselineScore:
    source_id: str
    value: float
    metric: str = "kanjar"


def kanjar_score(img: np.ndarray, source_id: str = "", divisor: float = DEFAULT_THRESHOLD_DIVISOR) -> BaselineScore:
    """Share of DFT coefficients whose magnitude exceeds ``max|F| / divisor``.

    Uses the unnormalized transform magnitude; the shared normalized FFT is
    rescaled by ``M N``, which cancels in the ratio anyway.
    """
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2 or img.size == 0:
        raise ValueError(f"expected a non-empty 2D image, got shape {img.shape}")
    if divisor <= 0:
        raise ValueError("divisor must be > 0")
    mag = np.abs(fft2_normalized(img)) * img.size
    threshold = mag.max() / divisor
    return BaselineScore(source_id, float(np.count_nonzero(mag > threshold)) / img.size)


def scores_to_csv(scores: Sequence[BaselineScore]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("source_id", "metric", "score"))
    for s in scores:
        writer.writerow([s.source_id, s.metric, repr(s.value)])
    return buf.getvalue()
