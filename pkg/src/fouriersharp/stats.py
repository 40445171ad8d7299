"""Stack-level statistics: probability mapping, kurtosis crop search, IQR score, z-scores."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np

from .errors import DegenerateInputError, NoThresholdError
from .spectral import Descriptor

DEFAULT_MIN_TAIL = 8
_TINY = 16 * np.finfo(np.float64).eps


def _values(d: Descriptor | Sequence[float] | np.ndarray) -> np.ndarray:
    return np.asarray(d.values if isinstance(d, Descriptor) else d, dtype=np.float64)


def normalize_probability(d: Descriptor | Sequence[float] | np.ndarray) -> np.ndarray:
    """Divide by the vector sum so the entries form a probability mass."""
    v = _values(d)
    total = v.sum()
    if v.size == 0 or not np.any(v > 0) or total <= 0:
        raise DegenerateInputError("descriptor has no positive entries")
    return v / total


def _degenerate_spread(second_moment: float, v: np.ndarray) -> bool:
    scale = float(np.max(np.abs(v)))
    return second_moment <= 0.0 or math.sqrt(second_moment) <= _TINY * scale


def kurtosis(v: Sequence[float] | np.ndarray) -> float:
    """Fisher excess kurtosis ``m4 / m2**2 - 3`` with biased (1/n) central moments."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.size < 2:
        raise ValueError("kurtosis needs a 1D vector of length >= 2")
    dev = v - v.mean()
    m2 = float(np.mean(dev**2))
    if _degenerate_spread(m2, v):
        raise DegenerateInputError("zero variance")
    m4 = float(np.mean(dev**4))
    return m4 / (m2 * m2) - 3.0


@dataclass
class KurtosisMatrix:
    """Row ``r`` holds the kurtosis of every descriptor after dropping ``crop_sizes[r]`` leading bins."""

    entries: np.ndarray
    crop_sizes: list[int]
    valid: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape


def kurtosis_matrix(stack: Sequence[Descriptor | np.ndarray], min_tail: int = DEFAULT_MIN_TAIL) -> KurtosisMatrix:
    """Kurtosis of each descriptor for every crop size ``c = 0 .. k - min_tail``.

    Rows in which some cropped descriptor has zero variance are filled with NaN
    and flagged invalid.
    """
    if len(stack) < 2:
        raise ValueError("need at least two descriptors")
    rows = [_values(d) for d in stack]
    k = rows[0].size
    if any(r.size != k for r in rows):
        raise ValueError("descriptors differ in length")
    if min_tail < 2 or k < min_tail:
        raise ValueError(f"descriptor length {k} leaves no crop with >= {min_tail} elements")
    x = np.vstack(rows)

    crop_sizes = list(range(0, k - min_tail + 1))
    entries = np.full((len(crop_sizes), x.shape[0]), np.nan)
    valid = np.ones(len(crop_sizes), dtype=bool)
    for r, c in enumerate(crop_sizes):
        tail = x[:, c:]
        dev = tail - tail.mean(axis=1, keepdims=True)
        m2 = np.mean(dev**2, axis=1)
        scale = np.max(np.abs(tail), axis=1)
        if np.any((m2 <= 0) | (np.sqrt(m2) <= _TINY * scale)):
            valid[r] = False
            continue
        m4 = np.mean(dev**4, axis=1)
        entries[r] = m4 / (m2 * m2) - 3.0
    return KurtosisMatrix(entries, crop_sizes, valid)


def optimal_crop_threshold(km: KurtosisMatrix) -> int:
    """Crop size whose kurtosis row has the widest max-min range.

    Rows with any negative entry are skipped. Ties go to the smaller crop size.
    """
    best_range = -math.inf
    threshold = None
    for r, c in enumerate(km.crop_sizes):
        if not km.valid[r]:
            continue
        row = km.entries[r]
        hi, lo = float(np.max(row)), float(np.min(row))
        if hi < 0 or lo < 0:
            continue
        if hi - lo > best_range:
            best_range = hi - lo
            threshold = c
    if threshold is None:
        raise NoThresholdError("every crop size has a negative kurtosis entry")
    return threshold


def iqr(v: Sequence[float] | np.ndarray) -> float:
    """``Q3 - Q1`` with linear interpolation between order statistics."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.size < 2:
        raise ValueError("iqr needs a 1D vector of length >= 2")
    q1, q3 = np.percentile(v, [25.0, 75.0])
    return max(0.0, float(q3 - q1))


def zscores(scores: Sequence[float] | np.ndarray) -> np.ndarray:
    """Standardize with the population standard deviation."""
    x = np.asarray(scores, dtype=np.float64)
    if x.ndim != 1 or x.size < 2:
        raise ValueError("zscores needs a 1D vector of length >= 2")
    mu = x.mean()
    sigma = float(x.std())
    if _degenerate_spread(sigma * sigma, x):
        raise DegenerateInputError("scores have zero standard deviation")
    return (x - mu) / sigma


@dataclass
class ImageAssessment:
    source_id: str
    iqr_score: float
    z_score: float
    label: str
    rank: int


@dataclass
class StackAssessment:
    records: list[ImageAssessment]
    crop_threshold: int
    z_threshold: float
    config: dict[str, Any] = field(default_factory=dict)

    CSV_COLUMNS = ("source_id", "iqr_score", "z_score", "label", "rank")

    def by_rank(self) -> list[ImageAssessment]:
        return sorted(self.records, key=lambda rec: rec.rank)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.CSV_COLUMNS)
        for rec in self.records:
            writer.writerow([rec.source_id, _fmt(rec.iqr_score), _fmt(rec.z_score), rec.label, rec.rank])
        return buf.getvalue()

    def to_rank_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(("rank", "source_id"))
        for rec in self.by_rank():
            writer.writerow([rec.rank, rec.source_id])
        return buf.getvalue()

    def to_dict(self) -> dict[str, Any]:
        return {
            "crop_threshold": self.crop_threshold,
            "z_threshold": self.z_threshold,
            "config": self.config,
            "records": [
                {
                    "source_id": r.source_id,
                    "iqr_score": r.iqr_score,
                    "z_score": r.z_score,
                    "label": r.label,
                    "rank": r.rank,
                }
                for r in self.records
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _fmt(x: float) -> str:
    return repr(float(x))


def classify_stack(
    descriptors: Sequence[Descriptor],
    z_threshold: float = 1.0,
    min_tail: int = DEFAULT_MIN_TAIL,
) -> StackAssessment:
    """Score and label every image of a stack relative to the others.

    Descriptors are mapped to probabilities, cropped at the stack's optimal
    kurtosis threshold and scored by their IQR; an image is ``sharp`` when the
    z-score of its IQR is at least ``z_threshold``. Rank 1 is the largest IQR,
    ties keep input order.
    """
    if len(descriptors) < 2:
        raise DegenerateInputError("stack statistics need at least two images")
    probs = [normalize_probability(d) for d in descriptors]
    ids = [d.source_id if isinstance(d, Descriptor) else str(i) for i, d in enumerate(descriptors)]
    threshold = optimal_crop_threshold(kurtosis_matrix(probs, min_tail))
    scores = np.array([iqr(p[threshold:]) for p in probs])
    z = zscores(scores)
    order = sorted(range(len(scores)), key=lambda i: (-scores[i], i))
    ranks = np.empty(len(scores), dtype=int)
    ranks[order] = np.arange(1, len(scores) + 1)
    records = [
        ImageAssessment(
            source_id=ids[i],
            iqr_score=float(scores[i]),
            z_score=float(z[i]),
            label="sharp" if z[i] >= z_threshold else "blurred",
            rank=int(ranks[i]),
        )
        for i in range(len(scores))
    ]
    return StackAssessment(records, crop_threshold=threshold, z_threshold=z_threshold)
