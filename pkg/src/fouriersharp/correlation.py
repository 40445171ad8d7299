"""PLCC / SRCC / KRCC of objective scores against binary subjective labels."""

from __future__ import annotations

import csv
import json
import os
from dataclasses import asdict, dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy import stats as sps

from .errors import AlignmentError, DegenerateInputError

METHOD_NOTES = {"srcc": "pearson on mid-ranks", "krcc": "kendall tau-b"}


def _pair(x: Sequence[float], y: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or x.shape != y.shape:
        raise ValueError(f"need two 1D vectors of equal length, got {x.shape} and {y.shape}")
    if x.size < 2:
        raise ValueError("need at least two observations")
    return x, y


def plcc(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson product-moment correlation."""
    x, y = _pair(x, y)
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise DegenerateInputError("zero variance")
    r = float(dx @ dy) / np.sqrt(sxx * syy)
    return float(np.clip(r, -1.0, 1.0))


def srcc(x: Sequence[float], y: Sequence[float]) -> float:
    """Spearman correlation: Pearson on average (mid) ranks."""
    x, y = _pair(x, y)
    try:
        return plcc(sps.rankdata(x), sps.rankdata(y))
    except DegenerateInputError:
        raise DegenerateInputError("zero rank variance") from None


def krcc(x: Sequence[float], y: Sequence[float]) -> float:
    """Kendall tau-b, tie-corrected."""
    x, y = _pair(x, y)
    if np.all(x == x[0]) or np.all(y == y[0]):
        raise DegenerateInputError("all pairs tied")
    tau = sps.kendalltau(x, y, variant="b").statistic
    return float(np.clip(tau, -1.0, 1.0))


@dataclass
class CorrelationReport:
    plcc: float
    srcc: float
    krcc: float
    n: int

    def to_dict(self) -> dict:
        return dict(asdict(self), methods=METHOD_NOTES)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_table(self, dataset: str = "-", method: str = "-") -> str:
        header = f"{'Dataset':<16}{'Method':<12}{'PLCC':>8}{'SRCC':>8}{'KRCC':>8}"
        row = f"{dataset:<16}{method:<12}{self.plcc:>8.4f}{self.srcc:>8.4f}{self.krcc:>8.4f}"
        return header + "\n" + row + "\n"


def evaluate(scores: Mapping[str, float], labels: Mapping[str, int]) -> CorrelationReport:
    """Correlate scores with 0/1 labels, matched by source id."""
    missing = set(labels) ^ set(scores)
    if missing:
        raise AlignmentError(f"ids not present in both tables: {sorted(missing)}")
    ids = sorted(labels)
    y = np.array([float(labels[i]) for i in ids])
    if np.all(y == y[0]):
        raise DegenerateInputError("labels contain a single class")
    x = np.array([float(scores[i]) for i in ids])
    return CorrelationReport(plcc(x, y), srcc(x, y), krcc(x, y), len(ids))


_LABEL_WORDS = {"1": 1, "0": 0, "sharp": 1, "blurred": 0}


def read_labels(path: str | os.PathLike) -> dict[str, int]:
    """``source_id,label`` CSV (extra columns ignored); label is 0/1 or sharp/blurred."""
    out: dict[str, int] = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if not reader.fieldnames or not {"source_id", "label"} <= set(reader.fieldnames):
            raise ValueError(f"{path}: expected columns source_id,label")
        for row in reader:
            sid = row["source_id"]
            word = row["label"].strip().lower()
            if word not in _LABEL_WORDS:
                raise ValueError(f"{path}: bad label {row['label']!r} for {sid}")
            if sid in out:
                raise ValueError(f"{path}: duplicate source_id {sid}")
            out[sid] = _LABEL_WORDS[word]
    return out


SCORE_COLUMNS = ("iqr_score", "score", "value")


def read_scores(path: str | os.PathLike, column: str | None = None) -> dict[str, float]:
    """Scores CSV keyed by ``source_id``; the score column defaults to the first of
    ``iqr_score``, ``score``, ``value`` present."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        if "source_id" not in fields:
            raise ValueError(f"{path}: missing source_id column")
        if column is None:
            column = next((c for c in SCORE_COLUMNS if c in fields), None)
        if column is None or column not in fields:
            raise ValueError(f"{path}: no score column found")
        out: dict[str, float] = {}
        for row in reader:
            sid = row["source_id"]
            if sid in out:
                raise ValueError(f"{path}: duplicate source_id {sid}")
            out[sid] = float(row[column])
    return out
