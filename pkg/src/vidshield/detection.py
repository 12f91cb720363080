"""Temporal-consistency detection: exception index, verdicts, calibration, ROC.

A frame whose predicted label differs from both temporal neighbors is an
exception frame. The exception index is the fraction of exception frames
in the clip (normalized by the full frame count T; boundary frames can
never be exceptions). Two thresholds split the index into clean /
sparse-adversarial / dense-adversarial verdicts.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import (
    CalibrationError,
    InvalidThresholdsError,
    TooShortStreamError,
    VidShieldError,
)
from .video import FrameMask


@dataclass(frozen=True)
class LabelStream:
    """Per-frame predicted class labels, one per frame."""

    labels: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(int(x) for x in self.labels))

    def __len__(self) -> int:
        return len(self.labels)


class Verdict(str, Enum):
    CLEAN = "clean"
    SPARSE = "sparse"
    DENSE = "dense"


@dataclass(frozen=True)
class DetectionThresholds:
    gamma1: float
    gamma2: float

    def __post_init__(self):
        if not (0.0 <= self.gamma1 < self.gamma2 <= 1.0):
            raise InvalidThresholdsError(
                f"need 0 <= gamma1 < gamma2 <= 1, got "
                f"({self.gamma1}, {self.gamma2})"
            )


@dataclass(frozen=True)
class DetectionVerdict:
    alpha: float
    kind: Verdict


@dataclass(frozen=True)
class CalibrationRow:
    threshold: float
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class CalibrationTable:
    rows: tuple[CalibrationRow, ...]


@dataclass(frozen=True)
class RocCurve:
    points: tuple[tuple[float, float], ...]  # (fpr, tpr), sorted by fpr
    auc: float


def _require_detectable(stream: LabelStream) -> None:
    if len(stream) < 3:
        raise TooShortStreamError(
            f"exception index needs at least 3 frames, got {len(stream)}"
        )


def exception_frame_mask(stream: LabelStream) -> FrameMask:
    """Flag interior frames whose label differs from both neighbors."""
    _require_detectable(stream)
    labels = stream.labels
    t = len(labels)
    flags = [False] * t
    for n in range(1, t - 1):
        flags[n] = labels[n - 1] != labels[n] and labels[n + 1] != labels[n]
    return FrameMask(tuple(flags))


def compute_exception_index(stream: LabelStream) -> float:
    """Fraction of exception frames, normalized by the total frame count."""
    mask = exception_frame_mask(stream)
    return sum(mask.flags) / len(stream)


def classify_verdict(
    alpha: float, thresholds: DetectionThresholds
) -> DetectionVerdict:
    """Map an exception index to a clean/sparse/dense verdict.

    alpha < gamma1 is clean, gamma1 <= alpha < gamma2 is sparse,
    alpha >= gamma2 is dense.
    """
    if not (0.0 <= alpha <= 1.0):
        raise VidShieldError(f"alpha must be in [0, 1], got {alpha}")
    if alpha < thresholds.gamma1:
        kind = Verdict.CLEAN
    elif alpha < thresholds.gamma2:
        kind = Verdict.SPARSE
    else:
        kind = Verdict.DENSE
    return DetectionVerdict(alpha=alpha, kind=kind)


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def sweep_thresholds(
    samples: list[tuple[float, bool]], candidates: list[float]
) -> CalibrationTable:
    """Precision/recall/F1 at each candidate threshold.

    A sample is predicted positive iff its alpha >= threshold (inclusive,
    matching the verdict rule's lower boundary).
    """
    if not samples:
        raise CalibrationError("no samples to calibrate on")
    positives = sum(1 for _, pos in samples if pos)
    if positives == 0 or positives == len(samples):
        raise CalibrationError("calibration needs both classes present")
    rows = []
    for t in candidates:
        tp = sum(1 for a, pos in samples if pos and a >= t)
        fp = sum(1 for a, pos in samples if not pos and a >= t)
        fn = positives - tp
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        rows.append(
            CalibrationRow(
                threshold=float(t),
                precision=precision,
                recall=recall,
                f1=_f1(precision, recall),
            )
        )
    return CalibrationTable(tuple(rows))


def select_optimal_threshold(table: CalibrationTable) -> float:
    """Threshold of the max-F1 row; ties broken by the smallest threshold."""
    if not table.rows:
        raise CalibrationError("empty calibration table")
    best = max(table.rows, key=lambda r: (r.f1, -r.threshold))
    return best.threshold


def roc_curve(samples: list[tuple[float, bool]]) -> RocCurve:
    """ROC curve via a descending-score threshold sweep, AUC by trapezoid.

    Tied scores collapse into a single threshold step.
    """
    positives = sum(1 for _, pos in samples if pos)
    negatives = len(samples) - positives
    if positives == 0 or negatives == 0:
        raise CalibrationError("ROC needs both classes present")

    ordered = sorted(samples, key=lambda s: -s[0])
    points = [(0.0, 0.0)]
    tp = fp = 0
    i = 0
    while i < len(ordered):
        score = ordered[i][0]
        while i < len(ordered) and ordered[i][0] == score:
            if ordered[i][1]:
                tp += 1
            else:
                fp += 1
            i += 1
        points.append((fp / negatives, tp / positives))
    if points[-1] != (1.0, 1.0):
        points.append((1.0, 1.0))

    fprs = np.array([p[0] for p in points])
    tprs = np.array([p[1] for p in points])
    auc = float(np.trapezoid(tprs, fprs))
    return RocCurve(points=tuple(points), auc=auc)


def load_label_stream(path: str | Path) -> LabelStream:
    """Read a JSONL label stream: {"frame": <0-based int>, "label": <int>}.

    Frame indices must be strictly increasing and contiguous from 0.
    Labels must come from a per-frame-independent classifier; any
    cross-frame state in the producer invalidates the exception index.
    """
    entries = []
    path = Path(path)
    if not path.is_file():
        raise VidShieldError(f"label file does not exist: {path}")
    with path.open() as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                entries.append((int(obj["frame"]), int(obj["label"])))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise VidShieldError(
                    f"bad label line {lineno} in {path}: {exc}"
                ) from exc
    if not entries:
        raise VidShieldError(f"label file is empty: {path}")
    for expected, (frame, _) in enumerate(entries):
        if frame != expected:
            raise VidShieldError(
                f"label frames must be contiguous from 0; "
                f"expected {expected}, got {frame} in {path}"
            )
    return LabelStream(tuple(label for _, label in entries))


def save_label_stream(stream: LabelStream, path: str | Path) -> None:
    with Path(path).open("w") as fh:
        for frame, label in enumerate(stream.labels):
            fh.write(json.dumps({"frame": frame, "label": label}) + "\n")
