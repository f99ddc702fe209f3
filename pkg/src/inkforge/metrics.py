"""Automated evaluation: character-box F1 and ink geometry statistics.

char_f1 follows a greedy one-to-one matching over (box, character) pairs:
candidates need IoU at or above the threshold and an exact, case-sensitive
character match; pairs are taken in descending IoU order. chamfer is the
symmetric mean nearest-neighbor distance between densified polylines and
backs the package's round-trip self-consistency tests.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _accel
from .errors import EmptyInkError, ValidationError
from .ink import BoundingBox, DigitalInk


@dataclass(frozen=True)
class CharBox:
    """A single recognized character and its box, image pixel units."""

    box: BoundingBox
    character: str

    def __post_init__(self):
        if len(self.character) != 1:
            raise ValueError(f"character must be a single char, got {self.character!r}")


@dataclass(frozen=True)
class F1Report:
    precision: float
    recall: float
    f1: float
    matches: tuple[tuple[int, int], ...]  # (pred index, truth index)
    unmatched_pred: int
    unmatched_truth: int

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "matches": [list(m) for m in self.matches],
            "unmatched_pred": self.unmatched_pred,
            "unmatched_truth": self.unmatched_truth,
        }

    def table(self) -> str:
        rows = [
            ("precision", f"{self.precision:.4f}"),
            ("recall", f"{self.recall:.4f}"),
            ("f1", f"{self.f1:.4f}"),
            ("matched", str(len(self.matches))),
            ("unmatched pred", str(self.unmatched_pred)),
            ("unmatched truth", str(self.unmatched_truth)),
        ]
        width = max(len(k) for k, _ in rows)
        return "\n".join(f"{k:<{width}}  {v}" for k, v in rows)


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union; zero-area unions count as no overlap."""
    ix = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    iy = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    union = a.width * a.height + b.width * b.height - inter
    return inter / union if union > 0 else 0.0


def char_f1(
    pred: Sequence[CharBox], truth: Sequence[CharBox], iou_threshold: float = 0.5
) -> F1Report:
    """Greedy one-to-one character matching by descending IoU.

    Empty pred and truth count as vacuous perfection (F1 = 1); only one
    side empty scores 0.
    """
    if not 0.0 < iou_threshold < 1.0:
        raise ValidationError(f"iou_threshold must be in (0, 1), got {iou_threshold}")
    if not pred and not truth:
        return F1Report(1.0, 1.0, 1.0, (), 0, 0)
    candidates = []
    for pi, p in enumerate(pred):
        for ti, t in enumerate(truth):
            if p.character != t.character:
                continue
            overlap = iou(p.box, t.box)
            if overlap >= iou_threshold:
                candidates.append((-overlap, pi, ti))
    candidates.sort()
    pred_used = [False] * len(pred)
    truth_used = [False] * len(truth)
    matches = []
    for _, pi, ti in candidates:
        if pred_used[pi] or truth_used[ti]:
            continue
        pred_used[pi] = True
        truth_used[ti] = True
        matches.append((pi, ti))
    m = len(matches)
    precision = m / len(pred) if pred else 0.0
    recall = m / len(truth) if truth else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return F1Report(precision, recall, f1, tuple(matches), len(pred) - m, len(truth) - m)


if _accel.USE_NUMBA:
    from numba import njit

    @njit(cache=True)
    def _mean_min_dist(a, b):  # pragma: no cover - numba build
        total = 0.0
        for i in range(a.shape[0]):
            ax = a[i, 0]
            ay = a[i, 1]
            best = np.inf
            for j in range(b.shape[0]):
                dx = ax - b[j, 0]
                dy = ay - b[j, 1]
                d = dx * dx + dy * dy
                if d < best:
                    best = d
            total += math.sqrt(best)
        return total / a.shape[0]

else:

    def _mean_min_dist(a, b):
        total = 0.0
        bx = b[:, 0]
        by = b[:, 1]
        for i0 in range(0, a.shape[0], 512):
            blk = a[i0 : i0 + 512]
            d2 = (blk[:, 0, None] - bx[None, :]) ** 2 + (blk[:, 1, None] - by[None, :]) ** 2
            total += float(np.sqrt(d2.min(axis=1)).sum())
        return total / a.shape[0]


def _densify(ink: DigitalInk, step: float) -> np.ndarray:
    pts: list[np.ndarray] = []
    for s in ink.strokes:
        xy = s.xy
        if len(xy) == 1:
            pts.append(xy)
            continue
        for k in range(len(xy) - 1):
            p0, p1 = xy[k], xy[k + 1]
            length = float(np.hypot(*(p1 - p0)))
            nsub = max(1, int(math.ceil(length / step)))
            fr = np.arange(nsub) / nsub
            pts.append(p0 + fr[:, None] * (p1 - p0))
        pts.append(xy[-1:])
    return np.ascontiguousarray(np.concatenate(pts))


def chamfer(a: DigitalInk, b: DigitalInk, sample_step: float = 1.0) -> float:
    """Symmetric mean nearest-neighbor distance between densified polylines."""
    if not (math.isfinite(sample_step) and sample_step > 0):
        raise ValidationError(f"sample_step must be positive, got {sample_step}")
    if a.is_empty or b.is_empty:
        raise EmptyInkError("chamfer distance needs two non-empty inks")
    pa = _densify(a, sample_step)
    pb = _densify(b, sample_step)
    return (float(_mean_min_dist(pa, pb)) + float(_mean_min_dist(pb, pa))) / 2.0


def load_charboxes(path) -> list[CharBox]:
    """Read a char-box JSON array: [{"box": [x0, y0, x1, y1], "char": "a"}, ...]."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"$: invalid JSON: {exc}") from None
    if not isinstance(data, list):
        raise ValidationError("$: expected an array of char boxes")
    out = []
    for i, item in enumerate(data):
        if not isinstance(item, dict):
            raise ValidationError(f"$[{i}]: expected an object")
        box = item.get("box")
        if (
            not isinstance(box, list)
            or len(box) != 4
            or not all(isinstance(v, (int, float)) for v in box)
        ):
            raise ValidationError(f"$[{i}].box: expected [x_min, y_min, x_max, y_max]")
        char = item.get("char")
        if not isinstance(char, str) or len(char) != 1:
            raise ValidationError(f"$[{i}].char: expected a single character")
        try:
            out.append(CharBox(BoundingBox(*map(float, box)), char))
        except ValueError as exc:
            raise ValidationError(f"$[{i}].box: {exc}") from None
    return out


@dataclass(frozen=True)
class StrokeStats:
    stroke_count: int
    point_count: int
    total_length: float
    mean_points_per_stroke: float


def stroke_stats(ink: DigitalInk) -> StrokeStats:
    """Descriptive statistics; all zeros for an empty ink."""
    n_strokes = len(ink.strokes)
    n_points = sum(len(s) for s in ink.strokes)
    length = 0.0
    for s in ink.strokes:
        if len(s) > 1:
            length += float(np.hypot(*np.diff(s.xy, axis=0).T).sum())
    mean_pts = n_points / n_strokes if n_strokes else 0.0
    return StrokeStats(n_strokes, n_points, length, mean_pts)
