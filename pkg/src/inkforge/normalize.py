"""Ink normalization: fixed-period time resampling, shape-preserving
simplification, canvas fitting, and synthetic timestamps.

The canonical preprocessing order is resample -> simplify -> fit. All
operations are pure functions over immutable inks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _accel
from .errors import EmptyInkError
from .ink import CanvasTransform, DigitalInk, Stroke, bounds, total_points, transform

DEFAULT_RESAMPLE_PERIOD = 0.020
DEFAULT_SIMPLIFY_EPSILON = 1.0

SYNTHETIC_TIME_KEY = "synthetic_time"
RESAMPLE_WARNING_KEY = "resample_warning"


@dataclass(frozen=True)
class ResampleSpec:
    """Fixed sampling period, seconds."""

    period: float = DEFAULT_RESAMPLE_PERIOD

    def __post_init__(self):
        if not (math.isfinite(self.period) and self.period > 0):
            raise ValueError(f"resample period must be positive, got {self.period}")


@dataclass(frozen=True)
class SimplifySpec:
    """Ramer-Douglas-Peucker tolerance, canvas units."""

    epsilon: float = DEFAULT_SIMPLIFY_EPSILON

    def __post_init__(self):
        if not (math.isfinite(self.epsilon) and self.epsilon >= 0):
            raise ValueError(f"simplify epsilon must be >= 0, got {self.epsilon}")


if _accel.USE_NUMBA:
    from numba import njit

    @njit(cache=True)
    def _rdp_keep_mask(xs, ys, eps):  # pragma: no cover - numba build
        n = xs.shape[0]
        keep = np.zeros(n, np.bool_)
        keep[0] = True
        keep[n - 1] = True
        stack = np.empty((2 * n + 2, 2), np.int64)
        top = 0
        stack[top, 0] = 0
        stack[top, 1] = n - 1
        top += 1
        while top > 0:
            top -= 1
            lo = stack[top, 0]
            hi = stack[top, 1]
            if hi - lo < 2:
                continue
            x1 = xs[lo]
            y1 = ys[lo]
            dx = xs[hi] - x1
            dy = ys[hi] - y1
            norm = math.hypot(dx, dy)
            dmax = -1.0
            imax = lo
            for i in range(lo + 1, hi):
                if norm == 0.0:
                    d = math.hypot(xs[i] - x1, ys[i] - y1)
                else:
                    d = abs(dx * (y1 - ys[i]) - (x1 - xs[i]) * dy) / norm
                if d > dmax:
                    dmax = d
                    imax = i
            if dmax > eps:
                keep[imax] = True
                stack[top, 0] = lo
                stack[top, 1] = imax
                top += 1
                stack[top, 0] = imax
                stack[top, 1] = hi
                top += 1
        return keep

else:

    def _rdp_keep_mask(xs, ys, eps):
        n = xs.shape[0]
        keep = np.zeros(n, bool)
        keep[0] = keep[n - 1] = True
        stack = [(0, n - 1)]
        while stack:
            lo, hi = stack.pop()
            if hi - lo < 2:
                continue
            x1, y1 = xs[lo], ys[lo]
            dx = xs[hi] - x1
            dy = ys[hi] - y1
            norm = math.hypot(dx, dy)
            seg_x = xs[lo + 1 : hi]
            seg_y = ys[lo + 1 : hi]
            if norm == 0.0:
                d = np.hypot(seg_x - x1, seg_y - y1)
            else:
                d = np.abs(dx * (y1 - seg_y) - (x1 - seg_x) * dy) / norm
            i = int(np.argmax(d))
            if d[i] > eps:
                imax = lo + 1 + i
                keep[imax] = True
                stack.append((lo, imax))
                stack.append((imax, hi))
        return keep


def simplify(ink: DigitalInk, spec: SimplifySpec = SimplifySpec()) -> DigitalInk:
    """Per-stroke Ramer-Douglas-Peucker reduction.

    Endpoints are preserved, every retained point is one of the original
    points (timestamps included), and epsilon 0 is the identity.
    """
    if spec.epsilon == 0:
        return ink
    out = []
    for s in ink.strokes:
        if len(s) <= 2:
            out.append(s)
            continue
        mask = _rdp_keep_mask(
            np.ascontiguousarray(s.x), np.ascontiguousarray(s.y), float(spec.epsilon)
        )
        out.append(Stroke(s.array[mask]))
    return DigitalInk(out, ink.metadata)


def _timestamps_absent(ink: DigitalInk) -> bool:
    if ink.metadata.get(SYNTHETIC_TIME_KEY) == "true":
        return True
    if total_points(ink) < 2:
        return False
    ts = np.concatenate([s.t for s in ink.strokes])
    return bool(np.ptp(ts) == 0.0)


def _resample_stroke(s: Stroke, period: float) -> Stroke:
    m = len(s)
    if m == 1:
        return s
    t = s.t
    duration = float(t[-1] - t[0])
    k = int(math.floor(duration / period + 1e-9))
    times = t[0] + np.arange(k + 1) * period
    rows = np.column_stack([np.interp(times, t, s.x), np.interp(times, t, s.y), times])
    rows[0] = s.array[0]
    if duration - k * period > period * 1e-6:
        rows = np.vstack([rows, s.array[-1]])
    else:
        rows[-1] = s.array[-1]
    return Stroke(rows)


def resample_time(ink: DigitalInk, spec: ResampleSpec = ResampleSpec()) -> DigitalInk:
    """Resample every stroke to a fixed period by linear interpolation.

    Points land at t0 + k*period; the first and last original points are
    always retained exactly. Inks whose timestamps are synthetic or absent
    pass through unchanged with a warning flag in the metadata.
    """
    for i, s in enumerate(ink.strokes):
        if bool(np.any(np.diff(s.t) < 0)):
            raise ValueError(f"stroke {i}: decreasing timestamps")
    if _timestamps_absent(ink):
        return ink.with_metadata(
            **{RESAMPLE_WARNING_KEY: "timestamps absent or synthetic; resample skipped"}
        )
    return DigitalInk([_resample_stroke(s, spec.period) for s in ink.strokes], ink.metadata)


def fit_to_canvas(ink: DigitalInk, n: int) -> tuple[DigitalInk, CanvasTransform]:
    """Center ``ink`` on an n x n canvas with an aspect-preserving scale.

    The larger side of the bounds maps to exactly n. Degenerate inks (zero
    width and height) land on the canvas center with scale 1. Returns the
    fitted ink and the transform, so callers can invert the placement.
    """
    n = int(n)
    if n < 1:
        raise ValueError(f"canvas size must be >= 1, got {n}")
    if total_points(ink) == 0:
        raise EmptyInkError("cannot fit empty ink to a canvas")
    bb = bounds(ink)
    w, h = bb.width, bb.height
    if w == 0 and h == 0:
        tfm = CanvasTransform(1.0, n / 2.0 - bb.x_min, n / 2.0 - bb.y_min, n)
    else:
        s = n / max(w, h)
        tfm = CanvasTransform(
            s, (n - s * w) / 2.0 - s * bb.x_min, (n - s * h) / 2.0 - s * bb.y_min, n
        )
    return transform(ink, tfm), tfm


def hallucinate_time(ink: DigitalInk, period: float = DEFAULT_RESAMPLE_PERIOD) -> DigitalInk:
    """Assign synthetic fixed-rate timestamps.

    Within each stroke t = k*period; the counter continues across strokes
    with one extra period inserted between consecutive strokes. Marks the
    ink metadata with synthetic_time="true".
    """
    if not (math.isfinite(period) and period > 0):
        raise ValueError(f"period must be positive, got {period}")
    out = []
    k = 0
    for s in ink.strokes:
        ts = (k + np.arange(len(s))) * period
        out.append(Stroke(np.column_stack([s.xy, ts])))
        k += len(s) + 1
    md = dict(ink.metadata)
    md[SYNTHETIC_TIME_KEY] = "true"
    return DigitalInk(out, md)


def rotate_ink(ink: DigitalInk, angle_rad: float, center: tuple[float, float] | None = None) -> DigitalInk:
    """Rotate all points by ``angle_rad`` about ``center`` (default: bounds center).

    Positive angles turn x toward y, which reads as clockwise in the
    package's y-down frame.
    """
    if ink.is_empty or angle_rad == 0.0:
        return ink
    if center is None:
        center = bounds(ink).center
    cx, cy = center
    c, s = math.cos(angle_rad), math.sin(angle_rad)
    out = []
    for st in ink.strokes:
        dx = st.x - cx
        dy = st.y - cy
        rows = np.column_stack([cx + c * dx - s * dy, cy + s * dx + c * dy, st.t])
        out.append(Stroke(rows))
    return DigitalInk(out, ink.metadata)
