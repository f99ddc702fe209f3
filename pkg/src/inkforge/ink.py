"""Core digital-ink value types and geometric primitives.

Everything here is an immutable value: strokes wrap read-only float64
arrays and every operation returns a new object, so inks can be shared
freely between workers. Coordinates use the image convention throughout
the package (x grows right, y grows down), including file I/O.
Timestamps are seconds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, NamedTuple

import numpy as np

from .errors import EmptyInkError


class Point(NamedTuple):
    x: float
    y: float
    t: float = 0.0


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in pixel units, min corner first."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        vals = (self.x_min, self.y_min, self.x_max, self.y_max)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"bounding box must be finite, got {vals}")
        if self.x_min > self.x_max or self.y_min > self.y_max:
            raise ValueError(f"inverted bounding box: {vals}")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def center(self) -> tuple[float, float]:
        return ((self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0)

    def scaled_about_center(self, factor: float) -> "BoundingBox":
        cx, cy = self.center
        hw = self.width * factor / 2.0
        hh = self.height * factor / 2.0
        return BoundingBox(cx - hw, cy - hh, cx + hw, cy + hh)

    def contains(self, other: "BoundingBox", tol: float = 0.0) -> bool:
        return (
            other.x_min >= self.x_min - tol
            and other.y_min >= self.y_min - tol
            and other.x_max <= self.x_max + tol
            and other.y_max <= self.y_max + tol
        )


@dataclass(frozen=True)
class CanvasTransform:
    """Invertible uniform scale plus translation between coordinate frames.

    Maps source coordinates onto an N x N canvas: ``p' = scale * p + offset``.
    ``canvas_size`` records the side length N of the target frame.
    """

    scale: float
    offset_x: float
    offset_y: float
    canvas_size: int

    def __post_init__(self):
        if not (math.isfinite(self.scale) and self.scale > 0):
            raise ValueError(f"scale must be finite and positive, got {self.scale}")
        if not (math.isfinite(self.offset_x) and math.isfinite(self.offset_y)):
            raise ValueError("offsets must be finite")
        if int(self.canvas_size) < 1:
            raise ValueError(f"canvas_size must be >= 1, got {self.canvas_size}")

    @classmethod
    def identity(cls, canvas_size: int) -> "CanvasTransform":
        return cls(1.0, 0.0, 0.0, canvas_size)

    def apply(self, x: float, y: float) -> tuple[float, float]:
        return self.scale * x + self.offset_x, self.scale * y + self.offset_y

    def apply_xy(self, xy: np.ndarray) -> np.ndarray:
        return xy * self.scale + np.array([self.offset_x, self.offset_y])

    def inverse(self) -> "CanvasTransform":
        inv = 1.0 / self.scale
        return CanvasTransform(inv, -self.offset_x * inv, -self.offset_y * inv, self.canvas_size)

    def compose(self, inner: "CanvasTransform") -> "CanvasTransform":
        """Transform equivalent to applying ``inner`` first, then ``self``."""
        return CanvasTransform(
            self.scale * inner.scale,
            self.scale * inner.offset_x + self.offset_x,
            self.scale * inner.offset_y + self.offset_y,
            self.canvas_size,
        )

    def is_identity(self, tol: float = 1e-9) -> bool:
        return (
            abs(self.scale - 1.0) <= tol
            and abs(self.offset_x) <= tol
            and abs(self.offset_y) <= tol
        )


def _freeze(arr: np.ndarray) -> np.ndarray:
    # Copy unless the array already owns immutable storage.
    if arr.flags.writeable or arr.base is not None:
        arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False, init=False)
class Stroke:
    """A pen-down-to-pen-up sequence of (x, y, t) samples.

    Wraps an (m, 3) float64 array, m >= 1, with finite coordinates and
    finite, non-negative, non-decreasing timestamps.
    """

    array: np.ndarray

    def __init__(self, points: Iterable | np.ndarray):
        arr = np.asarray(points, dtype=np.float64)
        if arr.ndim == 1 and arr.size in (2, 3):
            arr = arr.reshape(1, -1)
        if arr.ndim != 2 or arr.shape[1] not in (2, 3):
            raise ValueError(f"stroke expects (m, 2) or (m, 3) samples, got shape {arr.shape}")
        if arr.shape[0] < 1:
            raise ValueError("stroke must contain at least one point")
        if arr.shape[1] == 2:
            arr = np.column_stack([arr, np.zeros(arr.shape[0])])
        if not np.all(np.isfinite(arr[:, :2])):
            raise ValueError("stroke coordinates must be finite")
        t = arr[:, 2]
        if not np.all(np.isfinite(t)) or bool(np.any(t < 0)):
            raise ValueError("timestamps must be finite and >= 0")
        if bool(np.any(np.diff(t) < 0)):
            raise ValueError("timestamps must be non-decreasing within a stroke")
        object.__setattr__(self, "array", _freeze(arr))

    @property
    def x(self) -> np.ndarray:
        return self.array[:, 0]

    @property
    def y(self) -> np.ndarray:
        return self.array[:, 1]

    @property
    def t(self) -> np.ndarray:
        return self.array[:, 2]

    @property
    def xy(self) -> np.ndarray:
        return self.array[:, :2]

    def __len__(self) -> int:
        return self.array.shape[0]

    def __iter__(self) -> Iterator[Point]:
        return (Point(*row) for row in self.array)

    def __getitem__(self, i: int) -> Point:
        return Point(*self.array[i])

    def __eq__(self, other) -> bool:
        if not isinstance(other, Stroke):
            return NotImplemented
        return np.array_equal(self.array, other.array)

    def __repr__(self) -> str:
        return f"Stroke({len(self)} points)"


@dataclass(frozen=True, eq=False, init=False)
class DigitalInk:
    """An ordered collection of strokes plus string metadata.

    An empty ink (zero strokes) is a legal value and signals "no output".
    Stroke order is meaningful and preserved by all transformations.
    """

    strokes: tuple[Stroke, ...]
    metadata: Mapping[str, str]

    def __init__(self, strokes: Iterable[Stroke] = (), metadata: Mapping[str, str] | None = None):
        strokes = tuple(strokes)
        for s in strokes:
            if not isinstance(s, Stroke):
                raise TypeError(f"expected Stroke, got {type(s).__name__}")
        md = dict(metadata) if metadata else {}
        for k, v in md.items():
            if not isinstance(k, str) or not isinstance(v, str):
                raise TypeError("metadata must map str to str")
        object.__setattr__(self, "strokes", strokes)
        object.__setattr__(self, "metadata", md)

    @property
    def is_empty(self) -> bool:
        return not self.strokes

    def with_metadata(self, **entries: str) -> "DigitalInk":
        md = dict(self.metadata)
        md.update(entries)
        return DigitalInk(self.strokes, md)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DigitalInk):
            return NotImplemented
        return self.strokes == other.strokes and dict(self.metadata) == dict(other.metadata)

    def __repr__(self) -> str:
        return f"DigitalInk({len(self.strokes)} strokes, {total_points(self)} points)"


def total_points(ink: DigitalInk) -> int:
    return sum(len(s) for s in ink.strokes)


def bounds(ink: DigitalInk) -> BoundingBox:
    """Tight axis-aligned box over all points of ``ink``."""
    if total_points(ink) == 0:
        raise EmptyInkError("empty ink has no bounds")
    xy = np.concatenate([s.xy for s in ink.strokes])
    lo = xy.min(axis=0)
    hi = xy.max(axis=0)
    return BoundingBox(float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1]))


def transform(ink: DigitalInk, tfm: CanvasTransform) -> DigitalInk:
    """Map every point of ``ink`` through ``tfm``.

    Timestamps, stroke order, and metadata are preserved.
    """
    strokes = [
        Stroke(np.column_stack([tfm.apply_xy(s.xy), s.t])) for s in ink.strokes
    ]
    return DigitalInk(strokes, ink.metadata)
