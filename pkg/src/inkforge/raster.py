"""Ink rasterization, the augmentation suite, and image canvas fitting.

Strokes render as round-capped, round-joined polylines: a stroke is the
union of capsules around its segments, painted by a distance-field
scanline kernel with a one-pixel linear anti-aliasing ramp. Augmentation
draws optional ruled lines or grids under the ink, then adds Gaussian
noise, then box blur, in that order. Rendering is deterministic for a
fixed spec and seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from PIL import Image, ImageFilter

from . import _accel
from .errors import ValidationError
from .ink import CanvasTransform, DigitalInk

DEFAULT_IMAGE_SIDE = 224

ROTATION_RANGE = (-math.pi / 4, math.pi / 4)
STROKE_WIDTH_RANGE = (1.0, 12.0)
RULING_WIDTH_RANGE = (1.0, 6.0)
RULING_SPACING_RANGE = (10.0, 100.0)
NOISE_STD_RANGE = (50.0, 500.0)
BLUR_RADIUS_RANGE = (0.0, 5.0)


@dataclass(frozen=True, eq=False, init=False)
class RasterImage:
    """An RGB image: (height, width, 3) uint8, read-only."""

    pixels: np.ndarray

    def __init__(self, pixels: np.ndarray):
        arr = np.asarray(pixels, dtype=np.uint8)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError(f"expected (h, w, 3) RGB pixels, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("image must have positive dimensions")
        if arr.flags.writeable or arr.base is not None:
            arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "pixels", arr)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @classmethod
    def filled(cls, width: int, height: int, rgb: tuple[float, float, float] = (1.0, 1.0, 1.0)):
        px = np.empty((height, width, 3), np.uint8)
        px[:] = np.rint(np.asarray(rgb) * 255.0).astype(np.uint8)
        return cls(px)

    def __eq__(self, other) -> bool:
        if not isinstance(other, RasterImage):
            return NotImplemented
        return np.array_equal(self.pixels, other.pixels)

    def __repr__(self) -> str:
        return f"RasterImage({self.width}x{self.height})"


def _check_range(name: str, value: float, lo: float, hi: float) -> float:
    value = float(value)
    if not (math.isfinite(value) and lo <= value <= hi):
        raise ValidationError(f"{name} out of range [{lo:g}, {hi:g}]: {value}")
    return value


def _check_rgb(name: str, rgb) -> tuple[float, float, float]:
    rgb = tuple(float(c) for c in rgb)
    if len(rgb) != 3:
        raise ValidationError(f"{name} must have 3 channels")
    for i, c in enumerate(rgb):
        _check_range(f"{name}[{i}]", c, 0.0, 1.0)
    return rgb


@dataclass(frozen=True)
class Ruling:
    """Ruled-paper background: horizontal lines or a full grid."""

    kind: str  # "lines" | "grids"
    line_width_px: float
    spacing_px: float
    rgb: tuple[float, float, float]

    def __post_init__(self):
        if self.kind not in ("lines", "grids"):
            raise ValidationError(f"ruling.kind must be 'lines' or 'grids', got {self.kind!r}")
        _check_range("ruling.line_width_px", self.line_width_px, *RULING_WIDTH_RANGE)
        _check_range("ruling.spacing_px", self.spacing_px, *RULING_SPACING_RANGE)
        object.__setattr__(self, "rgb", _check_rgb("ruling.rgb", self.rgb))


@dataclass(frozen=True)
class AugmentationSpec:
    """One sampled rendering style. All fields live in closed ranges."""

    rotation_rad: float = 0.0
    stroke_rgb: tuple[float, float, float] = (0.0, 0.0, 0.0)
    background_rgb: tuple[float, float, float] = (1.0, 1.0, 1.0)
    stroke_width_px: float = 2.0
    ruling: Ruling | None = None
    gaussian_noise_std: float | None = None
    box_blur_radius_px: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        _check_range("rotation_rad", self.rotation_rad, *ROTATION_RANGE)
        object.__setattr__(self, "stroke_rgb", _check_rgb("stroke_rgb", self.stroke_rgb))
        object.__setattr__(self, "background_rgb", _check_rgb("background_rgb", self.background_rgb))
        _check_range("stroke_width_px", self.stroke_width_px, *STROKE_WIDTH_RANGE)
        if self.gaussian_noise_std is not None:
            _check_range("gaussian_noise_std", self.gaussian_noise_std, *NOISE_STD_RANGE)
        _check_range("box_blur_radius_px", self.box_blur_radius_px, *BLUR_RADIUS_RANGE)
        if not isinstance(self.rng_seed, int) or not 0 <= self.rng_seed < 2**64:
            raise ValidationError(f"rng_seed must be a 64-bit unsigned integer, got {self.rng_seed}")


@dataclass(frozen=True)
class AugmentProbs:
    """Inclusion probabilities for the optional augmentations."""

    lines: float = 0.25
    grids: float = 0.25
    noise: float = 0.5
    blur: float = 0.5

    def __post_init__(self):
        for name in ("lines", "grids", "noise", "blur"):
            _check_range(name, getattr(self, name), 0.0, 1.0)
        if self.lines + self.grids > 1.0:
            raise ValidationError("lines + grids probability must not exceed 1")


def sample_augmentation(rng_seed: int, probs: AugmentProbs | None = None) -> AugmentationSpec:
    """Sample a spec uniformly from the documented ranges.

    Draw order is fixed (rotation, stroke color, background color, width,
    ruling, noise, blur, render seed) so a seed pins the whole spec.
    """
    probs = probs or AugmentProbs()
    rng = np.random.default_rng(rng_seed)
    rotation = float(rng.uniform(*ROTATION_RANGE))
    stroke_rgb = tuple(float(c) for c in rng.uniform(0.0, 1.0, 3))
    background_rgb = tuple(float(c) for c in rng.uniform(0.0, 1.0, 3))
    width = float(rng.uniform(*STROKE_WIDTH_RANGE))
    u = float(rng.random())
    ruling = None
    if u < probs.lines + probs.grids:
        ruling = Ruling(
            "lines" if u < probs.lines else "grids",
            float(rng.uniform(*RULING_WIDTH_RANGE)),
            float(rng.uniform(*RULING_SPACING_RANGE)),
            tuple(float(c) for c in rng.uniform(0.0, 1.0, 3)),
        )
    noise = float(rng.uniform(*NOISE_STD_RANGE)) if rng.random() < probs.noise else None
    blur = float(rng.uniform(*BLUR_RADIUS_RANGE)) if rng.random() < probs.blur else 0.0
    seed = int(rng.integers(0, 2**63))
    return AugmentationSpec(
        rotation_rad=rotation,
        stroke_rgb=stroke_rgb,
        background_rgb=background_rgb,
        stroke_width_px=width,
        ruling=ruling,
        gaussian_noise_std=noise,
        box_blur_radius_px=blur,
        rng_seed=seed,
    )


if _accel.USE_NUMBA:
    from numba import njit

    @njit(cache=True)
    def _paint_polyline(alpha, xs, ys, radius):  # pragma: no cover - numba build
        h, w = alpha.shape
        npts = xs.shape[0]
        reach = radius + 0.5
        nseg = npts - 1 if npts > 1 else 1
        for k in range(nseg):
            ax = xs[k]
            ay = ys[k]
            if npts > 1:
                bx = xs[k + 1]
                by = ys[k + 1]
            else:
                bx = ax
                by = ay
            x0 = int(math.floor(min(ax, bx) - reach))
            x1 = int(math.ceil(max(ax, bx) + reach))
            y0 = int(math.floor(min(ay, by) - reach))
            y1 = int(math.ceil(max(ay, by) + reach))
            if x0 < 0:
                x0 = 0
            if y0 < 0:
                y0 = 0
            if x1 > w - 1:
                x1 = w - 1
            if y1 > h - 1:
                y1 = h - 1
            dx = bx - ax
            dy = by - ay
            dd = dx * dx + dy * dy
            for r in range(y0, y1 + 1):
                py = r + 0.5
                for c in range(x0, x1 + 1):
                    px = c + 0.5
                    if dd > 0.0:
                        tt = ((px - ax) * dx + (py - ay) * dy) / dd
                        if tt < 0.0:
                            tt = 0.0
                        elif tt > 1.0:
                            tt = 1.0
                    else:
                        tt = 0.0
                    ex = ax + tt * dx - px
                    ey = ay + tt * dy - py
                    a = radius - math.sqrt(ex * ex + ey * ey) + 0.5
                    if a > 0.0:
                        if a > 1.0:
                            a = 1.0
                        if a > alpha[r, c]:
                            alpha[r, c] = a

else:

    def _paint_polyline(alpha, xs, ys, radius):
        h, w = alpha.shape
        npts = xs.shape[0]
        reach = radius + 0.5
        segs = range(npts - 1) if npts > 1 else (0,)
        for k in segs:
            ax, ay = xs[k], ys[k]
            bx, by = (xs[k + 1], ys[k + 1]) if npts > 1 else (ax, ay)
            x0 = max(int(math.floor(min(ax, bx) - reach)), 0)
            x1 = min(int(math.ceil(max(ax, bx) + reach)), w - 1)
            y0 = max(int(math.floor(min(ay, by) - reach)), 0)
            y1 = min(int(math.ceil(max(ay, by) + reach)), h - 1)
            if x1 < x0 or y1 < y0:
                continue
            px = np.arange(x0, x1 + 1) + 0.5
            py = (np.arange(y0, y1 + 1) + 0.5)[:, None]
            dx = bx - ax
            dy = by - ay
            dd = dx * dx + dy * dy
            if dd > 0.0:
                tt = np.clip(((px - ax) * dx + (py - ay) * dy) / dd, 0.0, 1.0)
            else:
                tt = 0.0
            ex = ax + tt * dx - px
            ey = ay + tt * dy - py
            a = np.clip(radius - np.sqrt(ex * ex + ey * ey) + 0.5, 0.0, 1.0)
            region = alpha[y0 : y1 + 1, x0 : x1 + 1]
            np.maximum(region, a, out=region)


def _ink_alpha(ink: DigitalInk, height: int, width: int, stroke_width: float) -> np.ndarray:
    alpha = np.zeros((height, width))
    radius = stroke_width / 2.0
    for s in ink.strokes:
        _paint_polyline(
            alpha, np.ascontiguousarray(s.x), np.ascontiguousarray(s.y), float(radius)
        )
    return alpha


def _band_coverage(size: int, centers: np.ndarray, half: float) -> np.ndarray:
    cov = np.zeros(size)
    edges = np.arange(size)
    for c in centers:
        lo, hi = c - half, c + half
        cov += np.clip(np.minimum(hi, edges + 1.0) - np.maximum(lo, edges), 0.0, 1.0)
    return np.clip(cov, 0.0, 1.0)


def _draw_ruling(img: np.ndarray, ruling: Ruling) -> np.ndarray:
    h, w = img.shape[:2]
    color = np.asarray(ruling.rgb) * 255.0
    half = ruling.line_width_px / 2.0
    rows = np.arange(1, int(h / ruling.spacing_px) + 1) * ruling.spacing_px
    cov = _band_coverage(h, rows, half)[:, None, None]
    img = img * (1.0 - cov) + color * cov
    if ruling.kind == "grids":
        cols = np.arange(1, int(w / ruling.spacing_px) + 1) * ruling.spacing_px
        cov = _band_coverage(w, cols, half)[None, :, None]
        img = img * (1.0 - cov) + color * cov
    return img


def draw_strokes(
    base: RasterImage,
    ink: DigitalInk,
    stroke_width: float = 2.0,
    rgb: tuple[float, float, float] = (0.0, 0.0, 0.0),
) -> RasterImage:
    """Paint ``ink`` (image pixel coordinates) over an existing image."""
    alpha = _ink_alpha(ink, base.height, base.width, stroke_width)[..., None]
    out = base.pixels.astype(np.float64) * (1.0 - alpha) + np.asarray(rgb) * 255.0 * alpha
    return RasterImage(np.clip(np.rint(out), 0, 255).astype(np.uint8))


def render(ink: DigitalInk, m: int, spec: AugmentationSpec) -> RasterImage:
    """Render a canvas-fitted ink onto an m x m image per ``spec``.

    The caller applies ``spec.rotation_rad`` to the ink (and re-fits)
    before rendering; this function only paints. Layer order: background,
    ruling, strokes, Gaussian noise, box blur.
    """
    m = int(m)
    if m < 8:
        raise ValidationError(f"m must be at least 8, got {m}")
    img = np.empty((m, m, 3), np.float64)
    img[:] = np.asarray(spec.background_rgb) * 255.0
    if spec.ruling is not None:
        img = _draw_ruling(img, spec.ruling)
    alpha = _ink_alpha(ink, m, m, spec.stroke_width_px)[..., None]
    img = img * (1.0 - alpha) + np.asarray(spec.stroke_rgb) * 255.0 * alpha
    if spec.gaussian_noise_std is not None:
        rng = np.random.default_rng(spec.rng_seed)
        img = img + rng.normal(0.0, spec.gaussian_noise_std, img.shape)
    out = np.clip(np.rint(img), 0, 255).astype(np.uint8)
    if spec.box_blur_radius_px > 0:
        pil = Image.fromarray(out).filter(ImageFilter.BoxBlur(spec.box_blur_radius_px))
        out = np.asarray(pil, dtype=np.uint8)
    return RasterImage(out)


def fit_image(img: RasterImage, m: int) -> tuple[RasterImage, CanvasTransform]:
    """Scale, center, and pad an image in black to m x m.

    Aspect-preserving: the larger side maps to exactly m. Returns the
    transform from original pixel coordinates to canvas coordinates.
    """
    m = int(m)
    if m < 1:
        raise ValidationError(f"canvas side must be positive, got {m}")
    w, h = img.width, img.height
    if w < 1 or h < 1:
        raise ValidationError("cannot fit a zero-dimension image")
    s = m / max(w, h)
    cw = max(1, int(s * w + 0.5))
    ch = max(1, int(s * h + 0.5))
    if (cw, ch) == (w, h):
        content = img.pixels
    else:
        content = np.asarray(
            Image.fromarray(img.pixels).resize((cw, ch), Image.BILINEAR), dtype=np.uint8
        )
    canvas = np.zeros((m, m, 3), np.uint8)
    ox = (m - cw) // 2
    oy = (m - ch) // 2
    canvas[oy : oy + ch, ox : ox + cw] = content
    return RasterImage(canvas), CanvasTransform(s, float(ox), float(oy), m)


def load_png(path) -> RasterImage:
    with Image.open(path) as im:
        return RasterImage(np.asarray(im.convert("RGB"), dtype=np.uint8))


def save_png(img: RasterImage, path) -> None:
    Image.fromarray(img.pixels).save(path, format="PNG")


_KV_FIELDS = (
    "rotation_rad",
    "stroke_rgb",
    "background_rgb",
    "stroke_width_px",
    "ruling",
    "ruling_line_width_px",
    "ruling_spacing_px",
    "ruling_rgb",
    "gaussian_noise_std",
    "box_blur_radius_px",
    "rng_seed",
)


def _fmt_rgb(rgb: tuple[float, float, float]) -> str:
    return ",".join(repr(c) for c in rgb)


def _parse_rgb(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise ValidationError(f"expected r,g,b triple, got {text!r}")
    return tuple(float(p) for p in parts)


def spec_to_kv(spec: AugmentationSpec) -> str:
    """Serialize a spec as the flat key-value fixture format."""
    lines = [
        f"rotation_rad={spec.rotation_rad!r}",
        f"stroke_rgb={_fmt_rgb(spec.stroke_rgb)}",
        f"background_rgb={_fmt_rgb(spec.background_rgb)}",
        f"stroke_width_px={spec.stroke_width_px!r}",
        f"ruling={spec.ruling.kind if spec.ruling else 'none'}",
    ]
    if spec.ruling is not None:
        lines += [
            f"ruling_line_width_px={spec.ruling.line_width_px!r}",
            f"ruling_spacing_px={spec.ruling.spacing_px!r}",
            f"ruling_rgb={_fmt_rgb(spec.ruling.rgb)}",
        ]
    noise = "none" if spec.gaussian_noise_std is None else repr(spec.gaussian_noise_std)
    lines += [
        f"gaussian_noise_std={noise}",
        f"box_blur_radius_px={spec.box_blur_radius_px!r}",
        f"rng_seed={spec.rng_seed}",
    ]
    return "\n".join(lines) + "\n"


def spec_from_kv(text: str) -> AugmentationSpec:
    """Parse the flat key-value format written by :func:`spec_to_kv`."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValidationError(f"line {lineno}: expected key=value, got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        if key not in _KV_FIELDS:
            raise ValidationError(f"line {lineno}: unknown augmentation key {key!r}")
        values[key] = val.strip()
    try:
        ruling = None
        kind = values.get("ruling", "none")
        if kind != "none":
            ruling = Ruling(
                kind,
                float(values["ruling_line_width_px"]),
                float(values["ruling_spacing_px"]),
                _parse_rgb(values["ruling_rgb"]),
            )
        noise_txt = values.get("gaussian_noise_std", "none")
        return AugmentationSpec(
            rotation_rad=float(values.get("rotation_rad", 0.0)),
            stroke_rgb=_parse_rgb(values["stroke_rgb"]) if "stroke_rgb" in values else (0.0, 0.0, 0.0),
            background_rgb=_parse_rgb(values["background_rgb"])
            if "background_rgb" in values
            else (1.0, 1.0, 1.0),
            stroke_width_px=float(values.get("stroke_width_px", 2.0)),
            ruling=ruling,
            gaussian_noise_std=None if noise_txt == "none" else float(noise_txt),
            box_blur_radius_px=float(values.get("box_blur_radius_px", 0.0)),
            rng_seed=int(values.get("rng_seed", 0)),
        )
    except KeyError as exc:
        raise ValidationError(f"missing augmentation key {exc.args[0]!r}") from None
    except ValueError as exc:
        raise ValidationError(f"bad augmentation value: {exc}") from None


def plain_spec(stroke_width: float = 2.0, seed: int = 0) -> AugmentationSpec:
    """Black-on-white spec with no augmentation, for fixtures and the CLI default."""
    return AugmentationSpec(stroke_width_px=stroke_width, rng_seed=seed)
