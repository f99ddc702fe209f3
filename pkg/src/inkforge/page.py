"""Full-page derendering: word boxes in, per-word backend, paste-back out.

Each kept word box is cropped, fitted to the model canvas, sent through a
pluggable backend, and the returned canvas-space ink is mapped back into
page coordinates through the inverse transform. Backends are isolated: a
failing backend skips its word, never the page. The word-box JSON format
and the subprocess backend protocol are documented under docs/formats/.
"""

from __future__ import annotations

import json
import math
import shlex
import subprocess
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence, runtime_checkable

import numpy as np

from .errors import BackendError, ValidationError
from .geometry import binarize, derender_word
from .ink import BoundingBox, CanvasTransform, DigitalInk, Stroke, transform
from .raster import RasterImage, fit_image, load_png, save_png
from .tokens import TaskPrompt, Task, Vocabulary, build_prompt, decode_tokens, parse_tokens

MIN_BOX_SIDE_PX = 25.0
ASPECT_RATIO_RANGE = (0.5, 4.0)


@dataclass(frozen=True)
class WordBox:
    """A word bounding box in page pixels, from OCR or annotations."""

    box: BoundingBox
    label: str | None = None
    rotation: float | None = None

    def __post_init__(self):
        if self.label is not None and not self.label:
            raise ValidationError("word label must be non-empty when present")
        if self.rotation is not None and not math.isfinite(self.rotation):
            raise ValidationError("word rotation must be finite")


@dataclass(frozen=True)
class BoxDecision:
    keep: bool
    reason: str | None
    box: BoundingBox  # clamped to the page


def filter_box(wb: WordBox, page_width: int, page_height: int) -> BoxDecision:
    """Keep a box iff 0.5 < w/h < 4.0 and both sides are at least 25 px.

    The box is clamped to the page first; the skip reason names the rule
    that failed (aspect ratio checked before minimum side).
    """
    b = wb.box
    clamped = BoundingBox(
        min(max(b.x_min, 0.0), float(page_width)),
        min(max(b.y_min, 0.0), float(page_height)),
        min(max(b.x_max, 0.0), float(page_width)),
        min(max(b.y_max, 0.0), float(page_height)),
    )
    w, h = clamped.width, clamped.height
    if w <= 0 or h <= 0:
        return BoxDecision(False, "empty after clamping to page", clamped)
    ratio = w / h
    lo, hi = ASPECT_RATIO_RANGE
    if not lo < ratio < hi:
        return BoxDecision(False, f"aspect ratio {ratio:.2f} outside ({lo}, {hi})", clamped)
    if min(w, h) < MIN_BOX_SIDE_PX:
        return BoxDecision(
            False, f"side {min(w, h):.0f} px below minimum {MIN_BOX_SIDE_PX:.0f} px", clamped
        )
    return BoxDecision(True, None, clamped)


@runtime_checkable
class DerenderBackend(Protocol):
    """A word derenderer: m x m image (and optional label) to canvas-space ink.

    Backends may expose ``take_diagnostics() -> tuple[str, ...]`` to hand
    per-call notes to the pipeline records.
    """

    accepts_text_prompt: bool

    def derender(self, image: RasterImage, label: str | None = None) -> DigitalInk: ...


class GeoBackend:
    """The classical binarize/thin/trace baseline. Ignores labels.

    Canvas fitting pads images with exact-black bands; those borders are
    trimmed before tracing so they are not mistaken for ink.
    """

    accepts_text_prompt = False

    def derender(self, image: RasterImage, label: str | None = None) -> DigitalInk:
        px = image.pixels
        nonblack = np.any(px != 0, axis=2)
        rows = np.where(nonblack.any(axis=1))[0]
        cols = np.where(nonblack.any(axis=0))[0]
        if rows.size == 0:
            return DigitalInk()
        r0, r1 = int(rows[0]), int(rows[-1]) + 1
        c0, c1 = int(cols[0]), int(cols[-1]) + 1
        ink = derender_word(RasterImage(px[r0:r1, c0:c1]))
        if c0 == 0 and r0 == 0:
            return ink
        return transform(ink, CanvasTransform(1.0, float(c0), float(r0), image.width))


class EchoBackend:
    """Returns a fixed ink; test and plumbing aid."""

    accepts_text_prompt = False

    def __init__(self, ink: DigitalInk):
        self.ink = ink

    def derender(self, image: RasterImage, label: str | None = None) -> DigitalInk:
        return self.ink


class SubprocessBackend:
    """Runs an external derenderer per the file protocol.

    For each word the pipeline writes ``word.png`` and ``request.txt``
    (prompt= and label= lines) into a fresh temp directory and invokes
    ``argv + [word.png, request.txt, response.tokens]``. The response is a
    token-stream text file, decoded tolerantly; decode diagnostics surface
    in the page records. See docs/formats/backend-protocol.md.
    """

    accepts_text_prompt = True

    def __init__(self, argv: Sequence[str] | str, vocab: Vocabulary | None = None, timeout: float = 120.0):
        self.argv = shlex.split(argv) if isinstance(argv, str) else list(argv)
        if not self.argv:
            raise ValidationError("subprocess backend needs a command")
        self.vocab = vocab or Vocabulary()
        self.timeout = timeout
        self._diagnostics: tuple[str, ...] = ()

    def take_diagnostics(self) -> tuple[str, ...]:
        out, self._diagnostics = self._diagnostics, ()
        return out

    def derender(self, image: RasterImage, label: str | None = None) -> DigitalInk:
        prompt = build_prompt(
            TaskPrompt(Task.DERENDER_WITH_TEXT, label) if label else TaskPrompt(Task.VANILLA_DERENDER)
        )
        with tempfile.TemporaryDirectory(prefix="inkforge-backend-") as tmp:
            tmp = Path(tmp)
            image_path = tmp / "word.png"
            request_path = tmp / "request.txt"
            response_path = tmp / "response.tokens"
            save_png(image, image_path)
            request_path.write_text(f"prompt={prompt}\nlabel={label or ''}\n", encoding="utf-8")
            try:
                proc = subprocess.run(
                    self.argv + [str(image_path), str(request_path), str(response_path)],
                    capture_output=True,
                    timeout=self.timeout,
                )
            except (OSError, subprocess.TimeoutExpired) as exc:
                raise BackendError(f"backend launch failed: {exc}") from None
            if proc.returncode != 0:
                err = proc.stderr.decode("utf-8", "replace").strip()[:400]
                raise BackendError(f"backend exited with {proc.returncode}: {err}")
            if not response_path.exists():
                raise BackendError("backend wrote no response file")
            text = response_path.read_text(encoding="utf-8")
        result = decode_tokens(parse_tokens(text, self.vocab), self.vocab)
        self._diagnostics = result.diagnostics
        return result.ink


@dataclass(frozen=True)
class WordRecord:
    box: WordBox
    transform: CanvasTransform | None
    skipped: bool
    reason: str | None
    diagnostics: tuple[str, ...]
    stroke_count: int = 0


@dataclass(frozen=True)
class PageResult:
    """Page-space ink plus one record per input word box."""

    ink: DigitalInk
    records: tuple[WordRecord, ...]


def _rotate_points(xy: np.ndarray, angle: float, center: tuple[float, float]) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    d = xy - np.asarray(center)
    return np.column_stack(
        [center[0] + c * d[:, 0] - s * d[:, 1], center[1] + s * d[:, 0] + c * d[:, 1]]
    )


def _crop_region(page: np.ndarray, box: BoundingBox, rotation: float | None):
    ix0, iy0 = int(math.floor(box.x_min)), int(math.floor(box.y_min))
    ix1 = max(int(math.ceil(box.x_max)), ix0 + 1)
    iy1 = max(int(math.ceil(box.y_max)), iy0 + 1)
    ix1 = min(ix1, page.shape[1])
    iy1 = min(iy1, page.shape[0])
    if not rotation:
        return page[iy0:iy1, ix0:ix1], ix0, iy0
    # Sample the rotated rectangle (bilinear, edge-clamped).
    h, w = iy1 - iy0, ix1 - ix0
    cx, cy = (ix0 + ix1) / 2.0, (iy0 + iy1) / 2.0
    ys, xs = np.mgrid[0:h, 0:w]
    px = ix0 + xs + 0.5
    py = iy0 + ys + 0.5
    cos_a, sin_a = math.cos(rotation), math.sin(rotation)
    dx = px - cx
    dy = py - cy
    sx = np.clip(cx + cos_a * dx - sin_a * dy - 0.5, 0, page.shape[1] - 1)
    sy = np.clip(cy + sin_a * dx + cos_a * dy - 0.5, 0, page.shape[0] - 1)
    x0 = np.floor(sx).astype(np.int64)
    y0 = np.floor(sy).astype(np.int64)
    x1 = np.minimum(x0 + 1, page.shape[1] - 1)
    y1 = np.minimum(y0 + 1, page.shape[0] - 1)
    fx = (sx - x0)[..., None]
    fy = (sy - y0)[..., None]
    pf = page.astype(np.float64)
    top = pf[y0, x0] * (1 - fx) + pf[y0, x1] * fx
    bot = pf[y1, x0] * (1 - fx) + pf[y1, x1] * fx
    out = top * (1 - fy) + bot * fy
    return np.clip(np.rint(out), 0, 255).astype(np.uint8), ix0, iy0


def _clip_to_canvas(ink: DigitalInk, m: int) -> tuple[DigitalInk, int]:
    clipped = 0
    strokes = []
    for s in ink.strokes:
        xy = s.xy
        out = np.clip(xy, 0.0, float(m))
        clipped += int(np.count_nonzero(np.any(out != xy, axis=1)))
        strokes.append(Stroke(np.column_stack([out, s.t])))
    return DigitalInk(strokes, ink.metadata), clipped


def _derender_one(
    page_px: np.ndarray, wb: WordBox, decision: BoxDecision, backend: DerenderBackend, m: int
) -> tuple[WordRecord, list[Stroke]]:
    crop, ix0, iy0 = _crop_region(page_px, decision.box, wb.rotation)
    fitted, fit_tfm = fit_image(RasterImage(crop), m)
    word_tfm = fit_tfm.compose(CanvasTransform(1.0, -float(ix0), -float(iy0), m))
    diagnostics: list[str] = []
    label = wb.label if backend.accepts_text_prompt else None
    ink_c = backend.derender(fitted, label)
    diagnostics.extend(getattr(backend, "take_diagnostics", tuple)())
    if ink_c.is_empty and label is not None:
        # one retry in vanilla mode when the text-conditioned pass came back empty
        diagnostics.append("empty backend output; retried without label")
        ink_c = backend.derender(fitted, None)
        diagnostics.extend(getattr(backend, "take_diagnostics", tuple)())
    ink_c, n_clipped = _clip_to_canvas(ink_c, m)
    if n_clipped:
        diagnostics.append(f"clipped {n_clipped} points to the canvas")
    inv = word_tfm.inverse()
    strokes = []
    for s in ink_c.strokes:
        xy = inv.apply_xy(s.xy)
        if wb.rotation:
            xy = _rotate_points(xy, wb.rotation, decision.box.center)
        strokes.append(Stroke(np.column_stack([xy, s.t])))
    return WordRecord(wb, word_tfm, False, None, tuple(diagnostics), len(strokes)), strokes


def derender_page(
    page: RasterImage,
    boxes: Sequence[WordBox],
    backend: DerenderBackend,
    m: int = 224,
    jobs: int = 1,
) -> PageResult:
    """Derender every kept word box and paste the inks back into page space.

    Output stroke order follows the input box order. Backend exceptions
    skip the word with reason ``backend error: ...`` and the page keeps
    going.
    """
    m = int(m)
    if m < 8:
        raise ValidationError(f"m must be at least 8, got {m}")
    page_px = page.pixels
    decisions = [filter_box(wb, page.width, page.height) for wb in boxes]

    def work(i: int):
        wb, decision = boxes[i], decisions[i]
        try:
            return _derender_one(page_px, wb, decision, backend, m)
        except Exception as exc:  # backend isolation
            return WordRecord(wb, None, True, f"backend error: {exc}", ()), []

    kept = [i for i, d in enumerate(decisions) if d.keep]
    results: dict[int, tuple[WordRecord, list[Stroke]]] = {}
    if jobs > 1 and len(kept) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            for i, res in zip(kept, pool.map(work, kept)):
                results[i] = res
    else:
        for i in kept:
            results[i] = work(i)

    records: list[WordRecord] = []
    strokes: list[Stroke] = []
    for i, (wb, decision) in enumerate(zip(boxes, decisions)):
        if not decision.keep:
            records.append(WordRecord(wb, None, True, decision.reason, ()))
            continue
        record, word_strokes = results[i]
        records.append(record)
        strokes.extend(word_strokes)
    return PageResult(DigitalInk(strokes), tuple(records))


def load_wordboxes(path) -> list[WordBox]:
    """Read the word-box JSON array; schema errors carry the JSON path."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"$: invalid JSON: {exc}") from None
    if not isinstance(data, list):
        raise ValidationError("$: expected an array of word boxes")
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
        try:
            bb = BoundingBox(*map(float, box))
        except ValueError as exc:
            raise ValidationError(f"$[{i}].box: {exc}") from None
        label = item.get("label")
        if label is not None and (not isinstance(label, str) or not label):
            raise ValidationError(f"$[{i}].label: expected a non-empty string")
        rotation = item.get("rotation")
        if rotation is not None and not isinstance(rotation, (int, float)):
            raise ValidationError(f"$[{i}].rotation: expected a number")
        unknown = set(item) - {"box", "label", "rotation"}
        if unknown:
            raise ValidationError(f"$[{i}]: unknown keys {sorted(unknown)}")
        out.append(WordBox(bb, label, None if rotation is None else float(rotation)))
    return out


def segment_words(page: RasterImage, pad: int = 2) -> list[WordBox]:
    """Projection-profile word segmenter for demo pages.

    Splits foreground rows into line bands, then each band into words at
    column gaps wider than 40% of the band height. Demo quality only.
    """
    fg = binarize(page).mask
    row_any = fg.any(axis=1)
    boxes: list[WordBox] = []
    r = 0
    h, w = fg.shape
    while r < h:
        if not row_any[r]:
            r += 1
            continue
        r1 = r
        while r1 < h and row_any[r1]:
            r1 += 1
        band = fg[r:r1]
        gap = max(3, int((r1 - r) * 0.4))
        col_any = band.any(axis=0)
        c = 0
        while c < w:
            if not col_any[c]:
                c += 1
                continue
            c1 = c
            empty = 0
            end = c
            while c1 < w:
                if col_any[c1]:
                    empty = 0
                    end = c1
                else:
                    empty += 1
                    if empty >= gap:
                        break
                c1 += 1
            rows = np.argwhere(band[:, c : end + 1].any(axis=1))
            y0 = r + int(rows.min())
            y1 = r + int(rows.max()) + 1
            boxes.append(
                WordBox(
                    BoundingBox(
                        max(0, c - pad),
                        max(0, y0 - pad),
                        min(w, end + 1 + pad),
                        min(h, y1 + pad),
                    )
                )
            )
            c = c1 + 1
        r = r1
    return boxes


def derender_page_file(
    page_path,
    boxes_path,
    backend: DerenderBackend,
    m: int = 224,
    jobs: int = 1,
) -> PageResult:
    """Convenience wrapper used by the CLI: file paths in, PageResult out."""
    page = load_png(page_path)
    boxes = load_wordboxes(boxes_path) if boxes_path else segment_words(page)
    return derender_page(page, boxes, backend, m=m, jobs=jobs)
