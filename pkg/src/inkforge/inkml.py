"""InkML subset reader and writer.

Supports the trace/annotation subset documented in
docs/formats/inkml-subset.md: a root <ink> element whose strokes are
<trace> elements ("x y" or "x y t" samples, comma between points,
whitespace between channels), optional <annotation type="key">value
</annotation> metadata, and multi-ink documents expressed as one
<traceGroup> per ink. Brush, canvas, and context elements are rejected.
Serialization is deterministic: fixed element order, sorted annotation
keys, plain decimal numbers with up to 6 fractional digits.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass
from typing import Iterable, Mapping
from xml.sax.saxutils import escape, quoteattr

import numpy as np

from .errors import InkmlError
from .ink import DigitalInk, Stroke
from .normalize import DEFAULT_RESAMPLE_PERIOD, hallucinate_time

INKML_NAMESPACE = "http://www.w3.org/2003/InkML"

_ALLOWED_ELEMENTS = {"ink", "traceGroup", "trace", "annotation"}


@dataclass(frozen=True, eq=False, init=False)
class InkmlDocument:
    """An ordered list of inks; each ink's metadata doubles as its annotations."""

    inks: tuple[DigitalInk, ...]

    def __init__(self, inks: Iterable[DigitalInk]):
        inks = tuple(inks)
        for i in inks:
            if not isinstance(i, DigitalInk):
                raise TypeError(f"expected DigitalInk, got {type(i).__name__}")
        object.__setattr__(self, "inks", inks)

    @property
    def annotations(self) -> tuple[Mapping[str, str], ...]:
        return tuple(dict(i.metadata) for i in self.inks)

    def __eq__(self, other) -> bool:
        if not isinstance(other, InkmlDocument):
            return NotImplemented
        return self.inks == other.inks


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _parse_trace(el: ET.Element, index: int) -> np.ndarray:
    text = (el.text or "").strip()
    if not text:
        raise InkmlError(f"trace {index}: empty trace")
    points = []
    width = None
    for raw in text.split(","):
        toks = raw.split()
        if len(toks) < 2:
            raise InkmlError(f"trace {index}: point needs at least X and Y channels, got {raw.strip()!r}")
        if len(toks) > 3:
            raise InkmlError(f"trace {index}: too many channels in point {raw.strip()!r}")
        if width is None:
            width = len(toks)
        elif len(toks) != width:
            raise InkmlError(f"trace {index}: inconsistent channel count")
        try:
            vals = [float(tok) for tok in toks]
        except ValueError:
            raise InkmlError(f"trace {index}: non-numeric sample in {raw.strip()!r}") from None
        if not all(np.isfinite(vals)):
            raise InkmlError(f"trace {index}: non-finite sample in {raw.strip()!r}")
        points.append(vals)
    return np.asarray(points, dtype=np.float64)


def _parse_ink_element(el: ET.Element, trace_offset: int) -> tuple[DigitalInk, int]:
    metadata: dict[str, str] = {}
    arrays: list[np.ndarray] = []
    index = trace_offset
    for child in el:
        tag = _local(child.tag)
        if tag == "annotation":
            key = child.get("type")
            if key is None:
                raise InkmlError("annotation element missing 'type' attribute")
            metadata[key] = child.text or ""
        elif tag == "trace":
            arrays.append(_parse_trace(child, index))
            index += 1
    widths = {a.shape[1] for a in arrays}
    if len(widths) > 1:
        raise InkmlError("all traces of an ink must agree on having a T channel")
    try:
        strokes = [Stroke(a) for a in arrays]
    except ValueError as exc:
        raise InkmlError(str(exc)) from None
    ink = DigitalInk(strokes, metadata)
    if arrays and widths == {2}:
        ink = hallucinate_time(ink, DEFAULT_RESAMPLE_PERIOD)
    return ink, index


def parse_inkml(text: str) -> InkmlDocument:
    """Parse an InkML subset document.

    Each <trace> becomes one stroke; traces without a T channel get
    synthetic 20 ms timestamps. Errors carry the line/column for malformed
    XML and the trace index for bad samples.
    """
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        line, col = exc.position
        raise InkmlError(f"malformed XML at line {line}, column {col}: {exc.msg}") from None
    if _local(root.tag) != "ink":
        raise InkmlError(f"root element must be <ink>, got <{_local(root.tag)}>")
    for el in root.iter():
        tag = _local(el.tag)
        if tag not in _ALLOWED_ELEMENTS:
            raise InkmlError(
                f"unsupported element <{tag}>: only the trace/annotation subset is accepted"
            )
    groups = [el for el in root if _local(el.tag) == "traceGroup"]
    root_traces = [el for el in root if _local(el.tag) == "trace"]
    if groups and root_traces:
        raise InkmlError("mixing root-level traces with traceGroups is not supported")
    if groups:
        inks = []
        offset = 0
        for g in groups:
            ink, offset = _parse_ink_element(g, offset)
            inks.append(ink)
        return InkmlDocument(inks)
    ink, _ = _parse_ink_element(root, 0)
    return InkmlDocument([ink])


def _format_number(v: float) -> str:
    if not np.isfinite(v):
        raise InkmlError(f"non-finite coordinate: {v}")
    s = f"{v:.6f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def _trace_text(stroke: Stroke) -> str:
    return ", ".join(
        f"{_format_number(x)} {_format_number(y)} {_format_number(t)}" for x, y, t in stroke.array
    )


def _emit_ink_body(ink: DigitalInk, out: list[str], indent: str) -> None:
    for key in sorted(ink.metadata):
        out.append(
            f"{indent}<annotation type={quoteattr(key)}>{escape(ink.metadata[key])}</annotation>"
        )
    for stroke in ink.strokes:
        out.append(f"{indent}<trace>{_trace_text(stroke)}</trace>")


def serialize_inkml(doc: InkmlDocument | DigitalInk) -> str:
    """Serialize to the InkML subset; byte-identical across runs.

    A single-ink document keeps its traces at the root; multi-ink
    documents get one <traceGroup> per ink. Timestamps are always written.
    """
    if isinstance(doc, DigitalInk):
        doc = InkmlDocument([doc])
    out = ['<?xml version="1.0" encoding="UTF-8"?>']
    if len(doc.inks) <= 1:
        ink = doc.inks[0] if doc.inks else DigitalInk()
        if ink.is_empty and not ink.metadata:
            out.append(f'<ink xmlns="{INKML_NAMESPACE}"/>')
        else:
            out.append(f'<ink xmlns="{INKML_NAMESPACE}">')
            _emit_ink_body(ink, out, "  ")
            out.append("</ink>")
    else:
        out.append(f'<ink xmlns="{INKML_NAMESPACE}">')
        for ink in doc.inks:
            out.append("  <traceGroup>")
            _emit_ink_body(ink, out, "    ")
            out.append("  </traceGroup>")
        out.append("</ink>")
    return "\n".join(out) + "\n"


def load_inkml(path) -> InkmlDocument:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_inkml(fh.read())


def save_inkml(doc: InkmlDocument | DigitalInk, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_inkml(doc))
