"""Ink/text token vocabulary, encoder, tolerant decoder, and task prompts.

A vocabulary over canvas parameter n has 2n + 3 ink tokens: a
stroke-begin marker plus n + 1 x values and n + 1 y values in separate
tables. Text characters occupy a disjoint id range after the ink block.
A well-formed ink stream matches the grammar ``( b (x y)+ )*``. The wire
text format and the canonical prompt strings are documented in
docs/formats/tokens.md.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .errors import TokenError
from .ink import DigitalInk, Stroke
from .normalize import DEFAULT_RESAMPLE_PERIOD, hallucinate_time


class Task(enum.Enum):
    VANILLA_DERENDER = "vanilla_derender"
    DERENDER_WITH_TEXT = "derender_with_text"
    RECOGNIZE_SYN = "recognize_syn"
    RECOGNIZE_REAL = "recognize_real"
    RECOGNIZE_AND_DERENDER = "recognize_and_derender"


DERENDER_TASKS = frozenset({Task.VANILLA_DERENDER, Task.DERENDER_WITH_TEXT})
RECOGNITION_TASKS = frozenset({Task.RECOGNIZE_SYN, Task.RECOGNIZE_REAL})

# Canonical prompt strings; fixed here so golden fixtures stay stable.
PROMPTS: dict[Task, str] = {
    Task.VANILLA_DERENDER: "Derender the ink.",
    Task.DERENDER_WITH_TEXT: "Derender the ink: {text}",
    Task.RECOGNIZE_SYN: "Recognize the text.",
    Task.RECOGNIZE_REAL: "Recognize the text.",
    Task.RECOGNIZE_AND_DERENDER: "Recognize and derender.",
}

# Printable ASCII plus the printable Latin-1 supplement.
DEFAULT_TEXT_SYMBOLS: tuple[str, ...] = tuple(chr(c) for c in range(0x20, 0x7F)) + tuple(
    chr(c) for c in range(0xA0, 0x100)
)


@dataclass(frozen=True, init=False)
class Vocabulary:
    """Token id layout: [b][x 0..n][y 0..n][text symbols...]."""

    n: int
    text_symbols: tuple[str, ...]

    def __init__(self, n: int = 224, text_symbols: Iterable[str] = DEFAULT_TEXT_SYMBOLS):
        n = int(n)
        if n < 1:
            raise ValueError(f"n must be >= 1, got {n}")
        symbols = tuple(text_symbols)
        if any(not isinstance(c, str) or len(c) != 1 for c in symbols):
            raise ValueError("text symbols must be single characters")
        if len(set(symbols)) != len(symbols):
            raise ValueError("text symbols must be unique")
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "text_symbols", symbols)
        object.__setattr__(self, "_text_ids", {c: 2 * n + 3 + i for i, c in enumerate(symbols)})

    @property
    def begin_token(self) -> int:
        return 0

    @property
    def ink_token_count(self) -> int:
        return 2 * self.n + 3

    @property
    def size(self) -> int:
        return self.ink_token_count + len(self.text_symbols)

    def x_token(self, v: int) -> int:
        if not 0 <= v <= self.n:
            raise TokenError(f"x value {v} outside [0, {self.n}]")
        return 1 + v

    def y_token(self, v: int) -> int:
        if not 0 <= v <= self.n:
            raise TokenError(f"y value {v} outside [0, {self.n}]")
        return self.n + 2 + v

    def text_token(self, ch: str) -> int:
        try:
            return self._text_ids[ch]
        except KeyError:
            raise TokenError(f"character {ch!r} not in the text vocabulary") from None

    def encode_text(self, text: str) -> list[int]:
        return [self.text_token(c) for c in text]

    def describe(self, token_id: int):
        """("b",) | ("x", v) | ("y", v) | ("text", ch) | None for foreign ids."""
        n = self.n
        if token_id == 0:
            return ("b",)
        if 1 <= token_id <= n + 1:
            return ("x", token_id - 1)
        if n + 2 <= token_id <= 2 * n + 2:
            return ("y", token_id - n - 2)
        if 2 * n + 3 <= token_id < self.size:
            return ("text", self.text_symbols[token_id - 2 * n - 3])
        return None

    def token_text(self, token_id: int) -> str:
        kind = self.describe(token_id)
        if kind is None:
            raise TokenError(f"token id {token_id} outside vocabulary")
        tag = kind[0]
        if tag == "b":
            return "b"
        if tag == "x":
            return f"x{kind[1]}"
        if tag == "y":
            return f"y{kind[1]}"
        return f"t{ord(kind[1]):x}"


@dataclass(frozen=True, init=False)
class TokenSeq:
    """An immutable token id sequence."""

    tokens: tuple[int, ...]

    def __init__(self, tokens: Iterable[int] = ()):
        object.__setattr__(self, "tokens", tuple(int(t) for t in tokens))

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self) -> Iterator[int]:
        return iter(self.tokens)

    def __getitem__(self, i):
        return self.tokens[i]

    def __add__(self, other: "TokenSeq") -> "TokenSeq":
        return TokenSeq(self.tokens + tuple(other))


@dataclass(frozen=True)
class TaskPrompt:
    """Task selector and, for the text-conditioned task, its payload."""

    task: Task
    text_payload: str | None = None

    def __post_init__(self):
        if self.task is Task.DERENDER_WITH_TEXT:
            if self.text_payload is None:
                raise ValueError("derender_with_text requires a text payload")
        elif self.text_payload is not None:
            raise ValueError(f"task {self.task.value} takes no text payload")


def build_prompt(prompt: TaskPrompt) -> str:
    """Canonical prompt string for a task."""
    if prompt.task is Task.DERENDER_WITH_TEXT:
        return PROMPTS[Task.DERENDER_WITH_TEXT].format(text=prompt.text_payload)
    return PROMPTS[prompt.task]


def encode_ink(ink: DigitalInk, vocab: Vocabulary) -> TokenSeq:
    """Tokenize a canvas-fitted ink.

    Per stroke: the begin marker, then x/y per point, rounded half-up to
    the nearest integer and clamped to [0, n]. Timestamps are dropped.
    """
    n = vocab.n
    toks: list[int] = []
    for s in ink.strokes:
        xy = s.xy
        if bool(np.any(xy < -0.5)) or bool(np.any(xy > n + 0.5)):
            raise TokenError(
                f"ink not normalized: coordinates outside [-0.5, {n} + 0.5] "
                f"(bounds {xy.min():.3f}..{xy.max():.3f})"
            )
        q = np.clip(np.floor(xy + 0.5).astype(np.int64), 0, n)
        toks.append(0)
        for qx, qy in q:
            toks.append(1 + int(qx))
            toks.append(n + 2 + int(qy))
    return TokenSeq(toks)


@dataclass(frozen=True)
class DecodeResult:
    ink: DigitalInk
    diagnostics: tuple[str, ...]


def decode_tokens(
    seq: TokenSeq | Iterable[int],
    vocab: Vocabulary,
    *,
    strict: bool = False,
    period: float = DEFAULT_RESAMPLE_PERIOD,
) -> DecodeResult:
    """Parse a token stream into an ink, with diagnostics.

    Tolerant mode (default) skips malformed fragments — dangling x,
    y without x, coordinates before any stroke begin, text or foreign
    tokens inside the ink region — and never fails on arbitrary input.
    Strict mode raises TokenError at the first violation, naming the
    token index. Decoded inks get synthetic timestamps at ``period``.
    """
    diags: list[str] = []

    def problem(idx: int, msg: str) -> None:
        if strict:
            raise TokenError(f"token {idx}: {msg}")
        diags.append(f"token {idx}: {msg}")

    strokes: list[list[tuple[int, int]]] = []
    cur: list[tuple[int, int]] | None = None
    pending_x: int | None = None
    pending_idx = -1

    for i, tid in enumerate(seq):
        kind = vocab.describe(int(tid))
        if kind is None:
            problem(i, f"unknown token id {int(tid)}")
            continue
        tag = kind[0]
        if tag == "b":
            if pending_x is not None:
                problem(pending_idx, "dangling x coordinate dropped")
                pending_x = None
            if cur:
                strokes.append(cur)
            cur = []
        elif tag == "x":
            if cur is None:
                problem(i, "coordinate before any stroke begin")
                continue
            if pending_x is not None:
                problem(pending_idx, "dangling x coordinate dropped")
            pending_x = kind[1]
            pending_idx = i
        elif tag == "y":
            if cur is None:
                problem(i, "coordinate before any stroke begin")
                continue
            if pending_x is None:
                problem(i, "y coordinate without a preceding x")
                continue
            cur.append((pending_x, kind[1]))
            pending_x = None
        else:
            problem(i, f"text token {kind[1]!r} inside ink stream")
    if pending_x is not None:
        problem(pending_idx, "dangling x coordinate dropped")
    if cur:
        strokes.append(cur)

    ink = DigitalInk([Stroke(np.asarray(pts, dtype=np.float64)) for pts in strokes])
    ink = hallucinate_time(ink, period)
    return DecodeResult(ink, tuple(diags))


def decode_ink(
    seq: TokenSeq | Iterable[int],
    vocab: Vocabulary,
    *,
    strict: bool = False,
    period: float = DEFAULT_RESAMPLE_PERIOD,
) -> DigitalInk:
    return decode_tokens(seq, vocab, strict=strict, period=period).ink


def build_target(
    task: Task | TaskPrompt,
    vocab: Vocabulary,
    *,
    ink: TokenSeq | None = None,
    text: str | None = None,
) -> TokenSeq:
    """Assemble the target sequence for a task.

    Derender tasks take ink tokens only, recognition tasks text only, and
    the hybrid task concatenates text then ink.
    """
    if isinstance(task, TaskPrompt):
        task = task.task
    if task in DERENDER_TASKS:
        if ink is None:
            raise TokenError(f"{task.value} target needs ink tokens")
        if text:
            raise TokenError(f"{task.value} target takes no text")
        return TokenSeq(ink.tokens)
    if task in RECOGNITION_TASKS:
        if text is None:
            raise TokenError(f"{task.value} target needs text")
        if ink is not None and len(ink):
            raise TokenError(f"{task.value} target takes no ink tokens")
        return TokenSeq(vocab.encode_text(text))
    if text is None or ink is None:
        raise TokenError("recognize_and_derender target needs both text and ink")
    return TokenSeq(tuple(vocab.encode_text(text)) + ink.tokens)


def format_tokens(seq: TokenSeq | Iterable[int], vocab: Vocabulary) -> str:
    """Render a token sequence in the fixture text format (``b x17 y204 ...``)."""
    return " ".join(vocab.token_text(int(t)) for t in seq)


def parse_tokens(text: str, vocab: Vocabulary) -> TokenSeq:
    """Parse the fixture text format. Malformed words raise TokenError."""
    toks: list[int] = []
    for word in text.split():
        if word == "b":
            toks.append(0)
        elif word[0] in "xy" and word[1:].isdigit():
            v = int(word[1:])
            toks.append(vocab.x_token(v) if word[0] == "x" else vocab.y_token(v))
        elif word[0] == "t" and len(word) > 1:
            try:
                ch = chr(int(word[1:], 16))
            except (ValueError, OverflowError):
                raise TokenError(f"malformed token {word!r}") from None
            toks.append(vocab.text_token(ch))
        else:
            raise TokenError(f"malformed token {word!r}")
    return TokenSeq(toks)
