"""Five-task training-example stream.

Two derendering tasks, two recognition tasks, and one hybrid task are
drawn i.i.d. by weight (default 20% each). Synthetic tasks rotate the
source ink by the sampled augmentation angle, fit it to the canvas,
render it, and tokenize the same geometry as the target; the real
recognition task only scales/centers/pads its image. Examples serialize
as PNG plus a flat text record (docs/formats/training-record.md).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Mapping

import numpy as np

from .errors import EmptyInkError, ValidationError
from .ink import DigitalInk
from .normalize import fit_to_canvas, rotate_ink
from .raster import (
    AugmentProbs,
    RasterImage,
    fit_image,
    render,
    sample_augmentation,
    save_png,
)
from .tokens import (
    Task,
    TaskPrompt,
    TokenSeq,
    Vocabulary,
    build_prompt,
    build_target,
    decode_ink,
    encode_ink,
    format_tokens,
)

_SYNTHETIC_TASKS = (
    Task.VANILLA_DERENDER,
    Task.DERENDER_WITH_TEXT,
    Task.RECOGNIZE_SYN,
    Task.RECOGNIZE_AND_DERENDER,
)
_LABELED_TASKS = (
    Task.DERENDER_WITH_TEXT,
    Task.RECOGNIZE_SYN,
    Task.RECOGNIZE_REAL,
    Task.RECOGNIZE_AND_DERENDER,
)


@dataclass(frozen=True)
class Sample:
    """One corpus item: an ink and/or an image, with an optional label."""

    id: str
    ink: DigitalInk | None = None
    image: RasterImage | None = None
    label: str | None = None


@dataclass(frozen=True)
class Sources:
    """Sample pools: ``inks`` feed the synthetic tasks, ``images`` the real one."""

    inks: tuple[Sample, ...] = ()
    images: tuple[Sample, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "inks", tuple(self.inks))
        object.__setattr__(self, "images", tuple(self.images))

    def pool(self, task: Task) -> tuple[Sample, ...]:
        if task is Task.RECOGNIZE_REAL:
            return tuple(s for s in self.images if s.image is not None and s.label)
        if task in _LABELED_TASKS:
            return tuple(s for s in self.inks if s.ink is not None and s.label)
        return tuple(s for s in self.inks if s.ink is not None)


DEFAULT_WEIGHTS: Mapping[Task, float] = {t: 0.2 for t in Task}


@dataclass(frozen=True)
class MixtureSpec:
    """Task weights (non-negative, summing to 1) and the stream seed."""

    weights: Mapping[Task, float] = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))
    rng_seed: int = 0

    def __post_init__(self):
        weights = {Task(k): float(v) for k, v in self.weights.items()}
        if any(v < 0 for v in weights.values()):
            raise ValidationError("mixture weights must be non-negative")
        total = sum(weights.values())
        if abs(total - 1.0) > 1e-9:
            raise ValidationError(f"mixture weights must sum to 1, got {total}")
        object.__setattr__(self, "weights", weights)


@dataclass(frozen=True)
class Provenance:
    source_id: str
    seed: int

    def __str__(self) -> str:
        return f"{self.source_id}#{self.seed}"


@dataclass(frozen=True)
class TrainingExample:
    image: RasterImage
    prompt: str
    target: TokenSeq
    task: Task
    provenance: Provenance


def make_example(
    source: Sample,
    task: Task,
    seed: int,
    *,
    vocab: Vocabulary | None = None,
    m: int = 224,
    probs: AugmentProbs | None = None,
) -> TrainingExample:
    """Materialize one training example.

    Synthetic tasks: rotate -> fit -> render with the seed's sampled
    augmentation; the target tokenizes the identical rotated-and-fitted
    geometry. Real recognition: scale/center/pad only.
    """
    vocab = vocab or Vocabulary()
    if task in _LABELED_TASKS and not source.label:
        raise ValidationError(f"task {task.value} needs a labeled source, got {source.id!r}")
    if task is Task.RECOGNIZE_REAL:
        if source.image is None:
            raise ValidationError(f"task recognize_real needs an image source, got {source.id!r}")
        image, _ = fit_image(source.image, m)
        prompt = build_prompt(TaskPrompt(task))
        target = build_target(task, vocab, text=source.label)
        return TrainingExample(image, prompt, target, task, Provenance(source.id, seed))

    if source.ink is None:
        raise ValidationError(f"task {task.value} needs an ink source, got {source.id!r}")
    if source.ink.is_empty:
        raise EmptyInkError(f"source {source.id!r} has an empty ink")
    aug = sample_augmentation(seed, probs)
    rotated = rotate_ink(source.ink, aug.rotation_rad)
    render_ink, _ = fit_to_canvas(rotated, m)
    image = render(render_ink, m, aug)
    token_ink, _ = fit_to_canvas(rotated, vocab.n)
    ink_tokens = encode_ink(token_ink, vocab)

    if task is Task.VANILLA_DERENDER:
        prompt = build_prompt(TaskPrompt(task))
        target = build_target(task, vocab, ink=ink_tokens)
    elif task is Task.DERENDER_WITH_TEXT:
        prompt = build_prompt(TaskPrompt(task, source.label))
        target = build_target(task, vocab, ink=ink_tokens)
    elif task is Task.RECOGNIZE_SYN:
        prompt = build_prompt(TaskPrompt(task))
        target = build_target(task, vocab, text=source.label)
    else:
        prompt = build_prompt(TaskPrompt(task))
        target = build_target(task, vocab, text=source.label, ink=ink_tokens)

    if task is not Task.RECOGNIZE_SYN:
        # stream invariant: derender targets must decode cleanly
        decode_ink(ink_tokens, vocab, strict=True)
    return TrainingExample(image, prompt, target, task, Provenance(source.id, seed))


def _draws(mix: MixtureSpec) -> Iterator[tuple[Task, float, int]]:
    # One (task, source selector, example seed) triple per step, with a
    # fixed RNG consumption pattern so task draws and full streams agree.
    tasks = [t for t in Task if mix.weights.get(t, 0.0) > 0]
    cumulative = np.cumsum([mix.weights[t] for t in tasks])
    rng = np.random.default_rng(mix.rng_seed)
    while True:
        u = rng.random()
        idx = min(int(np.searchsorted(cumulative, u, side="right")), len(tasks) - 1)
        v = rng.random()
        seed = int(rng.integers(0, 2**63))
        yield tasks[idx], v, seed


def _validated_pools(mix: MixtureSpec, sources: Sources) -> dict[Task, tuple[Sample, ...]]:
    pools = {}
    for t in Task:
        if mix.weights.get(t, 0.0) > 0:
            pool = sources.pool(t)
            if not pool:
                raise ValidationError(f"no sources available for weighted task {t.value}")
            pools[t] = pool
    return pools


def plan_draws(mix: MixtureSpec, sources: Sources, count: int) -> list[tuple[Sample, Task, int]]:
    """The first ``count`` (source, task, seed) draws of the stream."""
    pools = _validated_pools(mix, sources)
    out = []
    gen = _draws(mix)
    for _ in range(count):
        task, v, seed = next(gen)
        pool = pools[task]
        out.append((pool[min(int(v * len(pool)), len(pool) - 1)], task, seed))
    return out


def stream(
    mix: MixtureSpec,
    sources: Sources,
    *,
    vocab: Vocabulary | None = None,
    m: int = 224,
    probs: AugmentProbs | None = None,
) -> Iterator[TrainingExample]:
    """Infinite deterministic example stream; i.i.d. task draws by weight.

    Pools are validated here, not at the first draw.
    """
    vocab = vocab or Vocabulary()
    pools = _validated_pools(mix, sources)

    def generate():
        for task, v, seed in _draws(mix):
            pool = pools[task]
            source = pool[min(int(v * len(pool)), len(pool) - 1)]
            yield make_example(source, task, seed, vocab=vocab, m=m, probs=probs)

    return generate()


def draw_tasks(mix: MixtureSpec, count: int) -> list[Task]:
    """The first ``count`` task draws the stream would make."""
    gen = _draws(mix)
    return [next(gen)[0] for _ in range(count)]


def example_record(example: TrainingExample, vocab: Vocabulary) -> str:
    """The flat text record; bit-exact layout, keys in fixed order."""
    for name, value in (("prompt", example.prompt), ("source", example.provenance.source_id)):
        if "\n" in value:
            raise ValidationError(f"{name} must not contain newlines")
    lines = [
        f"task={example.task.value}",
        f"source={example.provenance.source_id}",
        f"seed={example.provenance.seed}",
        f"prompt={example.prompt}",
        f"target={format_tokens(example.target, vocab)}",
    ]
    return "\n".join(lines) + "\n"


def parse_record(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for raw in text.splitlines():
        if not raw:
            continue
        key, sep, val = raw.partition("=")
        if not sep or key not in ("task", "source", "seed", "prompt", "target"):
            raise ValidationError(f"malformed record line: {raw!r}")
        out[key] = val
    missing = {"task", "source", "seed", "prompt", "target"} - out.keys()
    if missing:
        raise ValidationError(f"record missing keys: {sorted(missing)}")
    return out


def write_example(example: TrainingExample, directory, index: int, vocab: Vocabulary) -> None:
    """Write ``{index:08}.png`` and ``{index:08}.rec`` into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    save_png(example.image, directory / f"{index:08}.png")
    record = example_record(example, vocab)
    with open(directory / f"{index:08}.rec", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(record)
