"""Command-line entry point.

Subcommands: convert, tokenize, detokenize, render, augment, derender,
derender-page, make-mixture, eval-f1. Config precedence is built-in
defaults < config file (flat key=value) < flags, with the INKFORGE_SEED
environment variable as the seed fallback. Exit codes: 0 success,
1 usage error, 2 data error, 3 backend error.
"""

from __future__ import annotations

import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Sequence

import click

from .errors import BackendError, InkError, ValidationError
from .geometry import derender_word
from .ink import DigitalInk
from .inkml import InkmlDocument, load_inkml, serialize_inkml
from .metrics import char_f1, load_charboxes
from .mixture import (
    MixtureSpec,
    Sample,
    Sources,
    make_example,
    plan_draws,
    write_example,
)
from .normalize import (
    ResampleSpec,
    SimplifySpec,
    fit_to_canvas,
    resample_time,
    rotate_ink,
    simplify,
)
from .page import GeoBackend, SubprocessBackend, derender_page, load_wordboxes, segment_words
from .raster import (
    AugmentProbs,
    load_png,
    plain_spec,
    render as render_ink_image,
    sample_augmentation,
    save_png,
    spec_from_kv,
    spec_to_kv,
)
from .svg import ink_to_svg
from .tokens import Task, Vocabulary, decode_tokens, encode_ink, format_tokens, parse_tokens


@dataclass(frozen=True)
class Config:
    n: int = 224
    m: int = 224
    resample_period: float = 0.020
    simplify_epsilon: float = 1.0
    p_lines: float = 0.25
    p_grids: float = 0.25
    p_noise: float = 0.5
    p_blur: float = 0.5
    seed: int = 0


_INT_KEYS = {"n", "m", "seed"}


def load_config(path: str | None) -> Config:
    cfg = Config()
    env_seed = os.environ.get("INKFORGE_SEED")
    if env_seed is not None:
        try:
            cfg = replace(cfg, seed=int(env_seed))
        except ValueError:
            raise ValidationError(f"INKFORGE_SEED must be an integer, got {env_seed!r}") from None
    if path is None:
        return cfg
    known = {f.name for f in fields(Config)}
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, val = line.partition("=")
            key = key.strip()
            if not sep or key not in known:
                raise ValidationError(f"{path}:{lineno}: unknown config key {key!r}")
            try:
                values[key] = int(val) if key in _INT_KEYS else float(val)
            except ValueError:
                raise ValidationError(f"{path}:{lineno}: bad value for {key}") from None
    return replace(cfg, **values)


def _probs(cfg: Config) -> AugmentProbs:
    return AugmentProbs(cfg.p_lines, cfg.p_grids, cfg.p_noise, cfg.p_blur)


def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        click.echo(text, nl=False)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


@click.group()
@click.option("--config", "config_path", default=None, help="Flat key=value config file.")
@click.pass_context
def cli(ctx, config_path):
    """Offline-to-online handwriting toolkit."""
    ctx.obj = load_config(config_path)


@cli.command()
@click.argument("inkml_path")
@click.option("-o", "output", default=None, help="Output file (default stdout).")
@click.option("--n", "n_opt", type=int, default=None, help="Token canvas size.")
@click.pass_obj
def tokenize(cfg: Config, inkml_path, output, n_opt):
    """Fit each ink to the token canvas and print one token line per ink."""
    n = n_opt if n_opt is not None else cfg.n
    vocab = Vocabulary(n)
    doc = load_inkml(inkml_path)
    lines = []
    for ink in doc.inks:
        if ink.is_empty:
            lines.append("")
            continue
        fitted, _ = fit_to_canvas(ink, n)
        lines.append(format_tokens(encode_ink(fitted, vocab), vocab))
    _write_text(output, "\n".join(lines) + "\n")


@cli.command()
@click.argument("tokens_path")
@click.option("-o", "output", default=None, help="Output file (default stdout).")
@click.option("--n", "n_opt", type=int, default=None, help="Token canvas size.")
@click.pass_obj
def detokenize(cfg: Config, tokens_path, output, n_opt):
    """Decode token lines (one ink per line) into an InkML document."""
    n = n_opt if n_opt is not None else cfg.n
    vocab = Vocabulary(n)
    with open(tokens_path, "r", encoding="utf-8") as fh:
        text = fh.read()
    inks = []
    for lineno, line in enumerate(text.splitlines(), 1):
        result = decode_tokens(parse_tokens(line, vocab), vocab)
        for diag in result.diagnostics:
            click.echo(f"line {lineno}: {diag}", err=True)
        inks.append(result.ink)
    if not inks:
        inks = [DigitalInk()]
    _write_text(output, serialize_inkml(InkmlDocument(inks)))


@cli.command()
@click.argument("inkml_path")
@click.option("-o", "output", required=True, help="Output PNG.")
@click.option("--spec", "spec_path", default=None, help="Augmentation key-value file.")
@click.option("--m", "m_opt", type=int, default=None, help="Image side.")
@click.option("--index", type=int, default=0, help="Ink index within the document.")
@click.pass_obj
def render(cfg: Config, inkml_path, output, spec_path, m_opt, index):
    """Rotate, fit, and render one ink to a PNG."""
    m = m_opt if m_opt is not None else cfg.m
    doc = load_inkml(inkml_path)
    if not 0 <= index < len(doc.inks):
        raise ValidationError(f"ink index {index} out of range (document has {len(doc.inks)})")
    if spec_path is not None:
        with open(spec_path, "r", encoding="utf-8") as fh:
            spec = spec_from_kv(fh.read())
    else:
        spec = plain_spec(seed=cfg.seed)
    ink = rotate_ink(doc.inks[index], spec.rotation_rad)
    fitted, _ = fit_to_canvas(ink, m)
    save_png(render_ink_image(fitted, m, spec), output)


@cli.command()
@click.option("--seed", type=int, default=None, help="Sampler seed.")
@click.option("-o", "output", default=None, help="Output key-value file (default stdout).")
@click.pass_obj
def augment(cfg: Config, seed, output):
    """Sample an augmentation spec and write it as key=value text."""
    seed = seed if seed is not None else cfg.seed
    spec = sample_augmentation(seed, _probs(cfg))
    _write_text(output, spec_to_kv(spec))


@cli.command()
@click.argument("image_path")
@click.option("-o", "output", default=None, help="Output InkML (default stdout).")
def derender(image_path, output):
    """Derender a single word image with the geometric baseline."""
    ink = derender_word(load_png(image_path))
    _write_text(output, serialize_inkml(ink))


def _make_backend(name: str, vocab: Vocabulary):
    if name == "geo":
        return GeoBackend()
    if name.startswith("subprocess:"):
        cmd = name[len("subprocess:") :]
        if not cmd.strip():
            raise click.BadParameter("subprocess backend needs a command", param_hint="--backend")
        return SubprocessBackend(cmd, vocab)
    raise click.BadParameter(f"unknown backend {name!r}", param_hint="--backend")


@cli.command("derender-page")
@click.argument("page_path")
@click.option("--boxes", "boxes_path", default=None, help="Word-box JSON (default: built-in segmenter).")
@click.option("--backend", "backend_name", default="geo", help="geo | subprocess:CMD")
@click.option("-o", "output", required=True, help="Output InkML.")
@click.option("--svg", "svg_path", default=None, help="Optional SVG overlay.")
@click.option("--m", "m_opt", type=int, default=None, help="Model canvas side.")
@click.option("--jobs", type=int, default=1, help="Parallel word workers.")
@click.option("--n", "n_opt", type=int, default=None, help="Token canvas for subprocess backends.")
@click.pass_obj
def derender_page_cmd(cfg: Config, page_path, boxes_path, backend_name, output, svg_path, m_opt, jobs, n_opt):
    """Crop word boxes, derender each, and paste the inks back into the page."""
    m = m_opt if m_opt is not None else cfg.m
    n = n_opt if n_opt is not None else cfg.n
    page = load_png(page_path)
    boxes = load_wordboxes(boxes_path) if boxes_path else segment_words(page)
    backend = _make_backend(backend_name, Vocabulary(n))
    result = derender_page(page, boxes, backend, m=m, jobs=jobs)
    failures = [r for r in result.records if r.skipped and (r.reason or "").startswith("backend error")]
    attempted = [r for r in result.records if not r.skipped] + failures
    if attempted and len(failures) == len(attempted):
        raise BackendError(f"backend failed on all {len(failures)} words: {failures[0].reason}")
    _write_text(output, serialize_inkml(result.ink))
    skipped = [r for r in result.records if r.skipped]
    if skipped:
        click.echo(f"skipped {len(skipped)}/{len(result.records)} boxes", err=True)
        for r in skipped:
            click.echo(f"  {r.box.box}: {r.reason}", err=True)
    if svg_path:
        groups = [r.stroke_count for r in result.records if not r.skipped]
        _write_text(
            svg_path,
            ink_to_svg(result.ink, page.width, page.height, background=page, groups=groups),
        )


def _load_ink_dir(path: Path) -> list[Sample]:
    samples = []
    for f in sorted(path.glob("*.inkml")):
        doc = load_inkml(f)
        for i, ink in enumerate(doc.inks):
            sid = f.stem if len(doc.inks) == 1 else f"{f.stem}:{i}"
            samples.append(Sample(sid, ink=ink, label=ink.metadata.get("label")))
    return samples


def _load_ocr_dir(path: Path) -> list[Sample]:
    samples = []
    for f in sorted(path.glob("*.png")):
        label_file = f.with_suffix(".txt")
        if not label_file.exists():
            continue
        label = label_file.read_text(encoding="utf-8").strip()
        if label:
            samples.append(Sample(f.stem, image=load_png(f), label=label))
    return samples


def _auto_weights(sources: Sources) -> dict[Task, float]:
    tasks = [t for t in Task if sources.pool(t)]
    if not tasks:
        raise ValidationError("no usable sources: need inks (with labels) and/or labeled images")
    return {t: 1.0 / len(tasks) for t in tasks}


@cli.command("make-mixture")
@click.option("--inks", "inks_dir", default=None, help="Directory of .inkml sources.")
@click.option("--ocr", "ocr_dir", default=None, help="Directory of .png + .txt label pairs.")
@click.option("--count", type=int, required=True, help="Number of examples.")
@click.option("-o", "out_dir", required=True, help="Output directory.")
@click.option("--seed", type=int, default=None, help="Stream seed.")
@click.option("--n", "n_opt", type=int, default=None, help="Token canvas size.")
@click.option("--m", "m_opt", type=int, default=None, help="Image side.")
@click.option("--jobs", type=int, default=1, help="Parallel render workers.")
@click.pass_obj
def make_mixture(cfg: Config, inks_dir, ocr_dir, count, out_dir, seed, n_opt, m_opt, jobs):
    """Generate the five-task training-example mixture.

    Source inks are normalized once (20 ms resample + RDP) at load. Tasks
    without usable sources are dropped and the remaining weights are
    rebalanced equally.
    """
    if count < 1:
        raise click.BadParameter("count must be >= 1", param_hint="--count")
    seed = seed if seed is not None else cfg.seed
    n = n_opt if n_opt is not None else cfg.n
    m = m_opt if m_opt is not None else cfg.m
    vocab = Vocabulary(n)
    ink_samples = _load_ink_dir(Path(inks_dir)) if inks_dir else []
    normalized = []
    for s in ink_samples:
        ink = resample_time(s.ink, ResampleSpec(cfg.resample_period))
        ink = simplify(ink, SimplifySpec(cfg.simplify_epsilon))
        normalized.append(Sample(s.id, ink=ink, label=s.label))
    sources = Sources(normalized, _load_ocr_dir(Path(ocr_dir)) if ocr_dir else ())
    mix = MixtureSpec(_auto_weights(sources), seed)
    probs = _probs(cfg)
    draws = plan_draws(mix, sources, count)

    def build(item):
        source, task, ex_seed = item
        return make_example(source, task, ex_seed, vocab=vocab, m=m, probs=probs)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            examples = list(pool.map(build, draws))
    else:
        examples = [build(d) for d in draws]
    for index, example in enumerate(examples):
        write_example(example, out_dir, index, vocab)
    click.echo(f"wrote {count} examples to {out_dir}")


@cli.command("eval-f1")
@click.argument("pred_path")
@click.argument("truth_path")
@click.option("--iou", "iou_threshold", type=float, default=0.5, help="IoU threshold.")
@click.option("--json-out", "json_path", default=None, help="Also write the report as JSON.")
def eval_f1(pred_path, truth_path, iou_threshold, json_path):
    """Character-level F1 between two char-box JSON files."""
    report = char_f1(load_charboxes(pred_path), load_charboxes(truth_path), iou_threshold)
    click.echo(report.table())
    if json_path:
        _write_text(json_path, json.dumps(report.to_dict(), indent=2) + "\n")


@cli.command()
@click.argument("inkml_path")
@click.option("-o", "output", default=None, help="Output InkML (default stdout).")
@click.option("--resample", is_flag=True, help="Resample time at the configured period.")
@click.option("--simplify", "do_simplify", is_flag=True, help="Apply RDP simplification.")
@click.option("--fit", is_flag=True, help="Fit each ink to the token canvas.")
@click.option("--period", type=float, default=None, help="Resample period, seconds.")
@click.option("--epsilon", type=float, default=None, help="RDP tolerance.")
@click.option("--n", "n_opt", type=int, default=None, help="Canvas size for --fit.")
@click.pass_obj
def convert(cfg: Config, inkml_path, output, resample, do_simplify, fit, period, epsilon, n_opt):
    """Normalize InkML: optional resample, simplify, and canvas fit, in that order."""
    doc = load_inkml(inkml_path)
    period = period if period is not None else cfg.resample_period
    epsilon = epsilon if epsilon is not None else cfg.simplify_epsilon
    n = n_opt if n_opt is not None else cfg.n
    inks = []
    for ink in doc.inks:
        if resample:
            ink = resample_time(ink, ResampleSpec(period))
        if do_simplify:
            ink = simplify(ink, SimplifySpec(epsilon))
        if fit and not ink.is_empty:
            ink, _ = fit_to_canvas(ink, n)
        inks.append(ink)
    _write_text(output, serialize_inkml(InkmlDocument(inks)))


def run(argv: Sequence[str] | None = None) -> int:
    """Execute the CLI and map exceptions to documented exit codes."""
    try:
        cli.main(
            args=list(argv) if argv is not None else None,
            prog_name="inkforge",
            standalone_mode=False,
        )
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.Abort:
        return 1
    except BackendError as exc:
        click.echo(f"backend error: {exc}", err=True)
        return 3
    except InkError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except OSError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
