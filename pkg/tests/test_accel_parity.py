"""The numba kernels and the numpy fallback must agree.

The backend is chosen at import time, so the other path runs in a
subprocess (INKFORGE_PURE_NUMPY toggled) and reports its results as JSON.
"""

import json
import os
import subprocess
import sys

import numpy as np
import pytest

import inkforge
from inkforge import BinaryImage, DigitalInk, Stroke, chamfer, plain_spec, render, skeletonize
from inkforge.normalize import SimplifySpec, simplify

PROBE = """\
import json
import numpy as np
import inkforge
from inkforge import BinaryImage, DigitalInk, Stroke, chamfer, plain_spec, render, skeletonize
from inkforge.normalize import SimplifySpec, simplify

out = {"backend": inkforge.backend_name()}

rng = np.random.default_rng(1234)
xy = np.cumsum(rng.uniform(-9, 9, (60, 2)), axis=0) + 100.0
ink = DigitalInk([Stroke(np.column_stack([np.clip(xy, 0, 224), np.arange(60) * 0.02]))])
img = render(ink, 224, plain_spec(stroke_width=3.0))
out["render_sha"] = int(np.int64(np.sum(img.pixels.astype(np.int64) * 7919) % (2**31)))

mask = np.zeros((64, 64), bool)
mask[10:20, 5:60] = True
mask[5:60, 30:36] = True
sk = skeletonize(BinaryImage(mask))
out["skeleton"] = [[int(r), int(c)] for r, c in np.argwhere(sk.mask)]

pts = rng.uniform(0, 50, (40, 2))
stroke = Stroke(np.column_stack([pts, np.arange(40) * 0.02]))
kept = simplify(DigitalInk([stroke]), SimplifySpec(1.5)).strokes[0]
out["rdp"] = [[float(x), float(y)] for x, y in kept.xy]

a = DigitalInk([Stroke(np.column_stack([rng.uniform(0, 100, (30, 2)), np.arange(30) * 0.02]))])
b = DigitalInk([Stroke(np.column_stack([rng.uniform(0, 100, (30, 2)), np.arange(30) * 0.02]))])
out["chamfer"] = chamfer(a, b)

print(json.dumps(out))
"""


@pytest.fixture(scope="module")
def other_backend():
    env = dict(os.environ)
    if inkforge.backend_name() == "numba":
        env["INKFORGE_PURE_NUMPY"] = "1"
    else:
        env.pop("INKFORGE_PURE_NUMPY", None)
    proc = subprocess.run(
        [sys.executable, "-c", PROBE], capture_output=True, text=True, env=env, timeout=300
    )
    assert proc.returncode == 0, proc.stderr
    return json.loads(proc.stdout.strip().splitlines()[-1])


def test_probe_ran_on_the_other_backend(other_backend):
    assert other_backend["backend"] != inkforge.backend_name()


def test_render_parity(other_backend):
    rng = np.random.default_rng(1234)
    xy = np.cumsum(rng.uniform(-9, 9, (60, 2)), axis=0) + 100.0
    ink = DigitalInk([Stroke(np.column_stack([np.clip(xy, 0, 224), np.arange(60) * 0.02]))])
    img = render(ink, 224, plain_spec(stroke_width=3.0))
    sha = int(np.int64(np.sum(img.pixels.astype(np.int64) * 7919) % (2**31)))
    assert sha == other_backend["render_sha"]


def test_skeleton_parity(other_backend):
    mask = np.zeros((64, 64), bool)
    mask[10:20, 5:60] = True
    mask[5:60, 30:36] = True
    sk = skeletonize(BinaryImage(mask))
    got = [[int(r), int(c)] for r, c in np.argwhere(sk.mask)]
    assert got == other_backend["skeleton"]


def test_rdp_parity(other_backend):
    rng = np.random.default_rng(1234)
    rng.uniform(-9, 9, (60, 2))  # keep the draw sequence aligned with the probe
    pts = rng.uniform(0, 50, (40, 2))
    stroke = Stroke(np.column_stack([pts, np.arange(40) * 0.02]))
    kept = simplify(DigitalInk([stroke]), SimplifySpec(1.5)).strokes[0]
    got = [[float(x), float(y)] for x, y in kept.xy]
    assert got == other_backend["rdp"]


def test_chamfer_parity(other_backend):
    rng = np.random.default_rng(1234)
    rng.uniform(-9, 9, (60, 2))
    rng.uniform(0, 50, (40, 2))
    a = DigitalInk([Stroke(np.column_stack([rng.uniform(0, 100, (30, 2)), np.arange(30) * 0.02]))])
    b = DigitalInk([Stroke(np.column_stack([rng.uniform(0, 100, (30, 2)), np.arange(30) * 0.02]))])
    assert chamfer(a, b) == pytest.approx(other_backend["chamfer"], abs=1e-9)
