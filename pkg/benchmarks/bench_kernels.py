"""Benchmark the numba kernels against the pure-numpy fallback.

Run from the repository root:

    python3 benchmarks/bench_kernels.py

The script times the current process's backend, then re-runs itself with
INKFORGE_PURE_NUMPY=1 (or unset) in a subprocess and prints both columns.
Pass --repeat to change the number of timed iterations.
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def build_workloads():
    from inkforge import DigitalInk, Stroke, plain_spec, render, chamfer
    from inkforge.geometry import skeletonize
    from inkforge.normalize import SimplifySpec, simplify

    rng = np.random.default_rng(7)

    # rasterize: 40 strokes of 12 points on a 224 canvas
    strokes = []
    t = 0.0
    for _ in range(40):
        xy = np.cumsum(rng.uniform(-14, 14, (12, 2)), axis=0) + rng.uniform(40, 180, 2)
        ts = t + np.arange(12) * 0.02
        t = ts[-1] + 0.04
        strokes.append(Stroke(np.column_stack([np.clip(xy, 0, 224), ts])))
    scribble = DigitalInk(strokes)
    spec = plain_spec(stroke_width=3.0)

    # thinning: the rendered scribble's foreground
    from inkforge.geometry import binarize

    blob = binarize(render(scribble, 224, spec))

    # chamfer: two smooth walks, ~3k samples each after densification
    def walk():
        xy = np.cumsum(rng.uniform(-1.5, 1.5, (3000, 2)), axis=0) + 112.0
        return DigitalInk([Stroke(np.column_stack([xy, np.arange(3000) * 0.02]))])

    cloud_a = walk()
    cloud_b = walk()

    # rdp: one long noisy polyline
    n = 20000
    wiggle = np.column_stack(
        [np.linspace(0, 224, n), 112 + 40 * np.sin(np.linspace(0, 60, n)) + rng.normal(0, 0.4, n)]
    )
    polyline = DigitalInk([Stroke(np.column_stack([wiggle, np.arange(n) * 0.001]))])

    return {
        "rasterize": lambda: render(scribble, 224, spec),
        "thinning": lambda: skeletonize(blob),
        "chamfer": lambda: chamfer(cloud_a, cloud_b, sample_step=2.0),
        "rdp": lambda: simplify(polyline, SimplifySpec(0.75)),
    }


def time_kernels(repeat):
    from inkforge import backend_name

    workloads = build_workloads()
    results = {"backend": backend_name(), "times_ms": {}}
    for name, fn in workloads.items():
        fn()  # warm up (numba compilation, caches)
        best = min(_timed(fn) for _ in range(repeat))
        results["times_ms"][name] = best * 1000.0
    return results


def _timed(fn):
    t0 = time.perf_counter()
    fn()
    return time.perf_counter() - t0


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--json", action="store_true", help="print this process's timings as JSON")
    args = parser.parse_args()

    mine = time_kernels(args.repeat)
    if args.json:
        print(json.dumps(mine))
        return

    env = dict(os.environ)
    if mine["backend"] == "numba":
        env["INKFORGE_PURE_NUMPY"] = "1"
    else:
        env.pop("INKFORGE_PURE_NUMPY", None)
    proc = subprocess.run(
        [sys.executable, os.path.abspath(__file__), "--repeat", str(args.repeat), "--json"],
        capture_output=True,
        text=True,
        env=env,
        check=True,
    )
    other = json.loads(proc.stdout.strip().splitlines()[-1])

    columns = {mine["backend"]: mine["times_ms"], other["backend"]: other["times_ms"]}
    names = sorted(mine["times_ms"])
    print(f"{'kernel':<12} {'numba (ms)':>12} {'numpy (ms)':>12} {'speedup':>9}")
    for name in names:
        nb = columns.get("numba", {}).get(name, float("nan"))
        np_ = columns.get("numpy", {}).get(name, float("nan"))
        print(f"{name:<12} {nb:>12.2f} {np_:>12.2f} {np_ / nb:>8.1f}x")


if __name__ == "__main__":
    main()
