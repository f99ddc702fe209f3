import numpy as np
import pytest

from inkforge import DigitalInk, Stroke, Vocabulary


def make_stroke(points):
    return Stroke(np.asarray(points, dtype=np.float64))


def make_ink(*stroke_point_lists, metadata=None):
    return DigitalInk([make_stroke(pts) for pts in stroke_point_lists], metadata)


def random_ink(rng, max_strokes=20, max_points=50, span=(300.0, 150.0)):
    n_strokes = int(rng.integers(1, max_strokes + 1))
    strokes = []
    t = 0.0
    for _ in range(n_strokes):
        m = int(rng.integers(1, max_points + 1))
        xs = rng.uniform(0, span[0], m)
        ys = rng.uniform(0, span[1], m)
        ts = t + np.arange(m) * 0.02
        t = ts[-1] + 0.04
        strokes.append(Stroke(np.column_stack([xs, ys, ts])))
    return DigitalInk(strokes)


@pytest.fixture
def vocab():
    return Vocabulary()


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
