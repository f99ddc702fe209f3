import math

import numpy as np
import pytest

from inkforge import (
    DigitalInk,
    EmptyInkError,
    ResampleSpec,
    SimplifySpec,
    bounds,
    fit_to_canvas,
    hallucinate_time,
    resample_time,
    rotate_ink,
    simplify,
    transform,
)

from conftest import make_ink, random_ink


def rdp_oracle(points, eps):
    """Plain recursive RDP on (x, y) tuples; the independent reference."""
    if len(points) <= 2:
        return list(points)
    (x1, y1), (x2, y2) = points[0], points[-1]
    dx, dy = x2 - x1, y2 - y1
    norm = math.hypot(dx, dy)
    dmax, idx = -1.0, 0
    for i in range(1, len(points) - 1):
        px, py = points[i]
        if norm == 0:
            d = math.hypot(px - x1, py - y1)
        else:
            d = abs(dx * (y1 - py) - (x1 - px) * dy) / norm
        if d > dmax:
            dmax, idx = d, i
    if dmax > eps:
        left = rdp_oracle(points[: idx + 1], eps)
        right = rdp_oracle(points[idx:], eps)
        return left[:-1] + right
    return [points[0], points[-1]]


# --- resample_time ---


def test_resample_linear_motion():
    ink = make_ink([(0, 0, 0.0), (10, 0, 0.1)])
    out = resample_time(ink, ResampleSpec(0.02))
    (stroke,) = out.strokes
    np.testing.assert_allclose(stroke.x, [0, 2, 4, 6, 8, 10], atol=1e-9)
    np.testing.assert_allclose(stroke.y, np.zeros(6), atol=1e-9)
    np.testing.assert_allclose(stroke.t, np.arange(6) * 0.02, atol=1e-9)


def test_resample_single_point_unchanged():
    ink = make_ink([(3, 4, 0.5)])
    assert resample_time(ink) == ink


def test_resample_fixed_point():
    pts = [(i * 2.0, 1.0, i * 0.02) for i in range(6)]
    out = resample_time(make_ink(pts), ResampleSpec(0.02))
    (stroke,) = out.strokes
    assert len(stroke) == 6
    np.testing.assert_allclose(stroke.xy, [p[:2] for p in pts], atol=1e-9)


def test_resample_retains_exact_endpoints():
    ink = make_ink([(0, 0, 0.0), (7.3, -2.2, 0.031), (11.1, 5.5, 0.095)])
    out = resample_time(ink, ResampleSpec(0.02))
    (stroke,) = out.strokes
    np.testing.assert_array_equal(stroke.array[0], ink.strokes[0].array[0])
    np.testing.assert_array_equal(stroke.array[-1], ink.strokes[0].array[-1])


def test_resample_short_stroke_collapses_to_endpoints():
    ink = make_ink([(0, 0, 0.0), (1, 1, 0.004), (2, 0, 0.009)])
    out = resample_time(ink, ResampleSpec(0.02))
    np.testing.assert_array_equal(out.strokes[0].xy, [[0, 0], [2, 0]])


def test_resample_skips_synthetic_timestamps():
    ink = hallucinate_time(make_ink([(0, 0), (5, 5)]))
    out = resample_time(ink, ResampleSpec(0.02))
    assert out.strokes == ink.strokes
    assert "resample_warning" in out.metadata


def test_resample_skips_absent_timestamps():
    ink = make_ink([(0, 0, 0.0), (5, 5, 0.0), (9, 1, 0.0)])
    out = resample_time(ink)
    assert out.strokes == ink.strokes
    assert "resample_warning" in out.metadata


# --- simplify ---


def test_simplify_collinear_keeps_endpoints():
    out = simplify(make_ink([(0, 0), (5, 0), (10, 0)]), SimplifySpec(0.5))
    np.testing.assert_array_equal(out.strokes[0].xy, [[0, 0], [10, 0]])


def test_simplify_epsilon_zero_is_identity():
    ink = make_ink([(0, 0), (5, 0), (10, 0)])
    assert simplify(ink, SimplifySpec(0.0)) == ink


def test_simplify_right_angle_keeps_corner():
    # corner deviation = |cross((10,10), (10,0))| / |(10,10)| = 100/sqrt(200) ~ 7.07
    pts = [(0, 0), (10, 0), (10, 10)]
    out = simplify(make_ink(pts), SimplifySpec(0.5))
    assert len(out.strokes[0]) == 3
    assert rdp_oracle(pts, 0.5) == pts


def test_simplify_matches_brute_force_oracle(rng):
    for _ in range(150):
        m = int(rng.integers(3, 13))
        pts = [(float(x), float(y)) for x, y in rng.uniform(0, 20, (m, 2))]
        eps = float(rng.uniform(0.0, 3.0))
        if eps == 0.0:
            continue
        stroke_pts = [(x, y, i * 0.02) for i, (x, y) in enumerate(pts)]
        out = simplify(make_ink(stroke_pts), SimplifySpec(eps))
        got = [tuple(p) for p in out.strokes[0].xy]
        assert got == rdp_oracle(pts, eps)


def test_simplify_preserves_timestamps_and_subset(rng):
    ink = random_ink(rng, max_strokes=5, max_points=30)
    out = simplify(ink, SimplifySpec(2.0))
    for before, after in zip(ink.strokes, out.strokes):
        assert len(after) <= len(before)
        rows_before = {tuple(r) for r in before.array}
        assert all(tuple(r) in rows_before for r in after.array)
        np.testing.assert_array_equal(after.array[0], before.array[0])
        np.testing.assert_array_equal(after.array[-1], before.array[-1])


# --- fit_to_canvas ---


def test_fit_scales_larger_side_to_n():
    ink = make_ink([(0, 0), (10, 5)])
    fitted, tfm = fit_to_canvas(ink, 224)
    assert tfm.scale == pytest.approx(22.4)
    bb = bounds(fitted)
    assert (bb.x_min, bb.y_min, bb.x_max, bb.y_max) == pytest.approx((0, 56, 224, 168))


def test_fit_single_point_centers():
    fitted, tfm = fit_to_canvas(make_ink([(7, 9)]), 224)
    assert fitted.strokes[0][0].x == pytest.approx(112)
    assert fitted.strokes[0][0].y == pytest.approx(112)
    assert tfm.scale == 1.0


def test_fit_identity_when_already_fitted():
    ink = make_ink([(0, 0), (224, 224)])
    fitted, tfm = fit_to_canvas(ink, 224)
    assert tfm.is_identity(1e-9)
    np.testing.assert_allclose(fitted.strokes[0].xy, ink.strokes[0].xy, atol=1e-9)


def test_fit_empty_ink_errors():
    with pytest.raises(EmptyInkError):
        fit_to_canvas(DigitalInk(), 224)


def test_fit_inverse_round_trip(rng):
    ink = random_ink(rng, max_strokes=4, max_points=20)
    fitted, tfm = fit_to_canvas(ink, 224)
    back = transform(fitted, tfm.inverse())
    for a, b in zip(back.strokes, ink.strokes):
        np.testing.assert_allclose(a.xy, b.xy, atol=1e-6)


def test_fit_is_idempotent(rng):
    ink = random_ink(rng, max_strokes=4, max_points=20)
    fitted, _ = fit_to_canvas(ink, 224)
    again, tfm2 = fit_to_canvas(fitted, 224)
    assert tfm2.is_identity(1e-6)
    bb = bounds(again)
    assert max(bb.width, bb.height) == pytest.approx(224, abs=1e-6)
    assert bb.x_min >= -1e-6 and bb.y_min >= -1e-6
    assert bb.x_max <= 224 + 1e-6 and bb.y_max <= 224 + 1e-6


# --- hallucinate_time ---


def test_hallucinate_single_stroke():
    out = hallucinate_time(make_ink([(0, 0), (1, 1), (2, 2)]), 0.02)
    np.testing.assert_allclose(out.strokes[0].t, [0.0, 0.02, 0.04])
    assert out.metadata["synthetic_time"] == "true"


def test_hallucinate_inter_stroke_gap():
    out = hallucinate_time(make_ink([(0, 0), (1, 1)], [(2, 2), (3, 3)]), 0.02)
    np.testing.assert_allclose(out.strokes[0].t, [0.0, 0.02])
    np.testing.assert_allclose(out.strokes[1].t, [0.06, 0.08])


def test_hallucinate_empty_ink():
    assert hallucinate_time(DigitalInk()).is_empty


# --- rotate_ink ---


def test_rotate_quarter_turn_about_origin():
    ink = make_ink([(0, 0), (1, 0)])
    out = rotate_ink(ink, math.pi / 2, center=(0.0, 0.0))
    np.testing.assert_allclose(out.strokes[0].xy, [[0, 0], [0, 1]], atol=1e-12)


def test_rotate_zero_angle_is_identity():
    ink = make_ink([(0, 0), (1, 0)])
    assert rotate_ink(ink, 0.0) == ink


def test_rotate_preserves_center_by_default():
    ink = make_ink([(0, 0), (4, 2)])
    out = rotate_ink(ink, 0.7)
    assert bounds(out).center == pytest.approx(bounds(ink).center)
