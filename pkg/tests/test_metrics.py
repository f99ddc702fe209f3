import itertools
import json

import pytest

from inkforge import (
    BoundingBox,
    CharBox,
    DigitalInk,
    EmptyInkError,
    ValidationError,
    chamfer,
    char_f1,
    iou,
    stroke_stats,
)
from inkforge.metrics import load_charboxes

from conftest import make_ink


def box(x0, y0, x1, y1):
    return BoundingBox(x0, y0, x1, y1)


def optimal_match_count(pred, truth, threshold=0.5):
    """Brute force: maximum one-to-one matching over valid pairs."""
    valid = {
        (pi, ti)
        for pi, p in enumerate(pred)
        for ti, t in enumerate(truth)
        if p.character == t.character and iou(p.box, t.box) >= threshold
    }
    best = 0
    truth_idx = range(len(truth))
    for k in range(min(len(pred), len(truth)), 0, -1):
        for pred_sel in itertools.combinations(range(len(pred)), k):
            for perm in itertools.permutations(truth_idx, k):
                if all((pi, ti) in valid for pi, ti in zip(pred_sel, perm)):
                    return k
    return best


# --- char_f1 ---


def test_identical_sets_score_one():
    boxes = [CharBox(box(0, 0, 10, 10), "a"), CharBox(box(20, 0, 30, 10), "b")]
    report = char_f1(boxes, boxes)
    assert report.f1 == 1.0 and report.precision == 1.0 and report.recall == 1.0


def test_disjoint_sets_score_zero():
    pred = [CharBox(box(0, 0, 10, 10), "a")]
    truth = [CharBox(box(100, 100, 110, 110), "a")]
    assert char_f1(pred, truth).f1 == 0.0


def test_spurious_prediction_penalizes_precision():
    truth = [
        CharBox(box(0, 0, 10, 10), "a"),
        CharBox(box(20, 0, 30, 10), "b"),
        CharBox(box(40, 0, 50, 10), "c"),
    ]
    pred = truth + [CharBox(box(70, 0, 80, 10), "d")]
    report = char_f1(pred, truth)
    assert report.precision == pytest.approx(0.75)
    assert report.recall == pytest.approx(1.0)
    assert report.f1 == pytest.approx(2 * 0.75 / 1.75)
    assert len(report.matches) == optimal_match_count(pred, truth)


def test_character_must_match_case_sensitively():
    pred = [CharBox(box(0, 0, 10, 10), "A")]
    truth = [CharBox(box(0, 0, 10, 10), "a")]
    assert char_f1(pred, truth).f1 == 0.0


def test_empty_both_is_vacuous_perfection():
    assert char_f1([], []).f1 == 1.0


def test_one_side_empty_scores_zero():
    boxes = [CharBox(box(0, 0, 10, 10), "a")]
    assert char_f1([], boxes).f1 == 0.0
    assert char_f1(boxes, []).f1 == 0.0


def test_threshold_validation():
    boxes = [CharBox(box(0, 0, 10, 10), "a")]
    for bad in (0.0, 1.0, -0.5):
        with pytest.raises(ValidationError):
            char_f1(boxes, boxes, bad)


def test_symmetry_swaps_precision_and_recall(rng):
    def random_boxes(k):
        out = []
        for _ in range(k):
            x, y = rng.uniform(0, 50, 2)
            out.append(CharBox(box(x, y, x + 10, y + 10), rng.choice(list("abc"))))
        return out

    for _ in range(20):
        pred, truth = random_boxes(4), random_boxes(5)
        fwd = char_f1(pred, truth)
        rev = char_f1(truth, pred)
        assert fwd.precision == pytest.approx(rev.recall)
        assert fwd.recall == pytest.approx(rev.precision)
        assert fwd.f1 == pytest.approx(rev.f1)


def test_greedy_matches_optimal_on_random_instances(rng):
    for _ in range(60):
        n_truth = int(rng.integers(1, 6))
        truth, pred = [], []
        for i in range(n_truth):
            x, y = rng.uniform(0, 80, 2)
            w, h = rng.uniform(8, 14, 2)
            ch = chr(ord("a") + int(rng.integers(0, 4)))
            truth.append(CharBox(box(x, y, x + w, y + h), ch))
            if rng.random() < 0.8:  # matched prediction, slightly perturbed
                dx, dy = rng.uniform(-1.5, 1.5, 2)
                pred.append(CharBox(box(x + dx, y + dy, x + w + dx, y + h + dy), ch))
        for _ in range(int(rng.integers(0, 3))):  # spurious far-away boxes
            x, y = rng.uniform(200, 300, 2)
            pred.append(CharBox(box(x, y, x + 10, y + 10), "z"))
        report = char_f1(pred, truth)
        assert len(report.matches) == optimal_match_count(pred, truth)


def test_report_serialization():
    boxes = [CharBox(box(0, 0, 10, 10), "a")]
    report = char_f1(boxes, boxes)
    as_json = json.loads(json.dumps(report.to_dict()))
    assert as_json["f1"] == 1.0
    assert "precision" in report.table()


def test_load_charboxes(tmp_path):
    path = tmp_path / "boxes.json"
    path.write_text('[{"box": [0, 0, 10, 10], "char": "a"}]')
    (cb,) = load_charboxes(path)
    assert cb.character == "a"
    path.write_text('[{"box": [10, 0, 0, 10], "char": "a"}]')
    with pytest.raises(ValidationError, match=r"\$\[0\]\.box"):
        load_charboxes(path)
    path.write_text('[{"box": [0, 0, 10, 10], "char": "ab"}]')
    with pytest.raises(ValidationError, match=r"\$\[0\]\.char"):
        load_charboxes(path)


# --- chamfer ---


def test_chamfer_identical_is_zero():
    ink = make_ink([(0, 0, 0.0), (10, 0, 0.1)])
    assert chamfer(ink, ink) == 0.0


def test_chamfer_parallel_segments():
    a = make_ink([(0, 0, 0.0), (10, 0, 0.1)])
    b = make_ink([(0, 3, 0.0), (10, 3, 0.1)])
    assert chamfer(a, b) == pytest.approx(3.0)


def test_chamfer_perpendicular_translation():
    a = make_ink([(5, 0, 0.0), (5, 20, 0.1)])
    b = make_ink([(6, 0, 0.0), (6, 20, 0.1)])
    assert chamfer(a, b) == pytest.approx(1.0)


def test_chamfer_is_symmetric(rng):
    from conftest import random_ink

    a = random_ink(rng, max_strokes=3, max_points=10)
    b = random_ink(rng, max_strokes=3, max_points=10)
    assert chamfer(a, b) == pytest.approx(chamfer(b, a))


def test_chamfer_empty_errors():
    ink = make_ink([(0, 0)])
    with pytest.raises(EmptyInkError):
        chamfer(DigitalInk(), ink)
    with pytest.raises(EmptyInkError):
        chamfer(ink, DigitalInk())


# --- stroke_stats ---


def test_stats_empty():
    st = stroke_stats(DigitalInk())
    assert (st.stroke_count, st.point_count, st.total_length, st.mean_points_per_stroke) == (
        0,
        0,
        0.0,
        0.0,
    )


def test_stats_three_four_five():
    st = stroke_stats(make_ink([(0, 0, 0.0), (3, 4, 0.1)]))
    assert st.total_length == pytest.approx(5.0)


def test_stats_counts():
    st = stroke_stats(make_ink([(0, 0), (1, 0)], [(2, 2), (3, 3)]))
    assert st.stroke_count == 2
    assert st.point_count == 4
    assert st.mean_points_per_stroke == 2.0
