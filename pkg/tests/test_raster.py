import math

import numpy as np
import pytest

from inkforge import (
    AugmentProbs,
    AugmentationSpec,
    RasterImage,
    Ruling,
    ValidationError,
    draw_strokes,
    fit_image,
    load_png,
    plain_spec,
    render,
    sample_augmentation,
    save_png,
    spec_from_kv,
    spec_to_kv,
)

from conftest import make_ink


# --- spec validation ---


def test_out_of_range_fields_name_the_field():
    with pytest.raises(ValidationError, match="stroke_width_px"):
        AugmentationSpec(stroke_width_px=0.5)
    with pytest.raises(ValidationError, match="rotation_rad"):
        AugmentationSpec(rotation_rad=2.0)
    with pytest.raises(ValidationError, match=r"stroke_rgb\[1\]"):
        AugmentationSpec(stroke_rgb=(0.0, 1.5, 0.0))
    with pytest.raises(ValidationError, match="gaussian_noise_std"):
        AugmentationSpec(gaussian_noise_std=10.0)
    with pytest.raises(ValidationError, match="box_blur_radius_px"):
        AugmentationSpec(box_blur_radius_px=6.0)
    with pytest.raises(ValidationError, match="ruling.spacing_px"):
        Ruling("lines", 2.0, 5.0, (0, 0, 0))
    with pytest.raises(ValidationError, match="ruling.kind"):
        Ruling("dots", 2.0, 50.0, (0, 0, 0))


# --- render ---


def test_render_empty_ink_is_background():
    from inkforge import DigitalInk

    img = render(DigitalInk(), 32, plain_spec())
    assert np.all(img.pixels == 255)


def test_render_geometry_containment():
    ink = make_ink([(10, 112, 0.0), (214, 112, 0.1)])
    img = render(ink, 224, plain_spec(stroke_width=3.0))
    assert tuple(img.pixels[112, 112]) == (0, 0, 0)
    assert tuple(img.pixels[10, 10]) == (255, 255, 255)


def test_render_is_deterministic():
    ink = make_ink([(20, 20, 0.0), (200, 180, 0.1)])
    spec = sample_augmentation(1234)
    a = render(ink, 224, spec)
    b = render(ink, 224, spec)
    assert np.array_equal(a.pixels, b.pixels)


def test_render_rejects_small_canvas():
    with pytest.raises(ValidationError, match="at least 8"):
        render(make_ink([(1, 1)]), 4, plain_spec())


def test_ink_pixels_stay_near_segments():
    # no noise/blur/ruling: every non-background pixel within w/2 + 1 px of the segment
    ink = make_ink([(30.0, 40.0, 0.0), (180.0, 150.0, 0.1)])
    width = 5.0
    img = render(ink, 224, plain_spec(stroke_width=width))
    ys, xs = np.where(np.any(img.pixels != 255, axis=2))
    a = np.array([30.0, 40.0])
    b = np.array([180.0, 150.0])
    ab = b - a
    pts = np.column_stack([xs + 0.5, ys + 0.5])
    t = np.clip(((pts - a) @ ab) / (ab @ ab), 0, 1)
    dist = np.hypot(*(a + t[:, None] * ab - pts).T)
    assert dist.max() <= width / 2 + 1.0


def test_ruling_lines_under_ink():
    spec = AugmentationSpec(ruling=Ruling("lines", 2.0, 50.0, (1.0, 0.0, 0.0)))
    from inkforge import DigitalInk

    img = render(DigitalInk(), 224, spec)
    assert tuple(img.pixels[50, 10]) == (255, 0, 0)
    assert tuple(img.pixels[25, 10]) == (255, 255, 255)
    grid = AugmentationSpec(ruling=Ruling("grids", 2.0, 50.0, (1.0, 0.0, 0.0)))
    gimg = render(DigitalInk(), 224, grid)
    assert tuple(gimg.pixels[10, 50]) == (255, 0, 0)


def test_noise_and_blur_change_pixels_deterministically():
    ink = make_ink([(20, 112, 0.0), (200, 112, 0.1)])
    spec = AugmentationSpec(gaussian_noise_std=100.0, box_blur_radius_px=2.0, rng_seed=7)
    a = render(ink, 64, spec)
    b = render(ink, 64, spec)
    assert a == b
    assert not np.all(a.pixels == 255)


# --- sample_augmentation ---


def test_sampler_is_deterministic():
    assert sample_augmentation(99) == sample_augmentation(99)
    assert sample_augmentation(99) != sample_augmentation(100)


def test_sampler_ranges(rng):
    widths = []
    noises = []
    for _ in range(2000):
        spec = sample_augmentation(int(rng.integers(0, 2**63)))
        widths.append(spec.stroke_width_px)
        assert -math.pi / 4 <= spec.rotation_rad <= math.pi / 4
        assert 1.0 <= spec.stroke_width_px <= 12.0
        if spec.gaussian_noise_std is not None:
            noises.append(spec.gaussian_noise_std)
            assert 50.0 <= spec.gaussian_noise_std <= 500.0
        assert 0.0 <= spec.box_blur_radius_px <= 5.0
    assert min(widths) < 2.0 and max(widths) > 11.0
    assert noises, "noise should appear at the default probability"


def test_sampler_respects_probabilities():
    none_probs = AugmentProbs(lines=0.0, grids=0.0, noise=0.0, blur=0.0)
    for seed in range(50):
        spec = sample_augmentation(seed, none_probs)
        assert spec.ruling is None
        assert spec.gaussian_noise_std is None
        assert spec.box_blur_radius_px == 0.0
    always_lines = AugmentProbs(lines=1.0, grids=0.0, noise=0.0, blur=0.0)
    assert all(sample_augmentation(s, always_lines).ruling.kind == "lines" for s in range(20))


def test_probability_validation():
    with pytest.raises(ValidationError, match="lines"):
        AugmentProbs(lines=1.2)
    with pytest.raises(ValidationError, match="exceed 1"):
        AugmentProbs(lines=0.7, grids=0.7)


# --- kv round trip ---


def test_spec_kv_round_trip():
    for seed in (0, 5, 77):
        spec = sample_augmentation(seed)
        assert spec_from_kv(spec_to_kv(spec)) == spec


def test_spec_kv_rejects_unknown_keys():
    with pytest.raises(ValidationError, match="unknown augmentation key"):
        spec_from_kv("wibble=3\n")


# --- fit_image ---


def test_fit_image_wide_input():
    img = RasterImage.filled(448, 224, (1.0, 0.0, 0.0))
    fitted, tfm = fit_image(img, 224)
    assert fitted.width == fitted.height == 224
    assert np.all(fitted.pixels[:56] == 0)
    assert np.all(fitted.pixels[-56:] == 0)
    assert np.all(fitted.pixels[56:168, :, 0] == 255)
    assert tfm.scale == pytest.approx(0.5)


def test_fit_image_identity():
    rng = np.random.default_rng(3)
    img = RasterImage(rng.integers(0, 256, (224, 224, 3), dtype=np.uint8))
    fitted, tfm = fit_image(img, 224)
    assert fitted == img
    assert tfm.is_identity()


def test_fit_image_tall_input_round_trips_corners():
    img = RasterImage.filled(10, 40, (0.5, 0.5, 0.5))
    fitted, tfm = fit_image(img, 224)
    content = np.where(np.any(fitted.pixels != 0, axis=2))
    assert content[0].min() == 0 and content[0].max() == 223  # full height
    assert content[1].max() - content[1].min() + 1 == 56  # scaled to 56x224
    assert content[1].min() == (224 - 56) // 2  # centered horizontally
    for corner in [(0.0, 0.0), (10.0, 40.0)]:
        cx, cy = tfm.apply(*corner)
        bx, by = tfm.inverse().apply(cx, cy)
        assert (bx, by) == pytest.approx(corner, abs=1e-9)
    # forward corners land on the content edges within half a pixel
    x0, y0 = tfm.apply(0.0, 0.0)
    x1, y1 = tfm.apply(10.0, 40.0)
    assert x0 == pytest.approx(content[1].min(), abs=0.5)
    assert y1 == pytest.approx(content[0].max() + 1, abs=0.5)


# --- PNG and draw_strokes ---


def test_png_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    img = RasterImage(rng.integers(0, 256, (20, 30, 3), dtype=np.uint8))
    path = tmp_path / "img.png"
    save_png(img, path)
    assert load_png(path) == img


def test_draw_strokes_composites_over_base():
    base = RasterImage.filled(64, 64)
    out = draw_strokes(base, make_ink([(10, 32, 0.0), (54, 32, 0.1)]), 3.0, (0, 0, 0))
    assert tuple(out.pixels[32, 32]) == (0, 0, 0)
    assert tuple(out.pixels[5, 5]) == (255, 255, 255)
