import math

import numpy as np
import pytest

from app.core.tensor import tensor_read
from app.exceptions import AspectError, GeometryError, InvalidArgumentError
from app.schemas.geometry import GeometrySpec, SlidingPattern, SmallMode
from app.services.geometry_service import overlap_square
from app.services.transform_service import (
    TransformService,
    clamp_resize,
    coherence_report,
    coverage_counts,
    equivalent_side,
    extract_stack,
    resize_baseline,
    window_origins,
)
from app.utils.images import save_png


def test_origins_m4_zero_overlap():
    """2x2 serpentine over an exact tiling"""
    origins = window_origins(20, 20, 10, 1.0, 4, 0.0, SlidingPattern.HORIZONTAL)
    assert origins == [(0, 0), (0, 10), (10, 10), (10, 0)]


def test_origins_m1():
    """A single window sits at the origin"""
    assert window_origins(32, 32, 32, 1.0, 1, 0.0) == [(0, 0)]


def test_origins_dataset_example():
    """973 image, 348 windows, M = 9: offsets 0, 313, 625 in serpentine order"""
    alpha = overlap_square(973, 348, 9)
    origins = window_origins(973, 973, 348, 1.0, 9, alpha, "horizontal")
    assert {a for a, _ in origins} == {0, 313, 625}
    assert origins == [
        (0, 0), (0, 313), (0, 625),
        (313, 625), (313, 313), (313, 0),
        (625, 0), (625, 313), (625, 625),
    ]
    # the last row starts flush left; with an odd sqrt(M) it ends flush right
    assert origins[6] == (625, 0)
    assert origins[-1] == (625, 625)


def test_origins_serpentine_last_row():
    """The serpentine ends at the bottom-left corner when sqrt(M) is even"""
    alpha = overlap_square(100, 30, 16)
    origins = window_origins(100, 100, 30, 1.0, 16, alpha)
    assert origins[0] == (0, 0)
    assert origins[-1] == (70, 0)


def test_origins_unknown_pattern():
    """Unknown patterns are invalid"""
    with pytest.raises(InvalidArgumentError):
        window_origins(20, 20, 10, 1.0, 4, 0.0, "zigzag")


def test_origins_inconsistent_alpha():
    """An overlap not matching (H, h, M) is invalid"""
    with pytest.raises(InvalidArgumentError):
        window_origins(973, 973, 348, 1.0, 9, 0.3)


def test_patterns_visit_same_origins():
    """Horizontal, vertical and spiral patterns are permutations of one grid"""
    alpha = overlap_square(200, 50, 25)
    sets = [
        window_origins(200, 200, 50, 1.0, 25, alpha, p) for p in SlidingPattern
    ]
    assert all(len(s) == 25 for s in sets)
    assert all(len(set(s)) == 25 for s in sets)
    assert set(sets[0]) == set(sets[1]) == set(sets[2])


@pytest.mark.parametrize("pattern", list(SlidingPattern))
def test_patterns_are_time_coherent(pattern):
    """Consecutive windows always intersect"""
    alpha = overlap_square(200, 50, 25)
    origins = window_origins(200, 200, 50, 1.0, 25, alpha, pattern)
    report = coherence_report(origins, 50, 50, alpha)
    assert all(f > 0 for f in report.fractions)


def test_vertical_pattern_goes_down_first():
    """The vertical serpentine walks the first column top to bottom"""
    origins = window_origins(20, 20, 10, 1.0, 4, 0.0, SlidingPattern.VERTICAL)
    assert origins == [(0, 0), (10, 0), (10, 10), (0, 10)]


def test_spiral_pattern_order():
    """The spiral goes clockwise inward and ends in the centre"""
    origins = window_origins(30, 30, 10, 1.0, 9, 0.0, SlidingPattern.SPIRAL)
    assert origins == [(0, 0), (0, 10), (0, 20), (10, 20), (20, 20), (20, 10), (20, 0), (10, 0), (10, 10)]


def test_coherence_exact_dataset_example():
    """Unrounded offsets give overlap 71/696 for all eight pairs"""
    alpha = overlap_square(973, 348, 9)
    origins = window_origins(973, 973, 348, 1.0, 9, alpha, exact=True)
    report = coherence_report(origins, 348, 348, alpha)
    assert len(report.fractions) == 8
    assert report.max_deviation < 1e-9


def test_coherence_zero_overlap():
    """Abutting windows share only an edge"""
    origins = window_origins(20, 20, 10, 1.0, 4, 0.0)
    assert coherence_report(origins, 10, 10, 0.0).fractions == [0.0, 0.0, 0.0]


def test_extract_stack_matches_crop_oracle():
    """Each frame equals an independent crop at its origin"""
    rng = np.random.default_rng(0)
    image = rng.random((3, 973, 973)).astype(np.float32)
    spec = GeometrySpec(m=9, h=348)
    stack = extract_stack(image, spec, "horizontal", "img")
    assert stack.tensor.shape == (9, 3, 348, 348)
    assert stack.alpha == pytest.approx(71 / 696)
    for frame, (a, c) in zip(stack.tensor, stack.origins):
        assert np.array_equal(frame, image[:, a:a + 348, c:c + 348])


def test_extract_stack_m1_identity():
    """A window-sized image with M = 1 is its own single frame"""
    image = np.random.default_rng(1).random((1, 16, 16))
    stack = extract_stack(image, GeometrySpec(m=1, h=16, h_max_clamp=16), "horizontal")
    assert stack.tensor.shape == (1, 1, 16, 16)
    assert np.array_equal(stack.tensor[0], image)


def test_extract_stack_constant_image():
    """Constant images give constant frames"""
    image = np.full((1, 90, 90), 0.25)
    stack = extract_stack(image, GeometrySpec(m=9, h=40), "spiral")
    assert np.all(stack.tensor == 0.25)


def test_extract_stack_aspect_error():
    """A non-square image under gamma = 1 is an aspect error"""
    with pytest.raises(AspectError):
        extract_stack(np.zeros((1, 90, 120)), GeometrySpec(m=9, h=40))


def test_extract_stack_geometry_error():
    """An image taller than sqrt(M) h is a geometry error"""
    with pytest.raises(GeometryError):
        extract_stack(np.zeros((1, 130, 130)), GeometrySpec(m=9, h=40))


def test_extract_stack_no_pixel_synthesis():
    """Stack samples are a sub-multiset of image samples"""
    rng = np.random.default_rng(2)
    image = rng.integers(0, 255, size=(1, 70, 70)).astype(np.float64)
    stack = extract_stack(image, GeometrySpec(m=4, h=40), "horizontal")
    image_values = set(np.unique(image).tolist())
    assert set(np.unique(stack.tensor).tolist()) <= image_values


def test_clamp_resize_untouched():
    """Heights within the clamp range are returned as is"""
    image = np.random.default_rng(3).random((1, 50, 50))
    assert clamp_resize(image, 40, 60) is image


def test_clamp_resize_shrinks_large_images():
    """1226 shrinks to the 973 upper clamp"""
    image = np.zeros((1, 1226, 1226), dtype=np.float32)
    assert clamp_resize(image, 348, 973).shape == (1, 973, 973)


def test_clamp_resize_pad_preserves_sum():
    """Padding centres the image and keeps its pixel sum"""
    image = np.random.default_rng(4).random((1, 418, 418))
    out = clamp_resize(image, 500, 973, SmallMode.PAD)
    assert out.shape == (1, 500, 500)
    assert out.sum() == pytest.approx(image.sum())
    assert np.array_equal(out[:, 41:459, 41:459], image)


def test_clamp_resize_magnify():
    """Magnify mode resizes small images up to the lower clamp"""
    image = np.ones((1, 30, 30), dtype=np.float32)
    out = clamp_resize(image, 40, 80, "magnify")
    assert out.shape == (1, 40, 40)
    assert np.allclose(out, 1.0)


def _random_feasible(rng):
    root = int(rng.integers(2, 5))
    h = int(rng.integers(8, 40))
    H = int(rng.integers(h + 1, root * h + 1))
    return H, h, root * root


def test_coverage_and_oversampling_randomized():
    """Full coverage, bounded oversampling and near-alpha overlaps on random transforms"""
    rng = np.random.default_rng(5)
    for _ in range(1000):
        H, h, m = _random_feasible(rng)
        alpha = overlap_square(H, h, m)
        origins = window_origins(H, H, h, 1.0, m, alpha)
        counts = coverage_counts(origins, H, H, h, h)
        assert counts.min() >= 1
        bound = math.ceil(1.0 / (1.0 - alpha) - 1e-9) ** 2
        assert counts.max() <= bound
        report = coherence_report(origins, h, h, alpha)
        assert report.max_deviation <= 2.0 / h + 1e-12


def test_equivalent_side():
    """348 x 348 x 9 holds as many samples as a 1044 square"""
    assert equivalent_side(348, 348, 9) == 1044


def test_resize_baseline_modes():
    """Large images shrink; small ones are padded or magnified"""
    big = np.ones((1, 80, 80), dtype=np.float32)
    small = np.ones((1, 30, 30), dtype=np.float32)
    assert resize_baseline(big, 50, "pad").shape == (1, 50, 50)
    padded = resize_baseline(small, 50, "pad")
    assert padded.shape == (1, 50, 50) and padded.sum() == pytest.approx(900.0)
    assert np.allclose(resize_baseline(small, 50, "magnify"), 1.0)
    assert resize_baseline(small, 20, "shrink").shape == (1, 20, 20)


def test_transform_directory(tmp_path):
    """One (M, C, h, w) tensor and one log line per PNG"""
    rng = np.random.default_rng(6)
    source = tmp_path / "images"
    for name in ("a", "b"):
        save_png(rng.random((1, 97, 97)), source / f"{name}.png")
    service = TransformService(GeometrySpec(m=9, h=35), pattern="horizontal")
    records = service.transform_directory(source, tmp_path / "out")
    assert [r.image_id for r in records] == ["a", "b"]
    stack = tensor_read(tmp_path / "out" / "stacks" / "a.ndt")
    assert stack.shape == (9, 1, 35, 35)
    log = (tmp_path / "out" / "transform.log").read_text().splitlines()
    assert log[0].startswith("a, 97, 97, ")
    assert log[0].endswith(", horizontal")


def test_transform_is_thread_count_invariant(tmp_path):
    """Outputs do not depend on the worker count"""
    rng = np.random.default_rng(7)
    source = tmp_path / "images"
    for k in range(4):
        save_png(rng.random((3, 60 + 5 * k, 60 + 5 * k)), source / f"i{k}.png")
    spec = GeometrySpec(m=4, h=40)
    TransformService(spec, threads=1).transform_directory(source, tmp_path / "one")
    TransformService(spec, threads=3).transform_directory(source, tmp_path / "three")
    for k in range(4):
        one = (tmp_path / "one" / "stacks" / f"i{k}.ndt").read_bytes()
        three = (tmp_path / "three" / "stacks" / f"i{k}.ndt").read_bytes()
        assert one == three
