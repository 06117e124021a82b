import numpy as np
import pytest

from irisid.errors import NoBoundaryError
from irisid.imaging import (
    EyeParams,
    GrayImage,
    RgbImage,
    generate_synthetic_eye,
    photometric_align,
    to_gray,
)
from irisid.segmentation import (
    CHECK_CONCENTRICITY,
    CHECK_CONGESTION,
    Circle,
    EyeGeometry,
    find_iris,
    find_pupil,
    morphology_check,
    sclera_redness,
)


def aligned_gray(params):
    return photometric_align(to_gray(generate_synthetic_eye(params)))


class TestFindPupil:
    def test_noise_free_recovery(self):
        g = aligned_gray(EyeParams(texture_seed=4))
        c = find_pupil(g)
        assert abs(c.cx - 128) <= 2 and abs(c.cy - 128) <= 2 and abs(c.r - 30) <= 2

    def test_uniform_image_no_boundary(self):
        g = GrayImage.from_array(np.full((128, 128), 128, np.uint8))
        with pytest.raises(NoBoundaryError):
            find_pupil(g)

    def test_noisy_recovery(self):
        # full 100-seed sweep lives in the acceptance suite
        for seed in range(10):
            g = aligned_gray(EyeParams(texture_seed=seed, noise_sigma=8.0))
            c = find_pupil(g)
            assert abs(c.cx - 128) <= 3 and abs(c.cy - 128) <= 3 and abs(c.r - 30) <= 3

    def test_translation_equivariance(self):
        base = find_pupil(aligned_gray(EyeParams(texture_seed=6)))
        for dx, dy in [(10, 0), (0, -15), (12, 9)]:
            g = aligned_gray(EyeParams(texture_seed=6, center=(128 + dx, 128 + dy)))
            c = find_pupil(g)
            assert abs(c.cx - (base.cx + dx)) <= 1
            assert abs(c.cy - (base.cy + dy)) <= 1

    def test_deterministic(self):
        g = aligned_gray(EyeParams(texture_seed=2, noise_sigma=5.0))
        assert find_pupil(g) == find_pupil(g)


class TestFindIris:
    def test_noise_free_recovery(self):
        g = aligned_gray(EyeParams(texture_seed=4))
        pupil = find_pupil(g)
        iris = find_iris(g, pupil)
        assert abs(iris.cx - 128) <= 3 and abs(iris.cy - 128) <= 3
        assert abs(iris.r - 90) <= 3
        assert pupil.r < iris.r

    def test_empty_search_range(self):
        g = aligned_gray(EyeParams(texture_seed=4))
        with pytest.raises(NoBoundaryError):
            find_iris(g, Circle(128.0, 128.0, 110.0))

    def test_illumination_invariance(self):
        for seed in range(20):
            lo = aligned_gray(EyeParams(texture_seed=seed, illumination_gain=0.8))
            hi = aligned_gray(EyeParams(texture_seed=seed, illumination_gain=1.2))
            p_lo, p_hi = find_pupil(lo), find_pupil(hi)
            assert p_lo == p_hi
            assert find_iris(lo, p_lo) == find_iris(hi, p_hi)


def ring_image(inner_rgb, outer_rgb, size=128, r=40):
    yy, xx = np.mgrid[0:size, 0:size]
    d = np.hypot(xx - size / 2, yy - size / 2)
    a = np.where((d <= r)[..., None], np.array(inner_rgb), np.array(outer_rgb))
    return RgbImage.from_array(a.astype(np.uint8))


GEOM = EyeGeometry(Circle(64.0, 64.0, 15.0), Circle(64.0, 64.0, 40.0))


class TestScleraRedness:
    def test_gray_sclera(self):
        img = ring_image((100, 100, 100), (80, 80, 80))
        assert sclera_redness(img, GEOM) == pytest.approx(1 / 3)

    def test_pure_red_sclera(self):
        img = ring_image((100, 100, 100), (255, 0, 0))
        assert sclera_redness(img, GEOM) == pytest.approx(1.0)

    def test_black_sclera_skipped(self):
        img = ring_image((100, 100, 100), (0, 0, 0))
        assert sclera_redness(img, GEOM) == pytest.approx(1 / 3)

    def test_generator_monotonic(self):
        geom = EyeGeometry(Circle(128.0, 128.0, 30.0), Circle(128.0, 128.0, 90.0))
        red = sclera_redness(generate_synthetic_eye(EyeParams(texture_seed=1, redness=0.6)), geom)
        plain = sclera_redness(generate_synthetic_eye(EyeParams(texture_seed=1, redness=0.0)), geom)
        assert red > plain

    def test_gain_invariance(self):
        geom = EyeGeometry(Circle(128.0, 128.0, 30.0), Circle(128.0, 128.0, 90.0))
        vals = [
            sclera_redness(generate_synthetic_eye(
                EyeParams(texture_seed=1, redness=0.3, illumination_gain=g)), geom)
            for g in (0.8, 1.0, 1.2)
        ]
        assert max(vals) - min(vals) < 0.01


class TestMorphology:
    def test_default_eye_passes(self):
        img = generate_synthetic_eye(EyeParams(texture_seed=9))
        geom = EyeGeometry(Circle(128.0, 128.0, 30.0), Circle(128.0, 128.0, 90.0))
        report = morphology_check(img, geom)
        assert report.passed and report.failures == []

    def test_concentricity_failure(self):
        img = generate_synthetic_eye(EyeParams(texture_seed=9))
        geom = EyeGeometry(Circle(128.0 + 27, 128.0, 30.0), Circle(128.0, 128.0, 90.0))
        report = morphology_check(img, geom)
        assert CHECK_CONCENTRICITY in report.failures and not report.passed

    def test_congestion_is_advisory(self):
        img = generate_synthetic_eye(EyeParams(texture_seed=9, redness=0.9))
        geom = EyeGeometry(Circle(128.0, 128.0, 30.0), Circle(128.0, 128.0, 90.0))
        report = morphology_check(img, geom)
        assert CHECK_CONGESTION in report.failures
        assert report.passed

    def test_report_serializes(self):
        img = generate_synthetic_eye(EyeParams(texture_seed=9))
        geom = EyeGeometry(Circle(128.0, 128.0, 30.0), Circle(128.0, 128.0, 90.0))
        d = morphology_check(img, geom).to_dict()
        assert d["passed"] is True and d["failures"] == []
