"""superpixels: SLIC segmentation properties and centroid sampling."""

import numpy as np
from scipy import ndimage

import sempal
from sempal.superpixels import rgb_to_lab, slic_segment


def _uniform_image(size=64, color=(0.5, 0.5, 0.5)):
    return sempal.ImageRGB.from_array(np.full((size, size, 3), color, dtype=np.float64))


def _split_image(size=64):
    arr = np.zeros((size, size, 3))
    arr[:, : size // 2] = [.95, 0.05, 0.05]
    arr[:, size // 2:] = [0.05, 0.05, .95]
    return sempal.ImageRGB.from_array(arr)


def test_single_superpixel():
    sp = slic_segment(_uniform_image(16), n_target=1)
    assert sp.n == 1
    assert np.all(sp.labels == 0)
    assert sp.sizes[0] == 256


def test_uniform_image_near_square_segments():
    sp = slic_segment(_uniform_image(64), n_target=16)
    assert sp.n == 16
    assert sp.sizes.sum() == 64 * 64
    expected = 64 * 64 / 16
    assert np.all(sp.sizes >= expected * 0.7)
    assert np.all(sp.sizes <= expected * 1.3)


def test_color_boundary_respected():
    img = _split_image(64)
    sp = slic_segment(img, n_target=8, compactness=1.0)
    half = 32
    for i in range(sp.n):
        ys, xs = np.nonzero(sp.labels == i)
        assert xs.max() < half or xs.min() >= half, f"segment {i} spans the color boundary"


def test_partition_and_contiguous_ids(two_region):
    sp = slic_segment(two_region.img, n_target=150)
    assert sp.sizes.sum() == two_region.img.width * two_region.img.height
    assert sorted(np.unique(sp.labels)) == list(range(sp.n))
    assert len(sp.centroid_pixels) == sp.n


def test_every_segment_4_connected():
    img = _split_image(48)
    sp = slic_segment(img, n_target=12, compactness=5.0)
    four = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]])
    for i in range(sp.n):
        _, n_comp = ndimage.label(sp.labels == i, structure=four)
        assert n_comp == 1


def test_deterministic(rng):
    img = sempal.ImageRGB.from_array(rng.random((40, 56, 3)))
    a = slic_segment(img, n_target=30)
    b = slic_segment(img, n_target=30)
    assert np.array_equal(a.labels, b.labels)
    assert a.centroid_pixels == b.centroid_pixels


def test_per_pixel_target_does_not_crash(rng):
    img = sempal.ImageRGB.from_array(rng.random((12, 12, 3)))
    sp = slic_segment(img, n_target=144)
    assert sp.sizes.sum() == 144
    assert sp.n >= 1


def test_centroid_pixels_carry_own_label():
    img = _split_image(32)
    sp = slic_segment(img, n_target=6)
    for i, (x, y) in enumerate(sp.centroid_pixels):
        assert sp.labels[y, x] == i


def test_centroid_samples_single_superpixel():
    img = _uniform_image(4, color=(0.25, 0.5, 0.75))
    field = sempal.fallback_field(img, blur_sigma=1)
    sp = slic_segment(img, n_target=1)
    samples = sempal.centroid_samples(img, field, sp)
    assert len(samples) == 1
    assert samples[0].weight == 16
    assert np.allclose(samples[0].point.C, [0.25, 0.5, 0.75])


def test_sample_weights_sum_to_pixel_count(two_region):
    sp = slic_segment(two_region.img, n_target=60)
    samples = sempal.centroid_samples(two_region.img, two_region.field, sp)
    assert sum(s.weight for s in samples) == two_region.img.width * two_region.img.height
    assert all(s.weight > 0 for s in samples)
    assert [s.source_id for s in samples] == list(range(sp.n))


def test_constant_image_samples_share_color():
    img = _uniform_image(24, color=(0.3, 0.6, 0.9))
    field = sempal.fallback_field(img, blur_sigma=2)
    sp = slic_segment(img, n_target=9)
    samples = sempal.centroid_samples(img, field, sp)
    for s in samples:
        assert np.allclose(s.point.C, [0.3, 0.6, 0.9])


def test_rgb_to_lab_reference_values():
    lab = rgb_to_lab(np.array([[[1.0, 1.0, 1.0]], [[0.0, 0.0, 0.0]]]))
    assert np.allclose(lab[0, 0], [100.0, 0.0, 0.0], atol=0.01)
    assert np.allclose(lab[1, 0], [0.0, 0.0, 0.0], atol=0.01)
    red = rgb_to_lab(np.array([[[1.0, 0.0, 0.0]]]))[0, 0]
    assert np.allclose(red, [53.24, 80.09, 67.20], atol=0.05)
