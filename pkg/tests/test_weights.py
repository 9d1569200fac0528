"""weights: kernel bandwidths, interpolation exactness, weight fields."""

import numpy as np
import pytest

import oracles
import sempal
from sempal.features import FeaturePoint6
from sempal.palette import PaletteConfig, SemanticPalette
from sempal.weights import (
    compute_sigmas,
    fit_lambda,
    pixel_weights,
    rbf_kernel,
    weight_field,
)


def _palette(vectors):
    entries = [FeaturePoint6(C=np.asarray(v[:3], float), S=np.asarray(v[3:], float))
               for v in vectors]
    return SemanticPalette(entries=entries, config=PaletteConfig())


def _random_palette(rng, k, min_dist=0.05):
    cfg = PaletteConfig()
    while True:
        vecs = rng.random((k, 6))
        ok = True
        for i in range(k):
            for j in range(i + 1, k):
                d = cfg.w_c * np.linalg.norm(vecs[i, :3] - vecs[j, :3]) + \
                    cfg.w_s * np.linalg.norm(vecs[i, 3:] - vecs[j, 3:])
                if d < min_dist:
                    ok = False
        if ok:
            return _palette(vecs)


def test_sigmas_single_entry():
    pal = _palette([[0.5] * 6])
    assert compute_sigmas(pal) == (1.0, 1.0)


def test_sigmas_single_pair():
    pal = _palette([[0.0, 0.0, 0.0, 0.0, 0.0, 0.0], [0.6, 0.0, 0.0, 0.2, 0.0, 0.0]])
    sigma_c, sigma_s = compute_sigmas(pal)
    assert sigma_c == pytest.approx(0.6, abs=1e-12)
    assert sigma_s == pytest.approx(0.2, abs=1e-12)


def test_sigmas_mean_of_pairs():
    # colors on a line: pairwise distances 0.3, 0.6, 0.9 -> mean 0.6
    pal = _palette([
        [0.0, 0.0, 0.0, 0.1, 0.2, 0.3],
        [0.3, 0.0, 0.0, 0.5, 0.2, 0.3],
        [0.9, 0.0, 0.0, 0.9, 0.2, 0.3],
    ])
    sigma_c, _ = compute_sigmas(pal)
    assert sigma_c == pytest.approx(0.6, abs=1e-12)


def test_sigmas_zero_mean_falls_back():
    pal = _palette([[0.5, 0.5, 0.5, 0.1, 0.1, 0.1], [0.5, 0.5, 0.5, 0.9, 0.1, 0.1]])
    sigma_c, sigma_s = compute_sigmas(pal)
    assert sigma_c == 1.0
    assert sigma_s == pytest.approx(0.8, abs=1e-12)


def test_kernel_identity_and_closed_form():
    p = FeaturePoint6(C=[0.2, 0.3, 0.4], S=[0.5, 0.6, 0.7])
    assert rbf_kernel(p, p, 0.5, 0.5) == 1.0
    q = FeaturePoint6(C=[0.7, 0.3, 0.4], S=[0.5, 0.6, 0.7])  # color offset 0.5 = sigma_c
    assert rbf_kernel(q, p, 0.5, 1.0) == pytest.approx(np.exp(-0.5), rel=1e-12)


def test_kernel_monotone_decrease():
    p = FeaturePoint6(C=[0.5] * 3, S=[0.5] * 3)
    values = []
    for offset in (0.0, 0.1, 0.2, 0.3, 0.4):
        q = FeaturePoint6(C=[0.5 + offset, 0.5, 0.5], S=[0.5] * 3)
        values.append(rbf_kernel(q, p, 0.4, 0.4))
    assert all(a > b for a, b in zip(values, values[1:]))


def test_fit_lambda_single_entry():
    model = fit_lambda(_palette([[0.5] * 6]))
    assert np.array_equal(model.lam, [[1.0]])


def test_interpolation_exactness_vs_elimination_oracle(rng):
    for k in (2, 3, 5, 8):
        pal = _random_palette(rng, k)
        model = fit_lambda(pal)
        colors, semantics = pal.colors(), pal.semantics()
        gram = np.zeros((k, k))
        for l in range(k):
            for j in range(k):
                gram[l, j] = rbf_kernel(pal.entries[l], pal.entries[j],
                                        model.sigma_c, model.sigma_s)
        assert np.allclose(gram @ model.lam.T, np.eye(k), atol=1e-8)
        ref = oracles.gauss_jordan_solve_identity(gram)
        assert np.allclose(model.lam, ref, atol=1e-6)


def test_lambda_permutation_symmetry():
    base = [
        [0.2, 0.2, 0.2, 0.3, 0.3, 0.3],
        [0.8, 0.8, 0.8, 0.7, 0.7, 0.7],
        [0.5, 0.5, 0.5, 0.5, 0.5, 0.5],
    ]
    swapped = [base[1], base[0], base[2]]
    lam_a = fit_lambda(_palette(base)).lam
    lam_b = fit_lambda(_palette(swapped)).lam
    perm = np.array([1, 0, 2])
    assert np.allclose(lam_a[np.ix_(perm, perm)], lam_b, atol=1e-12)


def test_pixel_weights_one_hot_at_entries(rng):
    pal = _random_palette(rng, 5)
    model = fit_lambda(pal)
    for i, entry in enumerate(pal.entries):
        w = pixel_weights(entry, model)
        expected = np.zeros(5)
        expected[i] = 1.0
        assert np.allclose(w, expected, atol=1e-6)


def test_pixel_weights_k1_always_one(rng):
    model = fit_lambda(_palette([[0.5] * 6]))
    for _ in range(5):
        x = FeaturePoint6(C=rng.random(3), S=rng.random(3))
        assert pixel_weights(x, model) == pytest.approx([1.0])


def test_pixel_weights_match_scalar_oracle(rng):
    pal = _random_palette(rng, 4)
    model = fit_lambda(pal)
    entries6 = pal.vectors()
    for _ in range(25):
        x = FeaturePoint6(C=rng.random(3), S=rng.random(3))
        ours = pixel_weights(x, model)
        ref = oracles.rbf_weights_scalar(
            x.as_vector(), entries6, model.sigma_c, model.sigma_s, model.lam
        )
        assert np.allclose(ours, ref, atol=1e-10)


def test_weight_field_constant_k1():
    img = sempal.ImageRGB.from_array(np.full((8, 10, 3), 0.42))
    field = sempal.fallback_field(img, blur_sigma=2)
    model = fit_lambda(_palette([[0.42, 0.42, 0.42, 0.0, 0.0, 0.0]]))
    wf = weight_field(img, field, model)
    assert np.all(wf.data == 1.0)


def test_weight_field_partition_of_unity(two_region):
    sums = two_region.wf.data.sum(axis=2)
    assert np.max(np.abs(sums - 1.0)) < 1e-6
    assert np.min(two_region.wf.data) >= 0.0


def test_weight_field_two_region_maps(two_region):
    # Core pixels, 16 px clear of the feature blur around the boundary.
    w = two_region.wf.data
    half = two_region.img.width // 2
    a_core = w[:, : half - 16, two_region.a_entry]
    b_core = w[:, half + 16:, two_region.a_entry]
    assert a_core.min() > 0.9
    assert b_core.max() < 0.1


def test_weights_continuous_in_input(rng):
    pal = _random_palette(rng, 4)
    model = fit_lambda(pal)
    eps = 1e-5
    worst = 0.0
    for _ in range(30):
        x = FeaturePoint6(C=0.1 + 0.8 * rng.random(3), S=0.1 + 0.8 * rng.random(3))
        w0 = pixel_weights(x, model)
        if np.any(w0 < 1e-3):  # stay away from the clamp boundary
            continue
        for c in range(3):
            bump = x.C.copy()
            bump[c] += eps
            w1 = pixel_weights(FeaturePoint6(C=bump, S=x.S), model)
            worst = max(worst, float(np.max(np.abs(w1 - w0))) / eps)
    print(f"empirical weight Lipschitz bound: {worst:.2f}")
    assert worst < 1e3


def test_permuting_entries_permutes_channels(rng):
    vecs = rng.random((4, 6))
    pal = _palette(vecs)
    perm = [2, 0, 3, 1]
    pal_p = _palette(vecs[perm])
    model, model_p = fit_lambda(pal), fit_lambda(pal_p)
    for _ in range(10):
        x = FeaturePoint6(C=rng.random(3), S=rng.random(3))
        w = pixel_weights(x, model)
        w_p = pixel_weights(x, model_p)
        assert np.allclose(w[perm], w_p, atol=1e-10)


def test_near_duplicate_entries_warn_and_still_interpolate():
    vecs = [[0.5, 0.5, 0.5, 0.5, 0.5, 0.5],
            [0.5, 0.5, 0.5, 0.5, 0.5, 0.5 + 1e-9],
            [0.1, 0.1, 0.1, 0.9, 0.9, 0.9]]
    with pytest.warns(UserWarning):
        model = fit_lambda(_palette(vecs))
    assert np.isfinite(model.lam).all()
