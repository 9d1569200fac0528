"""Shared fixtures: synthetic scenes and precomputed pipeline stages."""

from types import SimpleNamespace

import numpy as np
import pytest

import sempal

# Canonical two-region scene: only the red channel differs between halves,
# so the normalized semantic field forms two tight blobs and the palette
# resolves to exactly one entry per region.
REGION_A = np.array([0.20, 0.40, 0.65])
REGION_B = np.array([0.75, 0.40, 0.65])
TWO_REGION_CFG = dict(w_c=1.0, w_s=1.5)
TWO_REGION_BLUR = 4.0


def make_two_region_image(size: int = 256) -> sempal.ImageRGB:
    arr = np.zeros((size, size, 3))
    arr[:, : size // 2] = REGION_A
    arr[:, size // 2:] = REGION_B
    return sempal.ImageRGB.from_array(arr)


def make_gradient_image(width: int = 96, height: int = 64) -> sempal.ImageRGB:
    xs = np.linspace(0.1, 0.9, width)
    ys = np.linspace(0.2, 0.8, height)
    arr = np.zeros((height, width, 3))
    arr[:, :, 0] = xs[None, :]
    arr[:, :, 1] = ys[:, None]
    arr[:, :, 2] = 0.5
    return sempal.ImageRGB.from_array(arr)


def make_noise_image(width: int = 64, height: int = 64, seed: int = 11) -> sempal.ImageRGB:
    rng = np.random.default_rng(seed)
    return sempal.ImageRGB.from_array(rng.random((height, width, 3)))


@pytest.fixture(scope="session")
def two_region():
    """Full pipeline state for the canonical two-region scene."""
    img = make_two_region_image()
    cfg = sempal.PaletteConfig(**TWO_REGION_CFG)
    field = sempal.fallback_field(img, blur_sigma=TWO_REGION_BLUR)
    pal = sempal.extract_palette(img, field, cfg, sempal.SuperpixelConfig(n_target=200))
    model = sempal.fit_lambda(pal)
    wf = sempal.weight_field(img, field, model)
    # Index of the palette entry representing each region.
    a_entry = int(np.argmin(np.linalg.norm(pal.colors() - REGION_A, axis=1)))
    b_entry = int(np.argmin(np.linalg.norm(pal.colors() - REGION_B, axis=1)))
    return SimpleNamespace(
        img=img, field=field, cfg=cfg, palette=pal, model=model, wf=wf,
        a_entry=a_entry, b_entry=b_entry,
    )


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
