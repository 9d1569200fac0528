"""Image-pair quality metrics: MSE, PSNR and single-scale SSIM."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import correlate1d

from .errors import DataError
from .imgio import ImageRGB

PSNR_CAP = 99.0

_SSIM_WINDOW = 11
_SSIM_SIGMA = 1.5
_K1 = 0.01
_K2 = 0.03


@dataclass
class MetricReport:
    mse: float
    psnr: float
    ssim: float


def _check_dims(a: ImageRGB, b: ImageRGB) -> None:
    if (a.width, a.height) != (b.width, b.height):
        raise DataError(
            f"image dimensions differ: {a.width}x{a.height} vs {b.width}x{b.height}"
        )


def mse(a: ImageRGB, b: ImageRGB) -> float:
    """Mean squared error over all pixels and channels, values in [0,1]."""
    _check_dims(a, b)
    return float(((a.data - b.data) ** 2).mean())


def psnr(a: ImageRGB, b: ImageRGB) -> float:
    """10*log10(1/mse) in dB; identical images report the 99 dB cap."""
    err = mse(a, b)
    if err == 0.0:
        return PSNR_CAP
    return float(10.0 * np.log10(1.0 / err))


def _luminance(img: ImageRGB) -> np.ndarray:
    d = img.data
    return 0.299 * d[:, :, 0] + 0.587 * d[:, :, 1] + 0.114 * d[:, :, 2]


def gaussian_window(size: int = _SSIM_WINDOW, sigma: float = _SSIM_SIGMA) -> np.ndarray:
    """Normalized 2-D Gaussian window used by SSIM."""
    half = (size - 1) / 2.0
    offsets = np.arange(size, dtype=np.float64) - half
    g = np.exp(-(offsets ** 2) / (2 * sigma ** 2))
    g /= g.sum()
    return np.outer(g, g)


def _smooth_valid(img: np.ndarray, g1d: np.ndarray) -> np.ndarray:
    half = (len(g1d) - 1) // 2
    tmp = correlate1d(img, g1d, axis=0, mode="constant")
    tmp = correlate1d(tmp, g1d, axis=1, mode="constant")
    return tmp[half:-half, half:-half]


def ssim(a: ImageRGB, b: ImageRGB) -> float:
    """Single-scale SSIM on luminance, 11x11 Gaussian window, averaged over valid positions."""
    _check_dims(a, b)
    if min(a.width, a.height) < _SSIM_WINDOW:
        raise DataError(f"image smaller than the {_SSIM_WINDOW}x{_SSIM_WINDOW} SSIM window")
    ya = _luminance(a)
    yb = _luminance(b)
    half = (_SSIM_WINDOW - 1) / 2.0
    offsets = np.arange(_SSIM_WINDOW, dtype=np.float64) - half
    g1d = np.exp(-(offsets ** 2) / (2 * _SSIM_SIGMA ** 2))
    g1d /= g1d.sum()

    mu_a = _smooth_valid(ya, g1d)
    mu_b = _smooth_valid(yb, g1d)
    var_a = _smooth_valid(ya * ya, g1d) - mu_a * mu_a
    var_b = _smooth_valid(yb * yb, g1d) - mu_b * mu_b
    cov = _smooth_valid(ya * yb, g1d) - mu_a * mu_b

    c1 = _K1 ** 2  # dynamic range is 1.0
    c2 = _K2 ** 2
    num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
    den = (mu_a ** 2 + mu_b ** 2 + c1) * (var_a + var_b + c2)
    return float((num / den).mean())


def report(a: ImageRGB, b: ImageRGB) -> MetricReport:
    return MetricReport(mse=mse(a, b), psnr=psnr(a, b), ssim=ssim(a, b))
