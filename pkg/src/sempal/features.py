"""Reduce raw per-pixel features to the 3-D semantic half of the 6-D feature space.

High-dimensional feature tensors come from an external network; when none
is available a deterministic fallback (blurred color + position) stands in
so the rest of the pipeline stays testable.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from .errors import DataError
from .imgio import ImageRGB, RawFeatureTensor


@dataclass
class FeatureField:
    """Per-pixel 3-D semantic vectors: (height, width, 3) float64."""

    width: int
    height: int
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.shape != (self.height, self.width, 3):
            raise DataError(
                f"feature field shape {self.data.shape} does not match "
                f"{self.height}x{self.width}x3"
            )

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "FeatureField":
        arr = np.asarray(arr, dtype=np.float64)
        return cls(width=arr.shape[1], height=arr.shape[0], data=arr)


@dataclass
class FeaturePoint6:
    """A pixel seen as a 6-D point: color C and semantic S, each in [0,1]^3."""

    C: np.ndarray
    S: np.ndarray

    def __post_init__(self):
        self.C = np.asarray(self.C, dtype=np.float64).reshape(3)
        self.S = np.asarray(self.S, dtype=np.float64).reshape(3)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.C, self.S])


def pca_reduce(raw: RawFeatureTensor, target_dim: int = 3) -> FeatureField:
    """Project pixel features onto their top principal axes.

    Axes are ordered by descending eigenvalue of the mean-centered
    covariance; each axis is flipped so its largest-magnitude loading is
    positive, making repeat runs bit-identical. If the covariance rank is
    below target_dim the missing output channels are zero.

    Returns an un-normalized field; callers follow with normalize_features.
    """
    n_pixels = raw.width * raw.height
    if raw.dim < target_dim:
        raise DataError(f"cannot reduce dim {raw.dim} to {target_dim}")
    if n_pixels < target_dim + 1:
        raise DataError(f"need at least {target_dim + 1} pixels for PCA")
    x = raw.data.reshape(n_pixels, raw.dim).astype(np.float64)
    centered = x - x.mean(axis=0)
    cov = centered.T @ centered / (n_pixels - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    eigvals = eigvals[order]
    eigvecs = eigvecs[:, order]

    scale = max(float(eigvals[0]), 0.0)
    rank = int(np.sum(eigvals > scale * 1e-12)) if scale > 0.0 else 0
    usable = min(rank, target_dim)
    if usable < target_dim:
        warnings.warn(
            f"feature covariance rank {usable} < {target_dim}; "
            "padding missing axes with zeros"
        )

    projected = np.zeros((n_pixels, target_dim), dtype=np.float64)
    if usable > 0:
        axes = eigvecs[:, :usable]
        # Sign convention: largest-magnitude loading of each axis positive.
        flips = np.where(axes[np.argmax(np.abs(axes), axis=0), np.arange(usable)] < 0, -1.0, 1.0)
        axes = axes * flips
        projected[:, :usable] = centered @ axes
    return FeatureField(
        width=raw.width, height=raw.height,
        data=projected.reshape(raw.height, raw.width, target_dim),
    )


def normalize_features(field: FeatureField) -> FeatureField:
    """Min-max scale each channel to [0, 1]; a constant channel maps to 0."""
    data = field.data
    if not np.isfinite(data).all():
        raise DataError("feature field contains non-finite values")
    out = np.zeros_like(data)
    for c in range(data.shape[2]):
        lo = data[:, :, c].min()
        hi = data[:, :, c].max()
        if hi > lo:
            out[:, :, c] = (data[:, :, c] - lo) / (hi - lo)
    return FeatureField(width=field.width, height=field.height, data=out)


def fallback_features(img: ImageRGB, blur_sigma: float = 8.0) -> RawFeatureTensor:
    """Deterministic network substitute: blurred RGB plus normalized coordinates.

    Blur uses a reflective border. Spatially coherent, similarly colored
    regions end up close in this 5-D space, which is enough semantics for
    testing the downstream pipeline.
    """
    h, w = img.height, img.width
    blurred = gaussian_filter(img.data, sigma=(blur_sigma, blur_sigma, 0), mode="reflect")
    xs = np.arange(w, dtype=np.float64) / (w - 1) if w > 1 else np.zeros(1)
    ys = np.arange(h, dtype=np.float64) / (h - 1) if h > 1 else np.zeros(1)
    grid_x = np.tile(xs[None, :], (h, 1))
    grid_y = np.tile(ys[:, None], (1, w))
    data = np.concatenate(
        [blurred, grid_x[:, :, None], grid_y[:, :, None]], axis=2
    ).astype(np.float32)
    return RawFeatureTensor(width=w, height=h, dim=5, data=data)


def feature_point(img: ImageRGB, field: FeatureField, x: int, y: int) -> FeaturePoint6:
    """The 6-D feature point at pixel (x, y)."""
    if not (0 <= x < img.width and 0 <= y < img.height):
        raise DataError(f"feature point ({x}, {y}) out of bounds")
    if (field.width, field.height) != (img.width, img.height):
        raise DataError("image and feature field dimensions differ")
    return FeaturePoint6(C=img.data[y, x].copy(), S=field.data[y, x].copy())


def prepare_field(raw: RawFeatureTensor) -> FeatureField:
    """Turn a raw tensor into the normalized 3-D field.

    dim > 3 tensors are PCA-reduced first; dim == 3 tensors (already
    reduced) are only normalized, which is idempotent on normalized input.
    """
    if raw.dim == 3:
        field = FeatureField(width=raw.width, height=raw.height,
                             data=raw.data.astype(np.float64))
    else:
        field = pca_reduce(raw, target_dim=3)
    return normalize_features(field)


def fallback_field(img: ImageRGB, blur_sigma: float = 8.0) -> FeatureField:
    """Semantic field for images without network features.

    Only the blurred-color channels of the fallback tensor feed the field:
    min-max normalization would stretch the coordinate channels of a flat
    image to full range, manufacturing structure where there is none. A
    constant image therefore maps to a constant (all-zero) field and a
    two-region image to two tight blobs.
    """
    raw = fallback_features(img, blur_sigma=blur_sigma)
    colors = RawFeatureTensor(
        width=raw.width, height=raw.height, dim=3, data=raw.data[:, :, :3]
    )
    return prepare_field(colors)
