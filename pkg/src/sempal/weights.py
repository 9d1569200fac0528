"""Per-pixel similarity weights to palette entries.

A Gaussian RBF interpolant is fitted so each entry's basis function is
exactly one at that entry and zero at the others; evaluating, clamping and
normalizing the basis values gives a partition-of-unity weight field.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DataError, NumericalError
from .features import FeatureField, FeaturePoint6
from .imgio import ImageRGB
from .palette import SemanticPalette

_COND_LIMIT = 1e12
_RIDGE = 1e-10


@dataclass
class RbfModel:
    """Fitted interpolation model; immutable and shareable across threads."""

    palette: SemanticPalette
    sigma_c: float
    sigma_s: float
    lam: np.ndarray  # (k, k); row i holds the coefficients of basis i


@dataclass
class WeightField:
    """Per-pixel normalized weights: (height, width, k), rows sum to 1."""

    width: int
    height: int
    k: int
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.shape != (self.height, self.width, self.k):
            raise DataError(
                f"weight field shape {self.data.shape} does not match "
                f"{self.height}x{self.width}x{self.k}"
            )


def compute_sigmas(palette: SemanticPalette) -> tuple[float, float]:
    """Kernel bandwidths: mean pairwise distance among entries, per component.

    With a single entry, or a zero mean (coincident components), the
    bandwidth falls back to 1.0 so the kernel degenerates gracefully.
    """
    colors = palette.colors()
    semantics = palette.semantics()
    k = palette.k
    if k < 2:
        return 1.0, 1.0
    iu = np.triu_indices(k, 1)
    sigma_c = float(np.linalg.norm(colors[iu[0]] - colors[iu[1]], axis=1).mean())
    sigma_s = float(np.linalg.norm(semantics[iu[0]] - semantics[iu[1]], axis=1).mean())
    return (sigma_c if sigma_c > 0 else 1.0, sigma_s if sigma_s > 0 else 1.0)


def rbf_kernel(x: FeaturePoint6, p: FeaturePoint6, sigma_c: float, sigma_s: float) -> float:
    """Product of color and semantic Gaussians; 1 at x == p."""
    dc2 = float(((x.C - p.C) ** 2).sum())
    ds2 = float(((x.S - p.S) ** 2).sum())
    return float(np.exp(-dc2 / (2 * sigma_c ** 2)) * np.exp(-ds2 / (2 * sigma_s ** 2)))


def _kernel_matrix(
    colors: np.ndarray, semantics: np.ndarray, palette: SemanticPalette,
    sigma_c: float, sigma_s: float,
) -> np.ndarray:
    """Kernel values of (n, 3)+(n, 3) query points against every entry: (n, k)."""
    pc = palette.colors()
    ps = palette.semantics()
    dc2 = ((colors[:, None, :] - pc[None, :, :]) ** 2).sum(axis=2)
    ds2 = ((semantics[:, None, :] - ps[None, :, :]) ** 2).sum(axis=2)
    return np.exp(-dc2 / (2 * sigma_c ** 2) - ds2 / (2 * sigma_s ** 2))


def fit_lambda(
    palette: SemanticPalette, sigmas: tuple[float, float] | None = None
) -> RbfModel:
    """Solve the interpolation system so basis i is delta-like on the entries.

    The Gram matrix is inverted directly (k is small). Near-singular
    systems, typically near-duplicate entries, get a tiny ridge and a
    warning; if that still fails the palette is unusable.
    """
    sigma_c, sigma_s = sigmas if sigmas is not None else compute_sigmas(palette)
    if sigma_c <= 0 or sigma_s <= 0:
        raise DataError("kernel bandwidths must be positive")
    gram = _kernel_matrix(palette.colors(), palette.semantics(), palette, sigma_c, sigma_s)
    if np.linalg.cond(gram) > _COND_LIMIT:
        warnings.warn("near-singular RBF Gram matrix; applying ridge regularization")
        gram = gram + _RIDGE * np.eye(palette.k)
    try:
        lam = np.linalg.solve(gram, np.eye(palette.k))
    except np.linalg.LinAlgError:
        raise NumericalError("singular RBF Gram matrix after regularization")
    if not np.isfinite(lam).all():
        raise NumericalError("non-finite RBF coefficients")
    return RbfModel(palette=palette, sigma_c=sigma_c, sigma_s=sigma_s, lam=lam)


def _normalize_basis(raw: np.ndarray) -> np.ndarray:
    """Clamp negative basis values, then normalize rows; empty rows go uniform."""
    f = np.maximum(raw, 0.0)
    totals = f.sum(axis=1)
    k = f.shape[1]
    out = np.empty_like(f)
    degenerate = totals <= 1e-12
    out[degenerate] = 1.0 / k
    ok = ~degenerate
    out[ok] = f[ok] / totals[ok, None]
    return out


def pixel_weights(x: FeaturePoint6, model: RbfModel) -> np.ndarray:
    """Normalized similarity weights of one 6-D point to every entry."""
    phi = _kernel_matrix(
        x.C[None, :], x.S[None, :], model.palette, model.sigma_c, model.sigma_s
    )[0]
    return _normalize_basis((model.lam @ phi)[None, :])[0]


def weight_field(img: ImageRGB, field: FeatureField, model: RbfModel) -> WeightField:
    """pixel_weights evaluated at every pixel, vectorized."""
    if (field.width, field.height) != (img.width, img.height):
        raise DataError("image and feature field dimensions differ")
    n = img.width * img.height
    colors = img.data.reshape(n, 3)
    semantics = field.data.reshape(n, 3)
    phi = _kernel_matrix(colors, semantics, model.palette, model.sigma_c, model.sigma_s)
    weights = _normalize_basis(phi @ model.lam.T)
    return WeightField(
        width=img.width, height=img.height, k=model.palette.k,
        data=weights.reshape(img.height, img.width, model.palette.k),
    )
