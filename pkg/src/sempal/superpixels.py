"""SLIC superpixel segmentation and centroid sample selection.

Segmentation runs in CIELAB (D65, from sRGB); the rest of the pipeline
stays in RGB. Every step is deterministic: ties in the assignment distance
break toward the lower cluster id, ties in pixel selection toward the
lower (y, x).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DataError
from .features import FeatureField, FeaturePoint6, feature_point
from .imgio import ImageRGB

_FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=int)


@dataclass
class SuperpixelConfig:
    n_target: int = 800
    compactness: float = 10.0
    iters: int = 10


@dataclass
class SuperpixelMap:
    """Contiguously labeled segmentation with per-segment stats."""

    labels: np.ndarray  # (H, W) int32, ids in [0, n)
    n: int
    sizes: np.ndarray  # (n,) pixel counts
    centroid_pixels: list[tuple[int, int]]  # member pixel nearest the (x, y, Lab) mean


@dataclass
class SamplePoint:
    """A palette-extraction sample: one feature point with an importance weight."""

    point: FeaturePoint6
    weight: float
    source_id: int


def rgb_to_lab(rgb: np.ndarray) -> np.ndarray:
    """sRGB in [0,1] (H, W, 3) to CIELAB with D65 white."""
    rgb = np.asarray(rgb, dtype=np.float64)
    linear = np.where(rgb > 0.04045, ((rgb + 0.055) / 1.055) ** 2.4, rgb / 12.92)
    r, g, b = linear[..., 0], linear[..., 1], linear[..., 2]
    x = r * 0.4124564 + g * 0.3575761 + b * 0.1804375
    y = r * 0.2126729 + g * 0.7151522 + b * 0.0721750
    z = r * 0.0193339 + g * 0.1191920 + b * 0.9503041
    xn, yn, zn = 0.95047, 1.0, 1.08883
    xyz = np.stack([x / xn, y / yn, z / zn], axis=-1)
    eps, kappa = 0.008856, 903.3
    f = np.where(xyz > eps, np.cbrt(xyz), (kappa * xyz + 16.0) / 116.0)
    fx, fy, fz = f[..., 0], f[..., 1], f[..., 2]
    lab = np.stack([116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)], axis=-1)
    return lab


def _seed_grid(width: int, height: int, n_target: int) -> list[tuple[int, int]]:
    # sqrt(n_target) x sqrt(n_target) lattice of cell centers.
    side = max(1, round(np.sqrt(n_target)))
    xs = [min(width - 1, int((i + 0.5) * width / side)) for i in range(side)]
    ys = [min(height - 1, int((j + 0.5) * height / side)) for j in range(side)]
    seeds = []
    seen = set()
    for y in ys:
        for x in xs:
            if (x, y) not in seen:
                seen.add((x, y))
                seeds.append((x, y))
    return seeds


def _gradient_magnitude(lab: np.ndarray) -> np.ndarray:
    # Central differences with replicated edges, summed over Lab channels.
    padded = np.pad(lab, ((1, 1), (1, 1), (0, 0)), mode="edge")
    gx = padded[1:-1, 2:] - padded[1:-1, :-2]
    gy = padded[2:, 1:-1] - padded[:-2, 1:-1]
    return (gx ** 2).sum(axis=2) + (gy ** 2).sum(axis=2)


def _perturb_seeds(seeds: list[tuple[int, int]], grad: np.ndarray) -> list[tuple[int, int]]:
    h, w = grad.shape
    out = []
    for x, y in seeds:
        x0, x1 = max(0, x - 1), min(w, x + 2)
        y0, y1 = max(0, y - 1), min(h, y + 2)
        window = grad[y0:y1, x0:x1]
        idx = int(np.argmin(window))  # first minimum, row-major: lowest (y, x)
        dy, dx = divmod(idx, window.shape[1])
        out.append((x0 + dx, y0 + dy))
    return out


def slic_segment(
    img: ImageRGB,
    n_target: int = 800,
    compactness: float = 10.0,
    iters: int = 10,
) -> SuperpixelMap:
    """Segment the image into roughly n_target compact superpixels.

    Assignment distance is ||dLab|| + (compactness / S) * ||dxy|| inside a
    2S x 2S window around each center, S = sqrt(H*W / n_target). Afterward
    orphan 4-connected components are absorbed into the largest adjacent
    segment and ids are relabeled contiguously.
    """
    h, w = img.height, img.width
    if n_target < 1:
        raise DataError("n_target must be >= 1")
    if n_target > h * w:
        raise DataError("n_target exceeds pixel count")

    lab = rgb_to_lab(img.data)
    step = float(np.sqrt(h * w / n_target))
    seeds = _perturb_seeds(_seed_grid(w, h, n_target), _gradient_magnitude(lab))

    cx = np.array([s[0] for s in seeds], dtype=np.float64)
    cy = np.array([s[1] for s in seeds], dtype=np.float64)
    clab = np.array([lab[s[1], s[0]] for s in seeds], dtype=np.float64)
    k = len(seeds)

    xs = np.arange(w, dtype=np.float64)
    ys = np.arange(h, dtype=np.float64)
    grid_x = np.tile(xs[None, :], (h, 1))
    grid_y = np.tile(ys[:, None], (1, w))
    spatial_scale = compactness / step

    labels = np.zeros((h, w), dtype=np.int32)
    for _ in range(iters):
        dist = np.full((h, w), np.inf)
        labels.fill(-1)
        for c in range(k):
            x0 = max(0, int(cx[c] - step))
            x1 = min(w, int(cx[c] + step) + 1)
            y0 = max(0, int(cy[c] - step))
            y1 = min(h, int(cy[c] + step) + 1)
            if x0 >= x1 or y0 >= y1:
                continue
            dlab = np.sqrt(((lab[y0:y1, x0:x1] - clab[c]) ** 2).sum(axis=2))
            dxy = np.sqrt(
                (grid_x[y0:y1, x0:x1] - cx[c]) ** 2
                + (grid_y[y0:y1, x0:x1] - cy[c]) ** 2
            )
            d = dlab + spatial_scale * dxy
            win_dist = dist[y0:y1, x0:x1]
            better = d < win_dist  # strict: earlier (lower) id keeps ties
            win_dist[better] = d[better]
            labels[y0:y1, x0:x1][better] = c

        unassigned = labels < 0
        if unassigned.any():
            uy, ux = np.nonzero(unassigned)
            pix_lab = lab[uy, ux]
            d_full = np.sqrt(
                ((pix_lab[:, None, :] - clab[None, :, :]) ** 2).sum(axis=2)
            ) + spatial_scale * np.sqrt(
                (ux[:, None] - cx[None, :]) ** 2 + (uy[:, None] - cy[None, :]) ** 2
            )
            labels[uy, ux] = np.argmin(d_full, axis=1)

        flat = labels.ravel()
        counts = np.bincount(flat, minlength=k).astype(np.float64)
        occupied = counts > 0
        sum_x = np.bincount(flat, weights=grid_x.ravel(), minlength=k)
        sum_y = np.bincount(flat, weights=grid_y.ravel(), minlength=k)
        cx[occupied] = sum_x[occupied] / counts[occupied]
        cy[occupied] = sum_y[occupied] / counts[occupied]
        for ch in range(3):
            sum_c = np.bincount(flat, weights=lab[:, :, ch].ravel(), minlength=k)
            clab[occupied, ch] = sum_c[occupied] / counts[occupied]

    labels = _enforce_connectivity(labels, k)
    labels, n = _relabel_contiguous(labels)
    sizes = np.bincount(labels.ravel(), minlength=n)
    centroids = _centroid_pixels(labels, n, lab, grid_x, grid_y)
    return SuperpixelMap(labels=labels, n=n, sizes=sizes, centroid_pixels=centroids)


def _enforce_connectivity(labels: np.ndarray, k: int) -> np.ndarray:
    """Absorb orphan components into the largest adjacent segment."""
    h, w = labels.shape
    labels = labels.copy()
    sizes = np.bincount(labels.ravel(), minlength=k).astype(np.int64)
    for lab_id in range(k):
        if sizes[lab_id] == 0:
            continue
        mask = labels == lab_id
        rows = np.nonzero(mask.any(axis=1))[0]
        cols = np.nonzero(mask.any(axis=0))[0]
        y0, y1 = rows[0], rows[-1] + 1
        x0, x1 = cols[0], cols[-1] + 1
        sub = mask[y0:y1, x0:x1]
        comp, n_comp = ndimage.label(sub, structure=_FOUR_CONNECTED)
        if n_comp <= 1:
            continue
        comp_sizes = np.bincount(comp.ravel())[1:]
        keep = int(np.argmax(comp_sizes)) + 1  # first max: lowest component id
        for ci in range(1, n_comp + 1):
            if ci == keep:
                continue
            oy, ox = np.nonzero(comp == ci)
            oy = oy + y0
            ox = ox + x0
            target = _largest_neighbor_label(labels, sizes, oy, ox, lab_id)
            labels[oy, ox] = target
            sizes[lab_id] -= len(oy)
            sizes[target] += len(oy)
    return labels


def _largest_neighbor_label(
    labels: np.ndarray, sizes: np.ndarray, oy: np.ndarray, ox: np.ndarray, own: int
) -> int:
    h, w = labels.shape
    neighbor_ids: set[int] = set()
    for dy, dx in ((-1, 0), (1, 0), (0, -1), (0, 1)):
        ny = oy + dy
        nx = ox + dx
        ok = (ny >= 0) & (ny < h) & (nx >= 0) & (nx < w)
        vals = labels[ny[ok], nx[ok]]
        neighbor_ids.update(int(v) for v in np.unique(vals) if v != own)
    if not neighbor_ids:
        return own  # single-segment image: nothing to absorb into
    # Largest current size; ties toward the lowest label id.
    return min(neighbor_ids, key=lambda lid: (-sizes[lid], lid))


def _relabel_contiguous(labels: np.ndarray) -> tuple[np.ndarray, int]:
    present = np.unique(labels)
    mapping = np.zeros(int(present.max()) + 1, dtype=np.int32)
    mapping[present] = np.arange(len(present), dtype=np.int32)
    return mapping[labels], len(present)


def _centroid_pixels(
    labels: np.ndarray, n: int, lab: np.ndarray,
    grid_x: np.ndarray, grid_y: np.ndarray,
) -> list[tuple[int, int]]:
    """Per segment, the member pixel nearest its mean (x, y, Lab) position."""
    flat = labels.ravel()
    counts = np.bincount(flat, minlength=n).astype(np.float64)
    feats = np.stack(
        [grid_x.ravel(), grid_y.ravel(),
         lab[:, :, 0].ravel(), lab[:, :, 1].ravel(), lab[:, :, 2].ravel()],
        axis=1,
    )
    means = np.zeros((n, 5))
    for c in range(5):
        means[:, c] = np.bincount(flat, weights=feats[:, c], minlength=n) / counts
    d2 = ((feats - means[flat]) ** 2).sum(axis=1)
    order = np.argsort(flat, kind="stable")  # stable: members stay in (y, x) order
    sorted_labels = flat[order]
    boundaries = np.searchsorted(sorted_labels, np.arange(n + 1))
    centroids = []
    w = labels.shape[1]
    for i in range(n):
        members = order[boundaries[i]:boundaries[i + 1]]
        best = members[int(np.argmin(d2[members]))]
        centroids.append((int(best % w), int(best // w)))
    return centroids


def centroid_samples(
    img: ImageRGB, field: FeatureField, sp: SuperpixelMap
) -> list[SamplePoint]:
    """One sample per superpixel: the centroid pixel's 6-D point, weighted by size."""
    if (field.width, field.height) != (img.width, img.height):
        raise DataError("image and feature field dimensions differ")
    samples = []
    for i, (x, y) in enumerate(sp.centroid_pixels):
        samples.append(
            SamplePoint(
                point=feature_point(img, field, x, y),
                weight=float(sp.sizes[i]),
                source_id=i,
            )
        )
    return samples
