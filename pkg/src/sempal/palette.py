"""Semantic palette extraction.

Greedy importance-weighted seeding picks initial cluster centers without a
preset count; k-means under the weighted color+semantic distance refines
them into the palette.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import DataError
from .features import FeatureField, FeaturePoint6
from .imgio import ImageRGB
from .superpixels import SamplePoint, SuperpixelConfig, centroid_samples, slic_segment


@dataclass
class PaletteConfig:
    """Knobs for seeding and refinement.

    w_c and w_s balance color against semantic distance; t stops the greedy
    seeding once the largest remaining importance drops below it. Smaller t
    yields more palette entries.
    """

    w_c: float = 1.0
    w_s: float = 3.0
    t: float = 0.80
    kmeans_max_iters: int = 50
    kmeans_tol: float = 1e-5

    def __post_init__(self):
        if self.w_c < 0 or self.w_s < 0 or self.w_c + self.w_s <= 0:
            raise DataError("need w_c >= 0, w_s >= 0, w_c + w_s > 0")
        if not (0.0 < self.t < 1.0):
            raise DataError("threshold t must lie in (0, 1)")


@dataclass
class SemanticPalette:
    """k representative 6-D feature points plus the config that produced them."""

    entries: list[FeaturePoint6]
    config: PaletteConfig = dc_field(default_factory=PaletteConfig)

    def __post_init__(self):
        if not self.entries:
            raise DataError("palette needs at least one entry")

    @property
    def k(self) -> int:
        return len(self.entries)

    def colors(self) -> np.ndarray:
        return np.array([e.C for e in self.entries], dtype=np.float64)

    def semantics(self) -> np.ndarray:
        return np.array([e.S for e in self.entries], dtype=np.float64)

    def vectors(self) -> np.ndarray:
        return np.array([e.as_vector() for e in self.entries], dtype=np.float64)


def feature_distance(a: FeaturePoint6, b: FeaturePoint6, cfg: PaletteConfig) -> float:
    """w_c * ||dC||_2 + w_s * ||dS||_2."""
    return float(
        cfg.w_c * np.linalg.norm(a.C - b.C) + cfg.w_s * np.linalg.norm(a.S - b.S)
    )


def _distance_matrix(vecs_a: np.ndarray, vecs_b: np.ndarray, cfg: PaletteConfig) -> np.ndarray:
    """Pairwise weighted distances between rows of two (n, 6) arrays."""
    dc = np.linalg.norm(vecs_a[:, None, :3] - vecs_b[None, :, :3], axis=2)
    ds = np.linalg.norm(vecs_a[:, None, 3:] - vecs_b[None, :, 3:], axis=2)
    return cfg.w_c * dc + cfg.w_s * ds


def select_seeds(samples: list[SamplePoint], cfg: PaletteConfig) -> list[FeaturePoint6]:
    """Greedy threshold-terminated seed selection.

    Importances start at pixel count over the maximum count, so the largest
    is exactly 1 and the stop test against t is scale-free. Each pick
    multiplies every importance by 1 - exp(-d^2) to the new seed, zeroing
    the seed itself; the loop stops once the maximum importance falls
    below t. At least one seed is always emitted.
    """
    if not samples:
        raise DataError("no samples to seed from")
    vecs = np.array([s.point.as_vector() for s in samples])
    pi = np.array([s.weight for s in samples], dtype=np.float64)
    if np.any(pi <= 0):
        raise DataError("sample weights must be positive")
    pi = pi / pi.max()

    seeds: list[FeaturePoint6] = []
    while True:
        pick = int(np.argmax(pi))  # ties: lowest index
        seeds.append(FeaturePoint6(C=vecs[pick, :3].copy(), S=vecs[pick, 3:].copy()))
        d = _distance_matrix(vecs[pick:pick + 1], vecs, cfg)[0]
        pi = pi * (1.0 - np.exp(-(d ** 2)))
        if pi.max() < cfg.t:
            return seeds


def kmeans_refine(
    samples: list[SamplePoint],
    seeds: list[FeaturePoint6],
    cfg: PaletteConfig,
    cost_trace: list[float] | None = None,
) -> SemanticPalette:
    """Lloyd refinement of the seeds under the weighted feature distance.

    Assignment breaks ties toward the lower center index; centers update to
    the plain mean of their members. An empty cluster is re-seeded at the
    sample farthest from its own center. If an iteration would raise the
    total assignment cost the step is rolled back and iteration stops, so
    cost is non-increasing by construction. Exact duplicate centers are
    dropped at the end. cost_trace, when given, collects the per-iteration
    assignment cost.
    """
    if not seeds:
        raise DataError("kmeans needs at least one seed")
    vecs = np.array([s.point.as_vector() for s in samples])
    centers = np.array([s.as_vector() for s in seeds], dtype=np.float64)
    k = len(centers)

    dists = _distance_matrix(vecs, centers, cfg)
    assign = np.argmin(dists, axis=1)
    cost = float(dists[np.arange(len(vecs)), assign].sum())
    if cost_trace is not None:
        cost_trace.append(cost)

    for _ in range(cfg.kmeans_max_iters):
        new_centers = centers.copy()
        taken: set[int] = set()
        for c in range(k):
            members = assign == c
            if members.any():
                new_centers[c] = vecs[members].mean(axis=0)
            else:
                new_centers[c] = _farthest_sample(vecs, centers, assign, cfg, taken)
        movement = float(np.linalg.norm(new_centers - centers, axis=1).max())

        new_dists = _distance_matrix(vecs, new_centers, cfg)
        new_assign = np.argmin(new_dists, axis=1)
        new_cost = float(new_dists[np.arange(len(vecs)), new_assign].sum())
        if new_cost > cost + 1e-12:
            break  # mean update is a surrogate for this metric; never accept a regression
        centers, assign, cost = new_centers, new_assign, new_cost
        if cost_trace is not None:
            cost_trace.append(cost)
        if movement < cfg.kmeans_tol:
            break

    unique: list[np.ndarray] = []
    for row in centers:
        if not any(np.array_equal(row, u) for u in unique):
            unique.append(row)
    entries = [FeaturePoint6(C=row[:3].copy(), S=row[3:].copy()) for row in unique]
    return SemanticPalette(entries=entries, config=cfg)


def _farthest_sample(
    vecs: np.ndarray, centers: np.ndarray, assign: np.ndarray,
    cfg: PaletteConfig, taken: set[int],
) -> np.ndarray:
    d_own = _distance_matrix(vecs, centers, cfg)[np.arange(len(vecs)), assign]
    order = np.argsort(-d_own, kind="stable")  # ties: lowest sample index
    for idx in order:
        if int(idx) not in taken:
            taken.add(int(idx))
            return vecs[idx].copy()
    return vecs[order[0]].copy()


def extract_palette(
    img: ImageRGB,
    field: FeatureField,
    cfg: PaletteConfig | None = None,
    sp_cfg: SuperpixelConfig | None = None,
) -> SemanticPalette:
    """Full extraction: superpixels -> centroid samples -> seeding -> k-means."""
    cfg = cfg or PaletteConfig()
    sp_cfg = sp_cfg or SuperpixelConfig()
    sp = slic_segment(
        img, n_target=sp_cfg.n_target, compactness=sp_cfg.compactness, iters=sp_cfg.iters
    )
    samples = centroid_samples(img, field, sp)
    seeds = select_seeds(samples, cfg)
    return kmeans_refine(samples, seeds, cfg)


def save_palette(palette: SemanticPalette, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(palette_to_dict(palette), fh, indent=2)


def palette_to_dict(palette: SemanticPalette) -> dict:
    return {
        "entries": [
            {"color": [float(v) for v in e.C], "semantic": [float(v) for v in e.S]}
            for e in palette.entries
        ],
        "config": {
            "w_c": palette.config.w_c,
            "w_s": palette.config.w_s,
            "t": palette.config.t,
            "kmeans_max_iters": palette.config.kmeans_max_iters,
            "kmeans_tol": palette.config.kmeans_tol,
        },
    }


def load_palette(path: str) -> SemanticPalette:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise DataError(f"no such palette file: {path}")
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid palette JSON: {exc}")
    return palette_from_dict(doc)


def palette_from_dict(doc: dict) -> SemanticPalette:
    try:
        cfg = PaletteConfig(**doc.get("config", {}))
        entries = [
            FeaturePoint6(C=np.array(e["color"]), S=np.array(e["semantic"]))
            for e in doc["entries"]
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed palette document: {exc}")
    return SemanticPalette(entries=entries, config=cfg)
