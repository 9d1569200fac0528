"""Solve an edited palette from strokes and recolor the image with it.

The edit energy is convex quadratic in the palette color deltas: a fidelity
term pulls stroke pixels to their targets, a propagation term penalizes
color change at sampled pixels dissimilar to the strokes. The gamut box
keeps every edited palette color displayable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.optimize import lsq_linear

from .errors import DataError, NumericalError
from .features import FeatureField, FeaturePoint6
from .imgio import ImageRGB, StrokeSet
from .palette import PaletteConfig, SemanticPalette, palette_to_dict
from .weights import RbfModel, WeightField

_TIE_BREAK_RIDGE = 1e-12


@dataclass
class EditProblem:
    """Assembled quadratic program data, all in original-palette terms."""

    model: RbfModel
    stroke_weights: np.ndarray  # (|H|, k)
    stroke_sources: np.ndarray  # (|H|, 3)
    stroke_targets: np.ndarray  # (|H|, 3)
    constraint_weights: np.ndarray  # (|G|, k)
    alphas: np.ndarray  # (|G|,)
    palette_colors: np.ndarray  # (k, 3)


@dataclass
class EditSolution:
    """Optimal palette deltas plus the achieved energy split."""

    deltas: np.ndarray  # (k, 3)
    edited_palette: SemanticPalette
    energy: float
    fidelity: float
    propagation: float


def transfer_color(c: np.ndarray, w: np.ndarray, deltas: np.ndarray) -> np.ndarray:
    """New color = old color + weight-blended palette deltas, clamped to [0,1]."""
    return np.clip(np.asarray(c, dtype=np.float64) + w @ deltas, 0.0, 1.0)


def sample_constraint_pixels(img: ImageRGB, count: int = 256) -> list[tuple[int, int]]:
    """Deterministic lattice of roughly `count` cell-center pixels, no randomness."""
    if count < 1:
        raise DataError("sample count must be >= 1")
    side = int(np.ceil(np.sqrt(count)))
    xs = [min(img.width - 1, int((i + 0.5) * img.width / side)) for i in range(side)]
    ys = [min(img.height - 1, int((j + 0.5) * img.height / side)) for j in range(side)]
    points: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    for y in ys:
        for x in xs:
            if (x, y) not in seen:
                seen.add((x, y))
                points.append((x, y))
    return points[:count]


def compute_alphas(
    sampled: list[FeaturePoint6], strokes: list[FeaturePoint6], cfg: PaletteConfig
) -> np.ndarray:
    """Penalty weight per sampled pixel: 1 minus its similarity to the nearest stroke pixel.

    Similarity is exp(-d^2) with the weighted feature distance, so pixels
    that look like the strokes are free to move and dissimilar pixels are
    pinned by the propagation term.
    """
    if not strokes:
        raise DataError("no stroke feature points")
    if not sampled:
        return np.zeros(0)
    sv = np.array([p.as_vector() for p in sampled])
    hv = np.array([p.as_vector() for p in strokes])
    dc = np.linalg.norm(sv[:, None, :3] - hv[None, :, :3], axis=2)
    ds = np.linalg.norm(sv[:, None, 3:] - hv[None, :, 3:], axis=2)
    d = cfg.w_c * dc + cfg.w_s * ds
    similarity = np.exp(-(d ** 2)).max(axis=1)
    return 1.0 - similarity


def build_problem(
    img: ImageRGB,
    field: FeatureField,
    model: RbfModel,
    wf: WeightField,
    strokes: StrokeSet,
    cfg: PaletteConfig,
    constraint_samples: int = 256,
) -> EditProblem:
    """Gather stroke rows, sample constraint pixels (excluding strokes), weight them."""
    coords, targets = strokes.resolved()
    if not coords:
        raise DataError("empty stroke set")
    for x, y in coords:
        if not (0 <= x < img.width and 0 <= y < img.height):
            raise DataError(f"stroke pixel ({x}, {y}) outside image")

    stroke_idx = np.array([y * img.width + x for x, y in coords])
    flat_w = wf.data.reshape(-1, wf.k)
    flat_img = img.data.reshape(-1, 3)
    flat_feat = field.data.reshape(-1, 3)

    stroke_points = [
        FeaturePoint6(C=flat_img[i], S=flat_feat[i]) for i in stroke_idx
    ]

    if constraint_samples > 0:
        in_h = set(coords)
        g_coords = [
            p for p in sample_constraint_pixels(img, constraint_samples) if p not in in_h
        ]
    else:
        g_coords = []
    g_idx = np.array([y * img.width + x for x, y in g_coords], dtype=int)
    g_points = [FeaturePoint6(C=flat_img[i], S=flat_feat[i]) for i in g_idx]

    return EditProblem(
        model=model,
        stroke_weights=flat_w[stroke_idx],
        stroke_sources=flat_img[stroke_idx].copy(),
        stroke_targets=targets,
        constraint_weights=flat_w[g_idx] if len(g_idx) else np.zeros((0, wf.k)),
        alphas=compute_alphas(g_points, stroke_points, cfg),
        palette_colors=model.palette.colors(),
    )


def energy_terms(problem: EditProblem, deltas: np.ndarray) -> tuple[float, float, float]:
    """(total, fidelity, propagation) of the edit energy at the given deltas."""
    d = np.asarray(deltas, dtype=np.float64).reshape(-1, 3)
    shift_h = problem.stroke_weights @ d
    resid = problem.stroke_sources + shift_h - problem.stroke_targets
    fidelity = float((resid ** 2).sum() / len(problem.stroke_sources))
    alpha_sum = float(problem.alphas.sum())
    if alpha_sum > 0 and len(problem.constraint_weights):
        shift_g = problem.constraint_weights @ d
        propagation = float(
            (problem.alphas * (shift_g ** 2).sum(axis=1)).sum() / alpha_sum
        )
    else:
        propagation = 0.0
    return fidelity + propagation, fidelity, propagation


def energy_gradient(problem: EditProblem, deltas: np.ndarray) -> np.ndarray:
    """Analytic gradient of the edit energy with respect to the flattened deltas."""
    d = np.asarray(deltas, dtype=np.float64).reshape(-1, 3)
    resid = problem.stroke_sources + problem.stroke_weights @ d - problem.stroke_targets
    grad = (2.0 / len(problem.stroke_sources)) * problem.stroke_weights.T @ resid
    alpha_sum = float(problem.alphas.sum())
    if alpha_sum > 0 and len(problem.constraint_weights):
        shift_g = problem.constraint_weights @ d
        grad = grad + (2.0 / alpha_sum) * problem.constraint_weights.T @ (
            problem.alphas[:, None] * shift_g
        )
    return grad.reshape(-1)


def solve_edit(problem: EditProblem) -> EditSolution:
    """Minimize the edit energy over the gamut box.

    The energy is a box-constrained linear least-squares problem in the
    3k stacked deltas; a tiny ridge breaks ties toward the minimum-norm
    solution. The returned energy is within 1e-6 of the true constrained
    minimum.
    """
    k = problem.palette_colors.shape[0]
    n_h = problem.stroke_weights.shape[0]
    if n_h < 1:
        raise DataError("edit problem has no stroke pixels")
    eye3 = np.eye(3)

    blocks = [np.kron(problem.stroke_weights, eye3) / np.sqrt(n_h)]
    rhs = [(problem.stroke_targets - problem.stroke_sources).reshape(-1) / np.sqrt(n_h)]
    alpha_sum = float(problem.alphas.sum())
    if alpha_sum > 0 and len(problem.constraint_weights):
        scale = np.sqrt(problem.alphas / alpha_sum)
        blocks.append(np.kron(problem.constraint_weights * scale[:, None], eye3))
        rhs.append(np.zeros(3 * len(problem.constraint_weights)))
    blocks.append(np.sqrt(_TIE_BREAK_RIDGE) * np.eye(3 * k))
    rhs.append(np.zeros(3 * k))

    mat = np.vstack(blocks)
    vec = np.concatenate(rhs)
    if not (np.isfinite(mat).all() and np.isfinite(vec).all()):
        raise NumericalError("non-finite edit problem")

    lower = -problem.palette_colors.reshape(-1)
    upper = 1.0 - problem.palette_colors.reshape(-1)
    result = lsq_linear(mat, vec, bounds=(lower, upper), method="bvls", tol=1e-14)
    deltas_flat = np.clip(result.x, lower, upper)
    deltas = deltas_flat.reshape(k, 3)

    energy, fidelity, propagation = energy_terms(problem, deltas)
    if not np.isfinite(energy):
        raise NumericalError("non-finite edit energy")

    edited_colors = np.clip(problem.palette_colors + deltas, 0.0, 1.0)
    palette = problem.model.palette
    edited = SemanticPalette(
        entries=[
            FeaturePoint6(C=edited_colors[i], S=palette.entries[i].S.copy())
            for i in range(k)
        ],
        config=palette.config,
    )
    return EditSolution(
        deltas=deltas, edited_palette=edited,
        energy=energy, fidelity=fidelity, propagation=propagation,
    )


def apply_edit(img: ImageRGB, wf: WeightField, solution: EditSolution) -> ImageRGB:
    """Transfer the palette deltas to every pixel through its weight row."""
    if (wf.width, wf.height) != (img.width, img.height):
        raise DataError("image and weight field dimensions differ")
    n = img.width * img.height
    # One buffer end to end; per-op temporaries dominate the runtime at 1 MP.
    out = wf.data.reshape(n, wf.k) @ solution.deltas
    np.add(img.data.reshape(n, 3), out, out=out)
    np.clip(out, 0.0, 1.0, out=out)
    return ImageRGB.from_array(out.reshape(img.height, img.width, 3))


def save_solution(solution: EditSolution, path: str) -> None:
    """Palette file payload for the edited palette, plus the deltas and energies."""
    doc = palette_to_dict(solution.edited_palette)
    doc["deltas"] = [[float(v) for v in row] for row in solution.deltas]
    doc["energy"] = solution.energy
    doc["fidelity"] = solution.fidelity
    doc["propagation"] = solution.propagation
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2)
