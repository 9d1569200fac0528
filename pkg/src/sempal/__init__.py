"""Propagate sparse color edits across semantically similar image regions.

The pipeline: fuse color with reduced semantic features into a 6-D space,
extract a compact palette of representative points, fit RBF similarity
weights, then solve a small constrained quadratic so user strokes move the
palette and the palette recolors the image.
"""

from .editor import (
    EditProblem,
    EditSolution,
    apply_edit,
    build_problem,
    solve_edit,
    transfer_color,
)
from .errors import DataError, NumericalError
from .features import (
    FeatureField,
    FeaturePoint6,
    fallback_features,
    fallback_field,
    feature_point,
    normalize_features,
    pca_reduce,
    prepare_field,
)
from .imgio import (
    ImageRGB,
    RawFeatureTensor,
    Stroke,
    StrokeSet,
    load_feature_tensor,
    load_image,
    load_strokes,
    save_feature_tensor,
    save_image,
    save_strokes,
)
from .metrics import MetricReport, mse, psnr, report, ssim
from .palette import (
    PaletteConfig,
    SemanticPalette,
    extract_palette,
    feature_distance,
    kmeans_refine,
    load_palette,
    save_palette,
    select_seeds,
)
from .superpixels import (
    SamplePoint,
    SuperpixelConfig,
    SuperpixelMap,
    centroid_samples,
    slic_segment,
)
from .weights import (
    RbfModel,
    WeightField,
    compute_sigmas,
    fit_lambda,
    pixel_weights,
    rbf_kernel,
    weight_field,
)

__version__ = "0.1.0"
