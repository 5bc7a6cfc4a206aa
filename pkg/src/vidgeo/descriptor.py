"""Global descriptor vector operations and the occlusion similarity heatmap.

Descriptors are plain 1-D numpy float arrays. The retrieval stack assumes
unit L2 norm, which lets distances be computed through the dot-product
identity d^2 = 2 - 2*<a, b>.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DegenerateInputError, InvalidArgumentError

# ImageGrid: numpy array of shape (H, W, 3), integer values in [0, 255].
DescriptorFunction = Callable[[np.ndarray], np.ndarray]


def as_image(arr) -> np.ndarray:
    """Validate an RGB image array and return it as uint8 (H, W, 3)."""
    a = np.asarray(arr)
    if a.ndim != 3 or a.shape[2] != 3:
        raise InvalidArgumentError(f"expected (H, W, 3) RGB image, got shape {a.shape}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise InvalidArgumentError("image must be at least 1x1")
    if a.dtype != np.uint8:
        if a.min() < 0 or a.max() > 255:
            raise InvalidArgumentError("pixel values outside [0, 255]")
        a = a.astype(np.uint8)
    return a


def l2_distance(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise InvalidArgumentError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))


def normalize(v: np.ndarray) -> np.ndarray:
    """Scale to unit L2 norm. Zero vectors are rejected as degenerate."""
    v = np.asarray(v, dtype=np.float64)
    n = np.linalg.norm(v)
    if n == 0.0 or not np.isfinite(n):
        raise DegenerateInputError("cannot normalize a zero or non-finite vector")
    return v / n


def is_normalized(v: np.ndarray, tol: float = 1e-3) -> bool:
    return abs(float(np.linalg.norm(np.asarray(v, dtype=np.float64))) - 1.0) <= tol


@dataclass
class Heatmap:
    """Occlusion-saliency grid: values[i, j] in [0, 1], one cell per patch placement."""

    values: np.ndarray
    cell_size: int
    stride: int


def heatmap_shape(height: int, width: int, patch: int, stride: int) -> tuple[int, int]:
    return ((height - patch) // stride + 1, (width - patch) // stride + 1)


def occlusion_heatmap(
    query: np.ndarray,
    reference: np.ndarray,
    f: DescriptorFunction,
    patch: int,
    stride: int | None = None,
) -> Heatmap:
    """Slide a black patch over the query image and measure the distance impact.

    Each cell holds the descriptor distance between the occluded query and the
    reference descriptor; the grid is then min-max normalized to [0, 1], so a
    high value marks a region whose occlusion hurts the match most. A constant
    grid (no placement matters) normalizes to all zeros.

    The default stride equals the patch size, giving non-overlapping blocks.
    Only placements fully inside the image are generated (top-left anchors at
    stride multiples).
    """
    img = as_image(query)
    h, w = img.shape[0], img.shape[1]
    if stride is None:
        stride = patch
    if patch < 1 or stride < 1:
        raise InvalidArgumentError("patch and stride must be >= 1")
    if patch > min(h, w):
        raise InvalidArgumentError(f"patch {patch} exceeds image size {h}x{w}")

    rows, cols = heatmap_shape(h, w, patch, stride)
    raw = np.empty((rows, cols), dtype=np.float64)
    for i in range(rows):
        for j in range(cols):
            y, x = i * stride, j * stride
            occluded = img.copy()
            occluded[y : y + patch, x : x + patch, :] = 0
            raw[i, j] = l2_distance(f(occluded), reference)

    lo, hi = float(raw.min()), float(raw.max())
    if hi == lo:
        values = np.zeros_like(raw)
    else:
        values = (raw - lo) / (hi - lo)
    return Heatmap(values=values, cell_size=patch, stride=stride)
