"""Keyframe selection by quantized color-histogram differences.

Each frame is reduced to a 64-bin RGB histogram (4 bins per channel, equal
width). A frame becomes a keyframe when the Manhattan distance of its
histogram to the previously selected keyframe's histogram exceeds the
threshold. The first frame always seeds the selection.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .descriptor import as_image
from .errors import DegenerateInputError, InvalidArgumentError

HIST_BINS = 64


@dataclass(frozen=True)
class KeyframeConfig:
    # threshold range is [0, 2] in normalized mode, [0, 2 * pixel_count] in counts mode
    threshold: float = 0.3
    normalize_hist: bool = True

    def __post_init__(self):
        if self.threshold < 0:
            raise InvalidArgumentError("threshold must be >= 0")


def rgb_histogram(frame) -> np.ndarray:
    """64-bin quantized color histogram; bins sum to the pixel count.

    Bin index is 16*qR + 4*qG + qB with q = channel // 64.
    """
    img = as_image(frame)
    q = img.astype(np.int64) // 64
    idx = 16 * q[:, :, 0] + 4 * q[:, :, 1] + q[:, :, 2]
    return np.bincount(idx.ravel(), minlength=HIST_BINS).astype(np.int64)


def manhattan(h1: np.ndarray, h2: np.ndarray) -> float:
    h1 = np.asarray(h1, dtype=np.float64)
    h2 = np.asarray(h2, dtype=np.float64)
    if h1.shape != h2.shape:
        raise InvalidArgumentError(f"histogram shape mismatch: {h1.shape} vs {h2.shape}")
    return float(np.abs(h1 - h2).sum())


def _comparable_hist(frame, cfg: KeyframeConfig) -> np.ndarray:
    h = rgb_histogram(frame).astype(np.float64)
    if cfg.normalize_hist:
        h /= h.sum()
    return h


def select_keyframes(frames: Iterable, cfg: KeyframeConfig = KeyframeConfig()) -> list[int]:
    """Indices of selected keyframes, strictly increasing, always including 0.

    Streaming-safe: the selection for a prefix never changes when more frames
    are appended.
    """
    selected: list[int] = []
    anchor: np.ndarray | None = None
    for i, frame in enumerate(frames):
        h = _comparable_hist(frame, cfg)
        if anchor is None or manhattan(h, anchor) > cfg.threshold:
            selected.append(i)
            anchor = h
    if not selected:
        raise DegenerateInputError("empty frame sequence")
    return selected
