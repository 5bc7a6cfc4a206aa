"""DBSCAN over locally projected candidate locations.

Neighborhood queries are exhaustive O(n^2); candidate sets in this pipeline
are at most a few hundred points, so no spatial index is warranted. Border
points are claimed by the first cluster (in scan order) whose expansion
reaches them, which makes the labeling deterministic.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidArgumentError
from .geo import PlanarPoint

NOISE = -1


@dataclass(frozen=True)
class DbscanParams:
    # eps default is half the long dimension of a downtown block (~65m x 150m)
    eps: float = 75.0
    min_pts: int = 3

    def __post_init__(self):
        if not self.eps > 0:
            raise InvalidArgumentError("eps must be > 0")
        if self.min_pts < 1:
            raise InvalidArgumentError("min_pts must be >= 1")


def _as_xy(points: Sequence) -> np.ndarray:
    if len(points) == 0:
        return np.empty((0, 2), dtype=np.float64)
    if isinstance(points[0], PlanarPoint):
        return np.array([[p.x, p.y] for p in points], dtype=np.float64)
    return np.asarray(points, dtype=np.float64).reshape(len(points), 2)


def dbscan(points: Sequence, params: DbscanParams) -> np.ndarray:
    """Label each point with a dense cluster id (0..C-1) or NOISE (-1)."""
    xy = _as_xy(points)
    n = len(xy)
    labels = np.full(n, NOISE, dtype=np.int64)
    if n == 0:
        return labels

    d2 = ((xy[:, None, :] - xy[None, :, :]) ** 2).sum(axis=2)
    neighborhoods = [np.flatnonzero(d2[i] <= params.eps**2) for i in range(n)]
    is_core = np.array([len(nb) >= params.min_pts for nb in neighborhoods])

    visited = np.zeros(n, dtype=bool)
    cluster_id = 0
    for i in range(n):
        if visited[i] or not is_core[i]:
            continue
        queue = deque([i])
        visited[i] = True
        labels[i] = cluster_id
        while queue:
            j = queue.popleft()
            if not is_core[j]:
                continue
            for nb in neighborhoods[j]:
                if labels[nb] == NOISE:
                    labels[nb] = cluster_id
                if not visited[nb]:
                    visited[nb] = True
                    queue.append(nb)
        cluster_id += 1
    return labels


def canonicalize_labels(labels: np.ndarray) -> np.ndarray:
    """Renumber clusters by the index of their lowest member; NOISE unchanged."""
    labels = np.asarray(labels)
    out = np.full_like(labels, NOISE)
    mapping: dict[int, int] = {}
    for i, lab in enumerate(labels):
        if lab == NOISE:
            continue
        if lab not in mapping:
            mapping[lab] = len(mapping)
        out[i] = mapping[lab]
    return out


def winning_cluster(labels: np.ndarray, weights: Sequence[float] | None = None) -> int | None:
    """Non-noise cluster with the largest total weight; None if all noise.

    Unweighted calls count one unit per point (largest population). Ties break
    toward the smallest cluster id.
    """
    labels = np.asarray(labels)
    if weights is None:
        weights = np.ones(len(labels), dtype=np.float64)
    else:
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != labels.shape:
            raise InvalidArgumentError(
                f"weights length {weights.shape} != labels length {labels.shape}"
            )
        if (weights < 0).any():
            raise InvalidArgumentError("weights must be non-negative")

    totals: dict[int, float] = {}
    for lab, w in zip(labels.tolist(), weights.tolist()):
        if lab != NOISE:
            totals[lab] = totals.get(lab, 0.0) + w
    if not totals:
        return None
    return max(totals, key=lambda c: (totals[c], -c))
