"""Precision-within-distance evaluation, random baseline, and oracle bound.

Precision at threshold d is the fraction of videos whose predicted location
lies within d meters (great-circle) of the ground truth; the threshold is
closed (<= d). The oracle picks, per video, the candidate location closest to
the truth — an exact upper bound for any aggregation over the same
candidates.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

from .errors import InvalidArgumentError
from .geo import GeoPoint, haversine_distance
from .index import Index
from .rng import Xorshift64Star
from .voting import (
    AggregationConfig,
    CandidateSet,
    Prediction,
    VideoQuery,
    _flatten,
    aggregate,
    attach_local_scores,
    retrieve_candidates,
)

DEFAULT_GRID = (5.0, 10.0, 30.0, 50.0, 100.0, 150.0)


@dataclass(frozen=True)
class EvalConfig:
    grid: tuple[float, ...] = DEFAULT_GRID
    seed: int = 0

    def __post_init__(self):
        if any(d < 0 for d in self.grid):
            raise InvalidArgumentError("distance grid entries must be >= 0")
        if list(self.grid) != sorted(self.grid):
            raise InvalidArgumentError("distance grid must be sorted ascending")


@dataclass
class PrecisionCurve:
    """(threshold_meters, precision) pairs; precision is non-decreasing."""

    points: list[tuple[float, float]] = field(default_factory=list)

    def at(self, d: float) -> float:
        for threshold, p in self.points:
            if threshold == d:
                return p
        raise KeyError(d)


def precision_at(preds: list[Prediction], truths: list[GeoPoint], d: float) -> float:
    if len(preds) != len(truths):
        raise InvalidArgumentError(f"{len(preds)} predictions vs {len(truths)} truths")
    if not preds:
        raise InvalidArgumentError("empty prediction list")
    hits = sum(1 for p, t in zip(preds, truths) if haversine_distance(p.location, t) <= d)
    return hits / len(preds)


def precision_curve(
    preds: list[Prediction], truths: list[GeoPoint], grid=DEFAULT_GRID
) -> PrecisionCurve:
    return PrecisionCurve([(d, precision_at(preds, truths, d)) for d in grid])


def random_baseline(cands: CandidateSet, seed: int, video_id: str = "") -> Prediction:
    """Uniformly pick one of the n*K candidates with the pinned xorshift generator."""
    flat = _flatten(cands)
    pick = flat[Xorshift64Star(seed).randint(len(flat))]
    return Prediction(
        video_id=video_id,
        location=pick.location,
        winning_location_id=pick.location_id,
        total_vote=1.0,
        tallies={pick.location_id: 1.0},
        strategy="random",
    )


def oracle(cands: CandidateSet, truth: GeoPoint | None, video_id: str = "") -> Prediction:
    """Candidate location closest to the ground truth; ties by smallest location_id."""
    if truth is None:
        raise InvalidArgumentError("oracle requires a ground-truth location")
    flat = _flatten(cands)
    best = min(flat, key=lambda c: (haversine_distance(c.location, truth), c.location_id))
    return Prediction(
        video_id=video_id,
        location=best.location,
        winning_location_id=best.location_id,
        total_vote=1.0,
        tallies={best.location_id: 1.0},
        strategy="oracle",
    )


def compare_methods(
    videos: list[VideoQuery],
    index: Index,
    strategies: list[str],
    cfg: EvalConfig = EvalConfig(),
    agg: AggregationConfig = AggregationConfig(),
    reference_keypoints=None,
) -> tuple[dict[str, PrecisionCurve], list[dict]]:
    """Evaluate every strategy plus the random and oracle rows.

    Returns (curves keyed by method name, per-video diagnostic dicts).
    All videos must carry ground truth.
    """
    for v in videos:
        if v.ground_truth is None:
            raise InvalidArgumentError(f"video {v.video_id!r} lacks ground truth")

    methods = ["random"] + list(strategies) + ["oracle"]
    preds: dict[str, list[Prediction]] = {m: [] for m in methods}
    diagnostics: list[dict] = []

    for i, video in enumerate(videos):
        cands = retrieve_candidates(video, index, agg.K)
        if reference_keypoints is not None:
            attach_local_scores(
                cands, video, reference_keypoints, agg.top_scored, agg.top_matches
            )
        row: dict = {"video_id": video.video_id,
                     "truth": {"lat": video.ground_truth.lat, "lon": video.ground_truth.lon}}
        for method in methods:
            if method == "random":
                # per-video substream: seed offset by video position
                p = random_baseline(cands, cfg.seed + i, video.video_id)
            elif method == "oracle":
                p = oracle(cands, video.ground_truth, video.video_id)
            else:
                cfg_m = AggregationConfig(
                    K=agg.K,
                    strategy=method,
                    blend_lambda=agg.blend_lambda,
                    top_scored=agg.top_scored,
                    top_matches=agg.top_matches,
                    dbscan=agg.dbscan,
                )
                p = aggregate(cands, cfg_m, video.video_id)
            preds[method].append(p)
            row[method] = {
                "lat": p.location.lat,
                "lon": p.location.lon,
                "winning_location_id": p.winning_location_id,
                "total_vote": p.total_vote,
                "error_m": haversine_distance(p.location, video.ground_truth),
            }
        diagnostics.append(row)

    truths = [v.ground_truth for v in videos]
    curves = {m: precision_curve(preds[m], truths, cfg.grid) for m in methods}
    return curves, diagnostics


def write_table_csv(curves: dict[str, PrecisionCurve], path) -> None:
    """Rows = methods, columns = distance grid."""
    grid = [d for d, _ in next(iter(curves.values())).points]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method"] + [f"{d:g}" for d in grid])
        for method, curve in curves.items():
            writer.writerow([method] + [f"{p:.6f}" for _, p in curve.points])


def write_diagnostics_json(diagnostics: list[dict], path) -> None:
    with open(path, "w") as fh:
        json.dump(diagnostics, fh, indent=2, sort_keys=False)
        fh.write("\n")
