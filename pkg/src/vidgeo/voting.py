"""Vote aggregation: turn per-keyframe retrieval candidates into one location.

Four strategies are provided, increasingly selective:

* simple          — one vote per candidate
* weighted_rank   — vote weight 1/rank
* blended         — weight lambda/rank + (1 - lambda) * local-feature score
* density+<inner> — DBSCAN the candidate locations, let only the winning
                    cluster vote using the inner strategy

Votes accumulate per location_id (capture point, not individual image).
Tie-breaking on equal tallies: smallest cumulative rank sum, then smallest
location_id.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .clustering import NOISE, DbscanParams, dbscan, winning_cluster
from .descriptor import is_normalized
from .errors import InvalidArgumentError
from .geo import GeoPoint, centroid, project_local
from .index import DEFAULT_K, Index, RankedCandidate

DEFAULT_LAMBDA = 0.4
DEFAULT_TOP_MATCHES = 50

STRATEGIES = (
    "simple",
    "weighted_rank",
    "blended",
    "density+simple",
    "density+weighted_rank",
    "density+blended",
)


@dataclass
class Keyframe:
    descriptor: np.ndarray
    keypoints: np.ndarray | None = None  # (n_keypoints, kp_dim) local descriptors


@dataclass
class VideoQuery:
    video_id: str
    keyframes: list[Keyframe]
    ground_truth: GeoPoint | None = None

    def __post_init__(self):
        if not self.keyframes:
            raise InvalidArgumentError(f"video {self.video_id!r} has no keyframes")
        for kf in self.keyframes:
            if not is_normalized(kf.descriptor):
                raise InvalidArgumentError(
                    f"video {self.video_id!r}: keyframe descriptors must be unit-normalized"
                )


# One inner list of RankedCandidate per keyframe.
CandidateSet = list[list[RankedCandidate]]


@dataclass(frozen=True)
class AggregationConfig:
    K: int = DEFAULT_K
    strategy: str = "simple"
    blend_lambda: float = DEFAULT_LAMBDA
    top_scored: int | None = None  # candidates per keyframe given a local score; default K
    top_matches: int = DEFAULT_TOP_MATCHES  # keypoint matches averaged into the score
    dbscan: DbscanParams = field(default_factory=DbscanParams)

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise InvalidArgumentError(f"unknown strategy {self.strategy!r}")
        if not 0.0 <= self.blend_lambda <= 1.0:
            raise InvalidArgumentError("lambda must be in [0, 1]")
        if self.top_scored is not None and self.top_scored > self.K:
            raise InvalidArgumentError("top_scored must be <= K")


@dataclass
class Prediction:
    video_id: str
    location: GeoPoint
    winning_location_id: int | None
    total_vote: float
    tallies: dict[int, float]
    strategy: str
    flags: list[str] = field(default_factory=list)


def retrieve_candidates(video: VideoQuery, index: Index, k: int = DEFAULT_K) -> CandidateSet:
    return [index.knn(kf.descriptor, k) for kf in video.keyframes]


def _flatten(cands: CandidateSet) -> list[RankedCandidate]:
    flat = [c for frame in cands for c in frame]
    if not flat:
        raise InvalidArgumentError("empty candidate set")
    return flat


def _tally(
    flat: list[RankedCandidate],
    weights: Sequence[float],
    video_id: str,
    strategy: str,
    flags: list[str] | None = None,
) -> Prediction:
    tallies: dict[int, float] = {}
    rank_sums: dict[int, int] = {}
    locations: dict[int, GeoPoint] = {}
    for cand, w in zip(flat, weights):
        tallies[cand.location_id] = tallies.get(cand.location_id, 0.0) + w
        rank_sums[cand.location_id] = rank_sums.get(cand.location_id, 0) + cand.rank
        locations[cand.location_id] = cand.location
    winner = min(tallies, key=lambda loc: (-tallies[loc], rank_sums[loc], loc))
    return Prediction(
        video_id=video_id,
        location=locations[winner],
        winning_location_id=winner,
        total_vote=tallies[winner],
        tallies=tallies,
        strategy=strategy,
        flags=list(flags or []),
    )


def candidate_weight(cand: RankedCandidate, strategy: str, blend_lambda: float) -> float:
    """Per-candidate vote weight under a non-density strategy."""
    if strategy == "simple":
        return 1.0
    if strategy == "weighted_rank":
        return 1.0 / cand.rank
    if strategy == "blended":
        score = cand.local_score if cand.local_score is not None else 0.0
        return blend_lambda / cand.rank + (1.0 - blend_lambda) * score
    raise InvalidArgumentError(f"no per-candidate weight for strategy {strategy!r}")


def simple_vote(cands: CandidateSet, video_id: str = "") -> Prediction:
    flat = _flatten(cands)
    return _tally(flat, [1.0] * len(flat), video_id, "simple")


def weighted_rank_vote(cands: CandidateSet, video_id: str = "") -> Prediction:
    flat = _flatten(cands)
    return _tally(flat, [1.0 / c.rank for c in flat], video_id, "weighted_rank")


def local_match_score(
    query_keypoints: np.ndarray | None,
    candidate_keypoints: np.ndarray | None,
    top_matches: int = DEFAULT_TOP_MATCHES,
) -> float:
    """Brute-force keypoint matching score in [0, 1]; 0 when either set is missing.

    Each query keypoint is matched to its nearest candidate keypoint by L2;
    the score is 1 / (1 + mean of the ``top_matches`` smallest match
    distances).
    """
    if top_matches < 1:
        raise InvalidArgumentError("top_matches must be >= 1")
    if query_keypoints is None or candidate_keypoints is None:
        return 0.0
    q = np.asarray(query_keypoints, dtype=np.float64)
    c = np.asarray(candidate_keypoints, dtype=np.float64)
    if q.size == 0 or c.size == 0:
        return 0.0
    dists = np.sqrt(((q[:, None, :] - c[None, :, :]) ** 2).sum(axis=2)).min(axis=1)
    best = np.sort(dists)[:top_matches]
    return float(1.0 / (1.0 + best.mean()))


def attach_local_scores(
    cands: CandidateSet,
    video: VideoQuery,
    reference_keypoints: Mapping[int, np.ndarray],
    top_scored: int | None = None,
    top_matches: int = DEFAULT_TOP_MATCHES,
) -> None:
    """Fill local_score on candidates ranked <= top_scored (default: all).

    Candidates whose reference image has no keypoints, or keyframes without
    query keypoints, keep local_score = None and later score 0 with a
    missing-data flag.
    """
    for kf, frame_cands in zip(video.keyframes, cands):
        for cand in frame_cands:
            if top_scored is not None and cand.rank > top_scored:
                continue
            ref_kp = reference_keypoints.get(cand.image_id)
            if kf.keypoints is None or ref_kp is None:
                continue
            cand.local_score = local_match_score(kf.keypoints, ref_kp, top_matches)


def blended_vote(
    cands: CandidateSet,
    video_id: str = "",
    blend_lambda: float = DEFAULT_LAMBDA,
    top_scored: int | None = None,
) -> Prediction:
    """Linear blend of rank weight and local-feature match score.

    Candidates ranked above ``top_scored`` contribute lambda/rank only.
    """
    flat = _flatten(cands)
    flags: list[str] = []
    weights = []
    for cand in flat:
        scored = top_scored is None or cand.rank <= top_scored
        if scored and cand.local_score is None:
            flags = ["missing_keypoints"]
        if scored:
            weights.append(candidate_weight(cand, "blended", blend_lambda))
        else:
            weights.append(blend_lambda / cand.rank)
    return _tally(flat, weights, video_id, "blended", flags)


def density_vote(
    cands: CandidateSet,
    params: DbscanParams = DbscanParams(),
    inner: str = "simple",
    video_id: str = "",
    blend_lambda: float = DEFAULT_LAMBDA,
    top_scored: int | None = None,
) -> Prediction:
    """Let only the densest spatial cluster of candidates vote.

    Candidate locations are projected about their centroid, clustered with
    DBSCAN, and the cluster with the largest total vote weight (under the
    inner strategy) survives. If everything is noise, the inner strategy runs
    over all candidates and the prediction is flagged ``no_dense_cluster``.
    """
    if inner not in ("simple", "weighted_rank", "blended"):
        raise InvalidArgumentError(f"invalid inner strategy {inner!r}")
    flat = _flatten(cands)

    origin = centroid([c.location for c in flat])
    planar = [project_local(origin, c.location) for c in flat]
    labels = dbscan(planar, params)
    weights = [_inner_weight(c, inner, blend_lambda, top_scored) for c in flat]
    winner = winning_cluster(labels, weights)

    strategy = f"density+{inner}"
    if winner is None:
        pred = _tally(flat, weights, video_id, strategy, ["no_dense_cluster"])
        return pred
    kept = [i for i, lab in enumerate(labels) if lab == winner]
    pred = _tally(
        [flat[i] for i in kept], [weights[i] for i in kept], video_id, strategy
    )
    return pred


def _inner_weight(
    cand: RankedCandidate, inner: str, blend_lambda: float, top_scored: int | None
) -> float:
    if inner == "blended" and top_scored is not None and cand.rank > top_scored:
        return blend_lambda / cand.rank
    return candidate_weight(cand, inner, blend_lambda)


def aggregate(
    cands: CandidateSet, cfg: AggregationConfig, video_id: str = ""
) -> Prediction:
    """Dispatch a candidate set to the configured strategy."""
    if cfg.strategy == "simple":
        return simple_vote(cands, video_id)
    if cfg.strategy == "weighted_rank":
        return weighted_rank_vote(cands, video_id)
    if cfg.strategy == "blended":
        return blended_vote(cands, video_id, cfg.blend_lambda, cfg.top_scored)
    inner = cfg.strategy.split("+", 1)[1]
    return density_vote(
        cands, cfg.dbscan, inner, video_id, cfg.blend_lambda, cfg.top_scored
    )
