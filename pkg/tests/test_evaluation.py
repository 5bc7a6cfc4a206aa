from collections import Counter

import numpy as np
import pytest

from vidgeo.errors import InvalidArgumentError
from vidgeo.evaluation import (
    EvalConfig,
    compare_methods,
    oracle,
    precision_at,
    precision_curve,
    random_baseline,
)
from vidgeo.geo import GeoPoint, haversine_distance, offset_geopoint
from vidgeo.index import RankedCandidate, build_index
from vidgeo.synth import WorldSpec, generate_videos, generate_world
from vidgeo.voting import Prediction

ORIGIN = GeoPoint(40.44, -79.99)


def pred_at(x, y, vid="v"):
    return Prediction(
        video_id=vid,
        location=offset_geopoint(ORIGIN, x, y),
        winning_location_id=0,
        total_vote=1.0,
        tallies={},
        strategy="simple",
    )


def cand(location_id, rank, x=0.0, y=0.0):
    return RankedCandidate(
        image_id=location_id * 10 + rank,
        location_id=location_id,
        location=offset_geopoint(ORIGIN, x, y),
        rank=rank,
        distance=0.1 * rank,
    )


class TestPrecision:
    def test_perfect_predictor(self):
        preds = [pred_at(0, 0) for _ in range(4)]
        truths = [ORIGIN] * 4
        for d in (0.0, 5.0, 150.0):
            assert precision_at(preds, truths, d) == 1.0

    def test_half_within(self):
        preds = [pred_at(0, 0), pred_at(0, 500)]
        truths = [ORIGIN, ORIGIN]
        assert precision_at(preds, truths, 100.0) == 0.5

    def test_counting_oracle(self):
        rng = np.random.default_rng(30)
        preds = [pred_at(float(rng.uniform(-300, 300)), float(rng.uniform(-300, 300)))
                 for _ in range(50)]
        truths = [ORIGIN] * 50
        for d in (25.0, 100.0, 250.0):
            expected = sum(
                1 for p in preds if haversine_distance(p.location, ORIGIN) <= d
            ) / 50
            assert precision_at(preds, truths, d) == expected

    def test_threshold_is_closed(self):
        p = pred_at(0, 100)
        d = haversine_distance(p.location, ORIGIN)
        assert precision_at([p], [ORIGIN], d) == 1.0

    def test_curve_monotone(self):
        rng = np.random.default_rng(31)
        preds = [pred_at(float(rng.uniform(-400, 400)), 0.0) for _ in range(30)]
        curve = precision_curve(preds, [ORIGIN] * 30)
        values = [p for _, p in curve.points]
        assert values == sorted(values)

    def test_length_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            precision_at([pred_at(0, 0)], [], 5.0)


class TestRandomBaseline:
    def test_singleton(self):
        cands = [[cand(3, 1)]]
        for seed in (0, 1, 999):
            assert random_baseline(cands, seed).winning_location_id == 3

    def test_deterministic_under_seed(self):
        cands = [[cand(i, r, x=10.0 * i) for r, i in enumerate([1, 2, 3, 4], 1)]]
        a = random_baseline(cands, seed=42)
        b = random_baseline(cands, seed=42)
        assert a == b

    def test_near_uniform_frequencies(self):
        """Chi-square-style sanity: 4 equal candidates within +-2% of 25% over 10k draws."""
        cands = [[cand(i, r, x=10.0 * i) for r, i in enumerate([0, 1, 2, 3], 1)]]
        counts = Counter(
            random_baseline(cands, seed).winning_location_id for seed in range(10_000)
        )
        for lid in range(4):
            assert abs(counts[lid] / 10_000 - 0.25) <= 0.02


class TestOracle:
    def test_exact_hit(self):
        cands = [[cand(1, 1, x=0, y=0), cand(2, 2, x=200, y=0)]]
        pred = oracle(cands, ORIGIN)
        assert pred.winning_location_id == 1
        assert haversine_distance(pred.location, ORIGIN) == 0.0

    def test_min_selection(self):
        cands = [[cand(1, 1, x=200, y=0), cand(2, 2, x=10, y=0)]]
        assert oracle(cands, ORIGIN).winning_location_id == 2

    def test_brute_force_scan_oracle(self):
        rng = np.random.default_rng(32)
        for _ in range(20):
            flat = [cand(i, r, x=float(rng.uniform(-500, 500)), y=float(rng.uniform(-500, 500)))
                    for r, i in enumerate(rng.permutation(8)[:5], start=1)]
            pred = oracle([flat], ORIGIN)
            best = min(
                flat, key=lambda c: (haversine_distance(c.location, ORIGIN), c.location_id)
            )
            assert pred.winning_location_id == best.location_id

    def test_missing_truth(self):
        with pytest.raises(InvalidArgumentError):
            oracle([[cand(1, 1)]], None)


@pytest.fixture(scope="module")
def small_bench():
    world, records = generate_world(WorldSpec(rows=8, cols=8), seed=3)
    index = build_index(records)
    videos = generate_videos(world, 10, n_keyframes=4, seed=1)
    return world, index, videos


class TestCompareMethods:
    def test_empty_strategy_list(self, small_bench):
        _, index, videos = small_bench
        curves, diags = compare_methods(videos, index, [], EvalConfig(seed=5))
        assert set(curves) == {"random", "oracle"}
        assert len(diags) == len(videos)

    def test_oracle_dominates_everything(self, small_bench):
        _, index, videos = small_bench
        curves, diags = compare_methods(
            videos, index, ["simple", "weighted_rank", "density+simple"], EvalConfig(seed=5)
        )
        for row in diags:
            for method in ("random", "simple", "weighted_rank", "density+simple"):
                assert row["oracle"]["error_m"] <= row[method]["error_m"] + 1e-12
        for method, curve in curves.items():
            for (d, p), (_, p_oracle) in zip(curve.points, curves["oracle"].points):
                assert p_oracle >= p

    def test_requires_ground_truth(self, small_bench):
        _, index, videos = small_bench
        bad = generate_videos(small_bench[0], 1, n_keyframes=2, seed=9)
        bad[0].ground_truth = None
        with pytest.raises(InvalidArgumentError):
            compare_methods(bad, index, [], EvalConfig())

    def test_grid_validation(self):
        with pytest.raises(InvalidArgumentError):
            EvalConfig(grid=(10.0, 5.0))
        with pytest.raises(InvalidArgumentError):
            EvalConfig(grid=(-1.0, 5.0))
