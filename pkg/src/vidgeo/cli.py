"""Command-line surface for the video geolocation pipeline.

Subcommands: index, keyframes, locate, evaluate, heatmap, synth.
Exit codes: 0 success, 1 runtime failure, 2 usage or format error.

All randomness flows from explicit --seed flags; coordinates in JSON outputs
use fixed 9-decimal formatting so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import evaluation, index as index_mod, keyframes as kf_mod, store, synth, voting
from .clustering import DbscanParams
from .descriptor import occlusion_heatmap
from .errors import DegenerateInputError, FormatError, InvalidArgumentError
from .geo import GeoPoint
from .voting import AggregationConfig, Keyframe, VideoQuery

USAGE_EXIT = 2
RUNTIME_EXIT = 1


def _fmt_coord(x: float) -> str:
    return f"{x:.9f}"


# -- raster I/O -----------------------------------------------------------


def read_ppm(path) -> np.ndarray:
    """Binary PPM (P6), maxval 255."""
    with open(path, "rb") as fh:
        data = fh.read()
    fields: list[bytes] = []
    pos = 0
    while len(fields) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos] != 0x0A:
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError(f"{path}: truncated PPM header", start)
        fields.append(data[start:pos])
    if fields[0] != b"P6":
        raise FormatError(f"{path}: not a binary PPM (P6) file", 0)
    width, height, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    if maxval != 255:
        raise FormatError(f"{path}: unsupported maxval {maxval}", 0)
    pos += 1  # single whitespace after maxval
    need = width * height * 3
    raster = data[pos : pos + need]
    if len(raster) < need:
        raise FormatError(f"{path}: truncated raster", pos + len(raster))
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width, 3)


def write_ppm(image: np.ndarray, path) -> None:
    h, w = image.shape[0], image.shape[1]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode())
        fh.write(np.ascontiguousarray(image, dtype=np.uint8).tobytes())


def _load_frames(frames_path: str, sidecar: str | None) -> list[np.ndarray]:
    p = Path(frames_path)
    if p.is_dir():
        files = sorted(f for f in p.iterdir() if f.suffix.lower() == ".ppm")
        if not files:
            raise FormatError(f"no .ppm frames in {p}")
        return [read_ppm(f) for f in files]
    if sidecar is None:
        raise InvalidArgumentError("raw frame stream requires --sidecar")
    with open(sidecar) as fh:
        meta = json.load(fh)
    w, h, count = int(meta["width"]), int(meta["height"]), int(meta["count"])
    frame_bytes = w * h * 3
    raw = p.read_bytes()
    if len(raw) < frame_bytes * count:
        raise FormatError(f"{p}: raw stream shorter than sidecar declares", len(raw))
    return [
        np.frombuffer(raw, dtype=np.uint8, count=frame_bytes, offset=i * frame_bytes)
        .reshape(h, w, 3)
        for i in range(count)
    ]


# -- video descriptor JSONL ----------------------------------------------


def write_videos_jsonl(videos: list[VideoQuery], path) -> None:
    with open(path, "w") as fh:
        for v in videos:
            obj = {"video_id": v.video_id}
            if v.ground_truth is not None:
                obj["ground_truth"] = {
                    "lat": _fmt_coord(v.ground_truth.lat),
                    "lon": _fmt_coord(v.ground_truth.lon),
                }
            obj["keyframes"] = [
                {
                    "descriptor": [float(np.float32(x)) for x in kf.descriptor],
                    "keypoints": None
                    if kf.keypoints is None
                    else [[float(np.float32(x)) for x in row] for row in kf.keypoints],
                }
                for kf in v.keyframes
            ]
            fh.write(json.dumps(obj) + "\n")


def read_videos_jsonl(path) -> list[VideoQuery]:
    videos = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}:{lineno}: invalid JSON ({exc})") from exc
            gt = obj.get("ground_truth")
            keyframes = [
                Keyframe(
                    descriptor=np.array(kf["descriptor"], dtype=np.float64),
                    keypoints=None
                    if kf.get("keypoints") is None
                    else np.array(kf["keypoints"], dtype=np.float64),
                )
                for kf in obj["keyframes"]
            ]
            videos.append(
                VideoQuery(
                    video_id=str(obj["video_id"]),
                    keyframes=keyframes,
                    ground_truth=None
                    if gt is None
                    else GeoPoint(float(gt["lat"]), float(gt["lon"])),
                )
            )
    return videos


def _prediction_obj(pred: voting.Prediction) -> dict:
    return {
        "video_id": pred.video_id,
        "strategy": pred.strategy,
        "lat": _fmt_coord(pred.location.lat),
        "lon": _fmt_coord(pred.location.lon),
        "winning_location_id": pred.winning_location_id,
        "total_vote": round(pred.total_vote, 12),
        "tallies": {str(k): round(v, 12) for k, v in sorted(pred.tallies.items())},
        "flags": pred.flags,
    }


# -- subcommand implementations ------------------------------------------


def _sniff_records(path: str) -> list[store.ReferenceRecord]:
    with open(path, "rb") as fh:
        magic = fh.read(4)
    if magic == store.MAGIC:
        return store.read_store(path)
    return store.read_csv(path)


def cmd_index_build(args) -> int:
    records = _sniff_records(args.input)
    cfg = index_mod.IndexConfig(
        mode="approximate" if args.mode == "approx" else "exact",
        num_partitions=args.partitions,
        probes=args.probes,
    )
    idx = index_mod.build_index(records, cfg)
    index_mod.save_index(idx, args.out)
    print(f"indexed {len(records)} records ({cfg.mode}) -> {args.out}")
    return 0


def cmd_keyframes(args) -> int:
    frames = _load_frames(args.frames, args.sidecar)
    cfg = kf_mod.KeyframeConfig(threshold=args.threshold, normalize_hist=args.normalized)
    indices = kf_mod.select_keyframes(frames, cfg)
    with open(args.out, "w") as fh:
        json.dump({"keyframes": indices, "threshold": args.threshold,
                   "normalized": args.normalized}, fh)
        fh.write("\n")
    print(f"selected {len(indices)} keyframes of {len(frames)} frames -> {args.out}")
    return 0


def cmd_locate(args) -> int:
    idx = index_mod.load_index(args.index)
    videos = read_videos_jsonl(args.video_descriptors)
    ref_kp = None
    if args.ref_keypoints:
        with open(args.ref_keypoints) as fh:
            raw = json.load(fh)
        ref_kp = {int(k): np.array(v, dtype=np.float64) for k, v in raw.items()}
    agg = AggregationConfig(
        K=args.K,
        strategy=args.strategy,
        blend_lambda=getattr(args, "lambda"),
        top_scored=args.top_scored,
        top_matches=args.top_matches,
        dbscan=DbscanParams(eps=args.eps, min_pts=args.min_pts),
    )
    location_coords: dict[int, GeoPoint] = {}
    vote_totals: dict[int, float] = {}
    with open(args.out, "w") as fh:
        for video in videos:
            cands = voting.retrieve_candidates(video, idx, agg.K)
            if ref_kp is not None:
                voting.attach_local_scores(cands, video, ref_kp, agg.top_scored, agg.top_matches)
            for frame in cands:
                for c in frame:
                    location_coords[c.location_id] = c.location
            pred = voting.aggregate(cands, agg, video.video_id)
            for loc, v in pred.tallies.items():
                vote_totals[loc] = vote_totals.get(loc, 0.0) + v
            fh.write(json.dumps(_prediction_obj(pred)) + "\n")
    if args.geojson:
        features = [
            {
                "type": "Feature",
                "geometry": {
                    "type": "Point",
                    "coordinates": [
                        float(_fmt_coord(location_coords[loc].lon)),
                        float(_fmt_coord(location_coords[loc].lat)),
                    ],
                },
                "properties": {"location_id": loc, "votes": round(vote_totals[loc], 12)},
            }
            for loc in sorted(vote_totals)
        ]
        with open(args.geojson, "w") as fh:
            json.dump({"type": "FeatureCollection", "features": features}, fh)
            fh.write("\n")
    print(f"located {len(videos)} videos ({args.strategy}) -> {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    with open(args.truths) as fh:
        truths_raw = json.load(fh)
    truths = {vid: GeoPoint(float(t["lat"]), float(t["lon"])) for vid, t in truths_raw.items()}

    by_method: dict[str, list[voting.Prediction]] = {}
    truth_lists: dict[str, list[GeoPoint]] = {}
    with open(args.predictions) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            vid = obj["video_id"]
            if vid not in truths:
                raise InvalidArgumentError(f"no ground truth for video {vid!r}")
            pred = voting.Prediction(
                video_id=vid,
                location=GeoPoint(float(obj["lat"]), float(obj["lon"])),
                winning_location_id=obj.get("winning_location_id"),
                total_vote=obj.get("total_vote", 0.0),
                tallies={},
                strategy=obj.get("strategy", "unknown"),
            )
            by_method.setdefault(pred.strategy, []).append(pred)
            truth_lists.setdefault(pred.strategy, []).append(truths[vid])

    grid = [float(d) for d in args.grid.split(",")]
    curves = {
        m: evaluation.precision_curve(preds, truth_lists[m], grid)
        for m, preds in by_method.items()
    }
    evaluation.write_table_csv(curves, args.out)
    print(f"evaluated {sum(len(p) for p in by_method.values())} predictions -> {args.out}")
    return 0


def cmd_heatmap(args) -> int:
    img = read_ppm(args.query_image)
    reference = np.loadtxt(args.reference_descriptor, delimiter=None).ravel()
    if args.descriptor != "synthetic-histogram":
        raise InvalidArgumentError(f"unknown descriptor function {args.descriptor!r}")
    hm = occlusion_heatmap(
        img, reference, synth.histogram_halves_descriptor, args.patch, args.stride
    )
    np.savetxt(args.out, hm.values, fmt="%.9f", delimiter=",")
    print(f"heatmap {hm.values.shape[0]}x{hm.values.shape[1]} -> {args.out}")
    return 0


def _world_spec_from_args(args) -> synth.WorldSpec:
    return synth.WorldSpec(
        rows=args.rows,
        cols=args.cols,
        spacing=args.spacing,
        origin=GeoPoint(args.origin_lat, args.origin_lon),
        dim=args.dim,
    )


def _write_manifest(spec: synth.WorldSpec, seed: int, path) -> None:
    obj = asdict(spec)
    obj["origin"] = {"lat": spec.origin.lat, "lon": spec.origin.lon}
    with open(path, "w") as fh:
        json.dump({"spec": obj, "seed": seed, "tool": "vidgeo", "version": "0.1.0"}, fh, indent=2)
        fh.write("\n")


def _world_from_manifest(path) -> synth.SyntheticWorld:
    with open(path) as fh:
        manifest = json.load(fh)
    raw = dict(manifest["spec"])
    raw["origin"] = GeoPoint(raw["origin"]["lat"], raw["origin"]["lon"])
    raw["pitches"] = tuple(raw["pitches"])
    spec = synth.WorldSpec(**raw)
    return synth.SyntheticWorld(spec, int(manifest["seed"]))


def cmd_synth_world(args) -> int:
    spec = _world_spec_from_args(args)
    world, records = synth.generate_world(spec, args.seed)
    store.write_store(records, args.out)
    if args.manifest:
        _write_manifest(spec, args.seed, args.manifest)
    if args.keypoints_out:
        kp = world.reference_keypoints(r.image_id for r in records)
        with open(args.keypoints_out, "w") as fh:
            json.dump(
                {str(i): [[float(np.float32(x)) for x in row] for row in v]
                 for i, v in kp.items()},
                fh,
            )
            fh.write("\n")
    print(f"world {spec.rows}x{spec.cols}: {len(records)} records -> {args.out}")
    return 0


def cmd_synth_videos(args) -> int:
    world = _world_from_manifest(args.world_manifest)
    videos = synth.generate_videos(
        world, args.count, n_keyframes=args.keyframes, noise_sigma=args.noise,
        seed=args.seed, with_keypoints=not args.no_keypoints,
    )
    write_videos_jsonl(videos, args.out)
    if args.truths:
        truths = {
            v.video_id: {"lat": _fmt_coord(v.ground_truth.lat),
                         "lon": _fmt_coord(v.ground_truth.lon)}
            for v in videos
        }
        with open(args.truths, "w") as fh:
            json.dump(truths, fh, indent=2)
            fh.write("\n")
    print(f"{len(videos)} synthetic videos -> {args.out}")
    return 0


def cmd_synth_sweep(args) -> int:
    img = read_ppm(args.image)
    curve = synth.invariance_sweep(img, transform=args.transform)
    with open(args.out, "w") as fh:
        fh.write(f"{args.transform},distance\n")
        for param, dist in curve:
            fh.write(f"{param:g},{dist:.9f}\n")
    print(f"{args.transform} sweep ({len(curve)} points) -> {args.out}")
    return 0


# -- argument parsing -----------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vidgeo", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_index = sub.add_parser("index", help="descriptor index operations")
    index_sub = p_index.add_subparsers(dest="index_command", required=True)
    p_build = index_sub.add_parser("build", help="build a KNN index from a descriptor store")
    p_build.add_argument("--input", required=True, help="binary store or CSV of records")
    p_build.add_argument("--mode", choices=["exact", "approx"], default="exact")
    p_build.add_argument("--partitions", type=int, default=None)
    p_build.add_argument("--probes", type=int, default=index_mod.DEFAULT_PROBES)
    p_build.add_argument("--out", required=True)
    p_build.set_defaults(func=cmd_index_build)

    p_kf = sub.add_parser("keyframes", help="select keyframes from decoded frames")
    p_kf.add_argument("--frames", required=True, help="directory of .ppm frames or raw stream")
    p_kf.add_argument("--sidecar", default=None, help="JSON sidecar for raw streams")
    p_kf.add_argument("--threshold", type=float, default=0.3)
    norm = p_kf.add_mutually_exclusive_group()
    norm.add_argument("--normalized", dest="normalized", action="store_true", default=True)
    norm.add_argument("--counts", dest="normalized", action="store_false")
    p_kf.add_argument("--out", required=True)
    p_kf.set_defaults(func=cmd_keyframes)

    p_loc = sub.add_parser("locate", help="predict video locations")
    p_loc.add_argument("--index", required=True)
    p_loc.add_argument("--video-descriptors", required=True)
    p_loc.add_argument("--strategy", choices=voting.STRATEGIES, default="simple")
    p_loc.add_argument("--K", type=int, default=index_mod.DEFAULT_K)
    p_loc.add_argument("--lambda", type=float, default=voting.DEFAULT_LAMBDA)
    p_loc.add_argument("--eps", type=float, default=75.0)
    p_loc.add_argument("--min-pts", type=int, default=3)
    p_loc.add_argument("--top-scored", type=int, default=None)
    p_loc.add_argument("--top-matches", type=int, default=voting.DEFAULT_TOP_MATCHES)
    p_loc.add_argument("--ref-keypoints", default=None)
    p_loc.add_argument("--geojson", default=None)
    p_loc.add_argument("--out", required=True)
    p_loc.set_defaults(func=cmd_locate)

    p_eval = sub.add_parser("evaluate", help="precision-vs-distance table")
    p_eval.add_argument("--predictions", required=True)
    p_eval.add_argument("--truths", required=True)
    p_eval.add_argument("--grid", default="5,10,30,50,100,150")
    p_eval.add_argument("--out", required=True)
    p_eval.set_defaults(func=cmd_evaluate)

    p_hm = sub.add_parser("heatmap", help="occlusion similarity heatmap")
    p_hm.add_argument("--query-image", required=True)
    p_hm.add_argument("--reference-descriptor", required=True)
    p_hm.add_argument("--descriptor", default="synthetic-histogram")
    p_hm.add_argument("--patch", type=int, required=True)
    p_hm.add_argument("--stride", type=int, default=None)
    p_hm.add_argument("--out", required=True)
    p_hm.set_defaults(func=cmd_heatmap)

    p_synth = sub.add_parser("synth", help="synthetic world, videos, and sweeps")
    synth_sub = p_synth.add_subparsers(dest="synth_command", required=True)

    p_world = synth_sub.add_parser("world", help="generate a synthetic reference world")
    p_world.add_argument("--rows", type=int, default=50)
    p_world.add_argument("--cols", type=int, default=50)
    p_world.add_argument("--spacing", type=float, default=15.0)
    p_world.add_argument("--dim", type=int, default=64)
    p_world.add_argument("--origin-lat", type=float, default=40.4406)
    p_world.add_argument("--origin-lon", type=float, default=-79.9959)
    p_world.add_argument("--seed", type=int, required=True)
    p_world.add_argument("--manifest", default=None)
    p_world.add_argument("--keypoints-out", default=None)
    p_world.add_argument("--out", required=True)
    p_world.set_defaults(func=cmd_synth_world)

    p_vids = synth_sub.add_parser("videos", help="generate synthetic query videos")
    p_vids.add_argument("--world-manifest", required=True)
    p_vids.add_argument("--count", type=int, default=50)
    p_vids.add_argument("--keyframes", type=int, default=8)
    p_vids.add_argument("--noise", type=float, default=1.0)
    p_vids.add_argument("--seed", type=int, required=True)
    p_vids.add_argument("--no-keypoints", action="store_true")
    p_vids.add_argument("--truths", default=None)
    p_vids.add_argument("--out", required=True)
    p_vids.set_defaults(func=cmd_synth_videos)

    p_sweep = synth_sub.add_parser("sweep", help="rotation/scale invariance sweep")
    p_sweep.add_argument("--image", required=True)
    p_sweep.add_argument("--transform", choices=["rotation", "scale"], default="rotation")
    p_sweep.add_argument("--out", required=True)
    p_sweep.set_defaults(func=cmd_synth_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename}", file=sys.stderr)
        return USAGE_EXIT
    except (FormatError, InvalidArgumentError, DegenerateInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except Exception as exc:  # pragma: no cover - defensive
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_EXIT


if __name__ == "__main__":
    sys.exit(main())
