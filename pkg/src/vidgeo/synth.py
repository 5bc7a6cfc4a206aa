"""Synthetic street-view-shaped world with known ground truth.

A grid of capture locations, 24 reference images per location (12 yaws x 2
pitches), with descriptors drawn from a latent vector field that is smooth
over the grid. Nearby locations therefore have correlated descriptors, which
is the property that makes location voting meaningful; view direction and
per-image noise perturb each reference. Synthetic videos sample noisy
descriptors along a path, so retrieval quality (and hence the relative merit
of the aggregation strategies) is controllable through the noise knobs.

Everything is deterministic under (spec, seed); per-image randomness is
seeded from (seed, image_id) so generation order cannot matter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .descriptor import as_image, l2_distance, normalize
from .errors import InvalidArgumentError
from .geo import GeoPoint, centroid, offset_geopoint, project_local
from .store import ReferenceRecord
from .voting import Keyframe, VideoQuery


@dataclass(frozen=True)
class WorldSpec:
    rows: int = 50
    cols: int = 50
    spacing: float = 15.0  # meters between adjacent capture locations
    origin: GeoPoint = field(default_factory=lambda: GeoPoint(40.4406, -79.9959))
    dim: int = 64  # descriptor dimension
    yaw_count: int = 12
    pitches: tuple[float, ...] = (0.0, 30.0)
    corr_length: float = 2.0  # latent-field smoothness, in grid cells
    view_amplitude: float = 0.8  # deterministic yaw/pitch offset scale
    view_sigma: float = 0.6  # per-reference-image gaussian noise
    keypoints_per_image: int = 32
    keypoint_dim: int = 8
    keypoint_sigma: float = 0.3

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1 or self.spacing <= 0:
            raise InvalidArgumentError("world grid must be non-empty with positive spacing")
        if self.dim < 2:
            raise InvalidArgumentError("descriptor dimension must be >= 2")

    @property
    def views_per_location(self) -> int:
        return self.yaw_count * len(self.pitches)


class SyntheticWorld:
    """Latent field plus derived reference records and keypoint sets."""

    def __init__(self, spec: WorldSpec, seed: int):
        self.spec = spec
        self.seed = seed
        rng = np.random.default_rng(np.random.SeedSequence([seed, 0]))
        noise = rng.standard_normal((spec.rows, spec.cols, spec.dim))
        latent = ndimage.gaussian_filter(
            noise, sigma=(spec.corr_length, spec.corr_length, 0), mode="nearest"
        )
        # re-standardize per component: smoothing shrinks the variance
        latent -= latent.mean(axis=(0, 1), keepdims=True)
        std = latent.std(axis=(0, 1), keepdims=True)
        std[std == 0] = 1.0
        self.latent = latent / std

        # fixed unit directions for the deterministic yaw/pitch offsets
        dirs = rng.standard_normal((3, spec.dim))
        self._view_dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
        # fixed projection from descriptor latents to keypoint space
        self._kp_proj = rng.standard_normal((spec.keypoint_dim, spec.dim)) / math.sqrt(spec.dim)

    # -- geometry --------------------------------------------------------

    def location_point(self, row: int, col: int) -> GeoPoint:
        return offset_geopoint(
            self.spec.origin, col * self.spec.spacing, row * self.spec.spacing
        )

    def to_planar(self, p: GeoPoint) -> tuple[float, float]:
        pp = project_local(self.spec.origin, p)
        return pp.x, pp.y

    def contains(self, p: GeoPoint, tol: float = 1e-6) -> bool:
        x, y = self.to_planar(p)
        return (
            -tol <= x <= (self.spec.cols - 1) * self.spec.spacing + tol
            and -tol <= y <= (self.spec.rows - 1) * self.spec.spacing + tol
        )

    def latent_at(self, p: GeoPoint) -> np.ndarray:
        """Bilinear interpolation of the latent field at an arbitrary point."""
        x, y = self.to_planar(p)
        gx = min(max(x / self.spec.spacing, 0.0), self.spec.cols - 1)
        gy = min(max(y / self.spec.spacing, 0.0), self.spec.rows - 1)
        c0, r0 = int(gx), int(gy)
        c1, r1 = min(c0 + 1, self.spec.cols - 1), min(r0 + 1, self.spec.rows - 1)
        fx, fy = gx - c0, gy - r0
        top = (1 - fx) * self.latent[r0, c0] + fx * self.latent[r0, c1]
        bot = (1 - fx) * self.latent[r1, c0] + fx * self.latent[r1, c1]
        return (1 - fy) * top + fy * bot

    # -- descriptors -----------------------------------------------------

    def _view_offset(self, yaw_deg: float, pitch_deg: float) -> np.ndarray:
        a = math.radians(yaw_deg)
        u_cos, u_sin, u_pitch = self._view_dirs
        return self.spec.view_amplitude * (
            math.cos(a) * u_cos + math.sin(a) * u_sin + (pitch_deg / 30.0) * u_pitch
        )

    def reference_descriptor(self, row: int, col: int, yaw: float, pitch: float,
                             image_id: int) -> np.ndarray:
        rng = np.random.default_rng(np.random.SeedSequence([self.seed, 1, image_id]))
        vec = (
            self.latent[row, col]
            + self._view_offset(yaw, pitch)
            + self.spec.view_sigma * rng.standard_normal(self.spec.dim)
        )
        return normalize(vec)

    def keypoints_for(self, image_id: int) -> np.ndarray:
        """Synthetic local-feature set whose match distances shrink with proximity."""
        loc_id, _ = divmod(image_id, self.spec.views_per_location)
        row, col = divmod(loc_id, self.spec.cols)
        base = self._kp_proj @ self.latent[row, col]
        rng = np.random.default_rng(np.random.SeedSequence([self.seed, 2, image_id]))
        return base + self.spec.keypoint_sigma * rng.standard_normal(
            (self.spec.keypoints_per_image, self.spec.keypoint_dim)
        )

    def keypoints_at(self, p: GeoPoint, rng: np.random.Generator) -> np.ndarray:
        base = self._kp_proj @ self.latent_at(p)
        return base + self.spec.keypoint_sigma * rng.standard_normal(
            (self.spec.keypoints_per_image, self.spec.keypoint_dim)
        )

    def reference_keypoints(self, image_ids) -> dict[int, np.ndarray]:
        return {i: self.keypoints_for(i) for i in image_ids}


def generate_world(spec: WorldSpec, seed: int) -> tuple[SyntheticWorld, list[ReferenceRecord]]:
    """Build the world and its rows*cols*24 reference records (row-major ids)."""
    world = SyntheticWorld(spec, seed)
    records: list[ReferenceRecord] = []
    vpl = spec.views_per_location
    for row in range(spec.rows):
        for col in range(spec.cols):
            loc_id = row * spec.cols + col
            point = world.location_point(row, col)
            view = 0
            for pitch in spec.pitches:
                for yi in range(spec.yaw_count):
                    yaw = yi * (360.0 / spec.yaw_count)
                    image_id = loc_id * vpl + view
                    records.append(
                        ReferenceRecord(
                            image_id=image_id,
                            location_id=loc_id,
                            location=point,
                            yaw=yaw,
                            pitch=pitch,
                            descriptor=world.reference_descriptor(
                                row, col, yaw, pitch, image_id
                            ),
                        )
                    )
                    view += 1
    return world, records


def generate_video(
    world: SyntheticWorld,
    path: list[GeoPoint],
    n_keyframes: int,
    noise_sigma: float,
    seed: int,
    video_id: str = "video",
    with_keypoints: bool = True,
    outlier_prob: float = 0.3,
) -> VideoQuery:
    """Sample keyframe descriptors along a path; ground truth is the path centroid.

    With probability ``outlier_prob`` a keyframe is uninformative: its global
    descriptor is a random unit vector, so retrieval lands somewhere arbitrary
    (the close-up or blurry-shot failure mode). Local keypoints stay tied to
    the true position regardless, mirroring a local feature that still works
    when the global descriptor does not.
    """
    if not path:
        raise InvalidArgumentError("video path must contain at least one point")
    if n_keyframes < 1:
        raise InvalidArgumentError("need at least one keyframe")
    for p in path:
        if not world.contains(p):
            raise InvalidArgumentError(f"path point {p} outside world bounds")

    rng = np.random.default_rng(np.random.SeedSequence([world.seed, 3, seed]))
    spec = world.spec
    keyframes: list[Keyframe] = []
    for k in range(n_keyframes):
        t = 0.5 if n_keyframes == 1 else k / (n_keyframes - 1)
        pos = _along_path(path, t)
        yaw = rng.uniform(0.0, 360.0)
        pitch = spec.pitches[rng.integers(len(spec.pitches))]
        if rng.uniform() < outlier_prob:
            vec = rng.standard_normal(spec.dim)
        else:
            vec = (
                world.latent_at(pos)
                + world._view_offset(yaw, pitch)
                + noise_sigma * rng.standard_normal(spec.dim)
            )
        kp = world.keypoints_at(pos, rng) if with_keypoints else None
        keyframes.append(Keyframe(descriptor=normalize(vec), keypoints=kp))
    return VideoQuery(video_id=video_id, keyframes=keyframes, ground_truth=centroid(path))


def _along_path(path: list[GeoPoint], t: float) -> GeoPoint:
    if len(path) == 1:
        return path[0]
    pos = t * (len(path) - 1)
    i = min(int(pos), len(path) - 2)
    f = pos - i
    return GeoPoint(
        path[i].lat + f * (path[i + 1].lat - path[i].lat),
        path[i].lon + f * (path[i + 1].lon - path[i].lon),
    )


def generate_videos(
    world: SyntheticWorld,
    count: int,
    n_keyframes: int = 8,
    noise_sigma: float = 1.0,
    seed: int = 0,
    path_cells: float = 3.0,
    with_keypoints: bool = True,
    outlier_prob: float = 0.3,
) -> list[VideoQuery]:
    """Random short walking paths, one VideoQuery each."""
    spec = world.spec
    rng = np.random.default_rng(np.random.SeedSequence([world.seed, 4, seed]))
    max_x = (spec.cols - 1) * spec.spacing
    max_y = (spec.rows - 1) * spec.spacing
    videos = []
    for v in range(count):
        x0 = rng.uniform(0, max_x)
        y0 = rng.uniform(0, max_y)
        angle = rng.uniform(0, 2 * math.pi)
        length = path_cells * spec.spacing
        x1 = min(max(x0 + length * math.cos(angle), 0.0), max_x)
        y1 = min(max(y0 + length * math.sin(angle), 0.0), max_y)
        path = [
            offset_geopoint(spec.origin, x0, y0),
            offset_geopoint(spec.origin, x1, y1),
        ]
        videos.append(
            generate_video(
                world, path, n_keyframes, noise_sigma,
                seed=v, video_id=f"synthetic-{v:03d}", with_keypoints=with_keypoints,
                outlier_prob=outlier_prob,
            )
        )
    return videos


# -- image-space synthetic descriptor and invariance sweeps ---------------


def histogram_halves_descriptor(image) -> np.ndarray:
    """64-bin color histogram of the left and right image halves, concatenated
    and unit-normalized. Sensitive to rotation/scale, unlike a global histogram."""
    from .keyframes import rgb_histogram

    img = as_image(image)
    w = img.shape[1]
    split = max(w // 2, 1)
    left = rgb_histogram(img[:, :split])
    right = rgb_histogram(img[:, split:]) if split < w else np.zeros(64, dtype=np.int64)
    vec = np.concatenate([left, right]).astype(np.float64)
    return normalize(vec) if vec.any() else vec


ROTATION_GRID = tuple(range(0, 361, 10))
SCALE_GRID = tuple(round(1.0 - 0.1 * i, 1) for i in range(10))  # 1.0 down to 0.1


def invariance_sweep(image, f=histogram_halves_descriptor, transform: str = "rotation"):
    """Descriptor distance of a transformed image to the original.

    Rotation sweeps 0..360 degrees in steps of 10 (black fill); scale shrinks
    the image by 0.1 per step from 1.0 to 0.1. Returns (parameter, distance)
    pairs.
    """
    img = as_image(image)
    base = f(img)
    curve = []
    if transform == "rotation":
        for angle in ROTATION_GRID:
            rotated = ndimage.rotate(
                img, -angle, axes=(0, 1), reshape=False, order=0, mode="constant", cval=0
            )
            curve.append((float(angle), l2_distance(f(rotated.astype(np.uint8)), base)))
    elif transform == "scale":
        for scale in SCALE_GRID:
            if scale == 1.0:
                scaled = img
            else:
                h = max(1, int(round(img.shape[0] * scale)))
                w = max(1, int(round(img.shape[1] * scale)))
                zy, zx = h / img.shape[0], w / img.shape[1]
                scaled = ndimage.zoom(img, (zy, zx, 1), order=0)[:h, :w]
            curve.append((scale, l2_distance(f(scaled.astype(np.uint8)), base)))
    else:
        raise InvalidArgumentError(f"unknown transform {transform!r}")
    return curve
