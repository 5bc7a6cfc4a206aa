"""Exact and approximate K-nearest-neighbor retrieval over reference records.

Descriptors are unit-normalized, so distances are computed through the
dot-product identity d = sqrt(max(0, 2 - 2*<a, b>)). The approximate mode is
an inverted-list partition index: k-means-style centroids over the
descriptors, each record assigned to its nearest centroid, queries scanning
only the ``probes`` nearest partitions.

Ties on distance break by ascending image_id, making every query
deterministic for a fixed corpus and config.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, InvalidArgumentError
from .geo import GeoPoint
from .store import ReferenceRecord, _read_store_fh, read_store, write_store

PARTITION_MAGIC = b"GVIX"
_KMEANS_ITERS = 10
DEFAULT_K = 5
DEFAULT_PROBES = 8


@dataclass(frozen=True)
class IndexConfig:
    mode: str = "exact"  # "exact" | "approximate"
    num_partitions: int | None = None  # default: floor(sqrt(N))
    probes: int = DEFAULT_PROBES

    def __post_init__(self):
        if self.mode not in ("exact", "approximate"):
            raise InvalidArgumentError(f"unknown index mode {self.mode!r}")
        if self.num_partitions is not None and self.num_partitions < 1:
            raise InvalidArgumentError("num_partitions must be >= 1")
        if self.probes < 1:
            raise InvalidArgumentError("probes must be >= 1")


@dataclass
class RankedCandidate:
    """One retrieval hit; rank starts at 1, distances non-decreasing in rank."""

    image_id: int
    location_id: int
    location: GeoPoint
    rank: int
    distance: float
    local_score: float | None = None


class Index:
    """Immutable after build; concurrent queries are safe."""

    def __init__(self, records: list[ReferenceRecord], cfg: IndexConfig):
        if not records:
            raise InvalidArgumentError("cannot build an index from zero records")
        dims = {len(r.descriptor) for r in records}
        if len(dims) != 1:
            raise InvalidArgumentError(f"mixed descriptor dimensions: {sorted(dims)}")
        ids = [r.image_id for r in records]
        if len(set(ids)) != len(ids):
            raise InvalidArgumentError("duplicate image_id in index input")

        # stable storage order: ascending image_id (makes tie-breaks trivial)
        self.records = sorted(records, key=lambda r: r.image_id)
        self.cfg = cfg
        self.dim = dims.pop()
        self._matrix = np.stack([r.descriptor for r in self.records]).astype(np.float64)
        norms = np.linalg.norm(self._matrix, axis=1)
        if np.abs(norms - 1.0).max() > 1e-3:
            raise InvalidArgumentError("index descriptors must be unit-normalized")

        self._centroids: np.ndarray | None = None
        self._partitions: list[np.ndarray] | None = None
        if cfg.mode == "approximate":
            self._build_partitions()

    # -- construction ----------------------------------------------------

    def _build_partitions(self) -> None:
        n = len(self.records)
        c = self.cfg.num_partitions or max(1, int(np.sqrt(n)))
        c = min(c, n)
        if self.cfg.probes > c:
            raise InvalidArgumentError(f"probes {self.cfg.probes} > partitions {c}")
        # deterministic init: evenly spaced records in image_id order
        centroids = self._matrix[np.linspace(0, n - 1, c).astype(int)].copy()
        for _ in range(_KMEANS_ITERS):
            assign = np.argmax(self._matrix @ centroids.T, axis=1)
            for j in range(c):
                members = self._matrix[assign == j]
                if len(members):
                    m = members.mean(axis=0)
                    norm = np.linalg.norm(m)
                    if norm > 0:
                        centroids[j] = m / norm
        # round-trip through f32 so a saved-and-reloaded index probes identically
        centroids = centroids.astype(np.float32).astype(np.float64)
        assign = np.argmax(self._matrix @ centroids.T, axis=1)
        self._centroids = centroids
        self._partitions = [np.flatnonzero(assign == j) for j in range(c)]

    # -- queries ---------------------------------------------------------

    def knn(self, query: np.ndarray, k: int = DEFAULT_K) -> list[RankedCandidate]:
        query = np.asarray(query, dtype=np.float64)
        if query.shape != (self.dim,):
            raise InvalidArgumentError(f"query dimension {query.shape} != ({self.dim},)")
        if k < 1:
            raise InvalidArgumentError("K must be >= 1")

        if self.cfg.mode == "exact":
            rows = np.arange(len(self.records))
        else:
            scores = self._centroids @ query
            order = np.argsort(-scores, kind="stable")[: self.cfg.probes]
            rows = np.sort(np.concatenate([self._partitions[j] for j in order]))
            if len(rows) == 0:
                return []
        dist = np.sqrt(np.maximum(0.0, 2.0 - 2.0 * (self._matrix[rows] @ query)))
        # rows are already ascending image_id, so a stable sort on distance
        # yields the ascending-image_id tie-break for free
        take = np.argsort(dist, kind="stable")[: min(k, len(rows))]
        out = []
        for rank, t in enumerate(take, start=1):
            r = self.records[rows[t]]
            out.append(
                RankedCandidate(
                    image_id=r.image_id,
                    location_id=r.location_id,
                    location=r.location,
                    rank=rank,
                    distance=float(dist[t]),
                )
            )
        return out


def build_index(records: list[ReferenceRecord], cfg: IndexConfig = IndexConfig()) -> Index:
    return Index(records, cfg)


def save_index(index: Index, path) -> None:
    """Descriptor store section, plus a GVIX partition section in approximate mode."""
    write_store(index.records, path)
    if index.cfg.mode != "approximate":
        return
    with open(path, "ab") as fh:
        c = len(index._partitions)
        fh.write(struct.pack("<4sII", PARTITION_MAGIC, c, index.cfg.probes))
        fh.write(index._centroids.astype("<f4").tobytes())
        for part in index._partitions:
            fh.write(struct.pack("<Q", len(part)))
            fh.write(part.astype("<u8").tobytes())


def load_index(path) -> Index:
    with open(path, "rb") as fh:
        records = _read_store_fh(fh)
        tail_start = fh.tell()
        head = fh.read(12)
        if not head:
            return Index(records, IndexConfig(mode="exact"))
        if len(head) < 12:
            raise FormatError("truncated partition header", tail_start + len(head))
        magic, c, probes = struct.unpack("<4sII", head)
        if magic != PARTITION_MAGIC:
            raise FormatError(f"bad partition magic {magic!r}", tail_start)
        dim = len(records[0].descriptor)
        cen_bytes = fh.read(4 * c * dim)
        if len(cen_bytes) < 4 * c * dim:
            raise FormatError("truncated centroids", tail_start + 12 + len(cen_bytes))
        centroids = np.frombuffer(cen_bytes, dtype="<f4").reshape(c, dim).astype(np.float64)
        partitions = []
        for j in range(c):
            off = fh.tell()
            cnt_buf = fh.read(8)
            if len(cnt_buf) < 8:
                raise FormatError(f"truncated partition {j} count", off + len(cnt_buf))
            (cnt,) = struct.unpack("<Q", cnt_buf)
            ids_buf = fh.read(8 * cnt)
            if len(ids_buf) < 8 * cnt:
                raise FormatError(f"truncated partition {j} id list", off + 8 + len(ids_buf))
            partitions.append(np.frombuffer(ids_buf, dtype="<u8").astype(np.int64))
        if fh.read(1):
            raise FormatError("trailing bytes after partition table", fh.tell() - 1)

    idx = Index(records, IndexConfig(mode="approximate", num_partitions=c, probes=probes))
    # adopt the persisted partitioning verbatim so save/load is query-identical
    idx._centroids = centroids
    idx._partitions = partitions
    return idx
