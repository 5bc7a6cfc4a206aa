"""Geotagged descriptor store: the on-disk reference record formats.

Binary format (little-endian):
    magic "GVD1" (4 bytes)
    u32 dimension D
    u64 record count N
    N records of [u64 image_id, u64 location_id, f64 lat, f64 lon,
                  f32 yaw_deg, f32 pitch_deg, D x f32 descriptor]

Text interchange format: CSV with header
    image_id,location_id,lat,lon,yaw,pitch,v0..v{D-1}

Readers reject a wrong magic or a truncated record with a FormatError that
names the byte offset of the problem.
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, InvalidArgumentError
from .geo import GeoPoint

MAGIC = b"GVD1"
_HEADER = struct.Struct("<4sIQ")
_REC_FIXED = struct.Struct("<QQddff")


@dataclass
class ReferenceRecord:
    """One geotagged reference image with its global descriptor."""

    image_id: int
    location_id: int
    location: GeoPoint
    yaw: float
    pitch: float
    descriptor: np.ndarray = field(repr=False)


def write_store(records: list[ReferenceRecord], path) -> None:
    if not records:
        raise InvalidArgumentError("refusing to write an empty descriptor store")
    dim = len(records[0].descriptor)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, dim, len(records)))
        for r in records:
            vec = np.asarray(r.descriptor, dtype="<f4")
            if vec.shape != (dim,):
                raise InvalidArgumentError(
                    f"record {r.image_id}: dimension {vec.shape} != {dim}"
                )
            fh.write(
                _REC_FIXED.pack(
                    r.image_id, r.location_id, r.location.lat, r.location.lon, r.yaw, r.pitch
                )
            )
            fh.write(vec.tobytes())


def read_store(fh_or_path) -> list[ReferenceRecord]:
    if hasattr(fh_or_path, "read"):
        return _read_store_fh(fh_or_path)
    with open(fh_or_path, "rb") as fh:
        records = _read_store_fh(fh)
        if fh.read(1):
            raise FormatError("trailing bytes after descriptor store", fh.tell() - 1)
        return records


def _read_store_fh(fh) -> list[ReferenceRecord]:
    """Read one store section from the current position; leaves fh just past it."""
    start = fh.tell()
    head = fh.read(_HEADER.size)
    if len(head) < _HEADER.size:
        raise FormatError("truncated header", start + len(head))
    magic, dim, count = _HEADER.unpack(head)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}", start)
    rec_size = _REC_FIXED.size + 4 * dim
    records: list[ReferenceRecord] = []
    for i in range(count):
        offset = start + _HEADER.size + i * rec_size
        buf = fh.read(rec_size)
        if len(buf) < rec_size:
            raise FormatError(f"truncated record {i}", offset + len(buf))
        image_id, location_id, lat, lon, yaw, pitch = _REC_FIXED.unpack_from(buf)
        vec = np.frombuffer(buf, dtype="<f4", count=dim, offset=_REC_FIXED.size)
        records.append(
            ReferenceRecord(
                image_id=image_id,
                location_id=location_id,
                location=GeoPoint(lat, lon),
                yaw=yaw,
                pitch=pitch,
                descriptor=vec.astype(np.float64),
            )
        )
    return records


def write_csv(records: list[ReferenceRecord], path) -> None:
    if not records:
        raise InvalidArgumentError("refusing to write an empty descriptor CSV")
    dim = len(records[0].descriptor)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["image_id", "location_id", "lat", "lon", "yaw", "pitch"]
            + [f"v{i}" for i in range(dim)]
        )
        for r in records:
            writer.writerow(
                [r.image_id, r.location_id, repr(r.location.lat), repr(r.location.lon),
                 repr(r.yaw), repr(r.pitch)]
                + [repr(float(np.float32(v))) for v in r.descriptor]
            )


def read_csv(path) -> list[ReferenceRecord]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError("empty CSV", 0) from None
        if header[:6] != ["image_id", "location_id", "lat", "lon", "yaw", "pitch"]:
            raise FormatError(f"unexpected CSV header {header[:6]}", 0)
        dim = len(header) - 6
        if dim < 1:
            raise FormatError("CSV header declares no descriptor columns", 0)
        records = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 6 + dim:
                raise FormatError(f"CSV line {lineno}: expected {6 + dim} fields, got {len(row)}")
            records.append(
                ReferenceRecord(
                    image_id=int(row[0]),
                    location_id=int(row[1]),
                    location=GeoPoint(float(row[2]), float(row[3])),
                    yaw=float(row[4]),
                    pitch=float(row[5]),
                    descriptor=np.array([float(v) for v in row[6:]], dtype=np.float64),
                )
            )
        return records
