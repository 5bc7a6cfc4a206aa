"""Geodetic primitives: great-circle distance and a local planar projection.

All distances are in meters on a spherical earth of radius 6,371,000 m.
The planar projection is equirectangular about a chosen origin, accurate to
well under 0.5% for metropolitan-scale extents, which is all the clustering
stage needs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidArgumentError

EARTH_RADIUS_M = 6_371_000.0


@dataclass(frozen=True)
class GeoPoint:
    """Latitude/longitude in degrees. Altitude is deliberately not modeled."""

    lat: float
    lon: float

    def __post_init__(self):
        if not (math.isfinite(self.lat) and math.isfinite(self.lon)):
            raise InvalidArgumentError(f"non-finite coordinate: ({self.lat}, {self.lon})")
        if not -90.0 <= self.lat <= 90.0:
            raise InvalidArgumentError(f"latitude {self.lat} outside [-90, 90]")
        if not -180.0 <= self.lon <= 180.0:
            raise InvalidArgumentError(f"longitude {self.lon} outside [-180, 180]")


@dataclass(frozen=True)
class PlanarPoint:
    """Local planar coordinates: meters east (x) and north (y) of an origin."""

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise InvalidArgumentError(f"non-finite planar coordinate: ({self.x}, {self.y})")


def haversine_distance(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance between two points, in meters.

    Exactly symmetric in its arguments: the half-angle sines are squared, so
    the sign of the coordinate differences cancels bit-for-bit.
    """
    phi_a = math.radians(a.lat)
    phi_b = math.radians(b.lat)
    d_phi = math.radians(b.lat - a.lat)
    d_lam = math.radians(b.lon - a.lon)
    h = math.sin(d_phi / 2.0) ** 2 + math.cos(phi_a) * math.cos(phi_b) * math.sin(d_lam / 2.0) ** 2
    # clamp guards rounding just above 1 for near-antipodal pairs
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


def project_local(origin: GeoPoint, p: GeoPoint) -> PlanarPoint:
    """Equirectangular projection of ``p`` into meters about ``origin``.

    Intended for small extents (a metropolitan area); the planar norm agrees
    with the haversine distance within 0.5% for points up to ~20 km apart.
    """
    x = EARTH_RADIUS_M * math.radians(p.lon - origin.lon) * math.cos(math.radians(origin.lat))
    y = EARTH_RADIUS_M * math.radians(p.lat - origin.lat)
    return PlanarPoint(x, y)


def offset_geopoint(origin: GeoPoint, x_east_m: float, y_north_m: float) -> GeoPoint:
    """Inverse of :func:`project_local`: move from origin by planar offsets."""
    lat = origin.lat + math.degrees(y_north_m / EARTH_RADIUS_M)
    lon = origin.lon + math.degrees(
        x_east_m / (EARTH_RADIUS_M * math.cos(math.radians(origin.lat)))
    )
    return GeoPoint(lat, lon)


def centroid(points: list[GeoPoint]) -> GeoPoint:
    """Arithmetic mean of coordinates; adequate at city scale away from the antimeridian."""
    if not points:
        raise InvalidArgumentError("centroid of empty point list")
    return GeoPoint(
        sum(p.lat for p in points) / len(points),
        sum(p.lon for p in points) / len(points),
    )
