"""WGS84 points and the distance/bearing math every other module shares.

All coordinates are degrees; all distances are meters on a sphere of
radius EARTH_RADIUS_M. Desk-scale networks (< 50 km span) let us use a
local planar approximation for segment projection without measurable
error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

EARTH_RADIUS_M = 6_371_000.0

_DEG = math.pi / 180.0


@dataclass(frozen=True)
class GeoPoint:
    """A WGS84 position. lat in [-90, 90], lon in [-180, 180], alt in meters."""

    lat: float
    lon: float
    alt: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.lat) and math.isfinite(self.lon) and math.isfinite(self.alt)):
            raise ValueError(f"non-finite coordinate: {self!r}")
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat} outside [-90, 90]")
        if not -180.0 <= self.lon <= 180.0:
            raise ValueError(f"longitude {self.lon} outside [-180, 180]")


def haversine_m(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance in meters between two points."""
    phi1 = a.lat * _DEG
    phi2 = b.lat * _DEG
    dphi = (b.lat - a.lat) * _DEG
    dlam = (b.lon - a.lon) * _DEG
    h = math.sin(dphi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * math.asin(min(1.0, math.sqrt(h)))


def initial_bearing_deg(a: GeoPoint, b: GeoPoint) -> float:
    """Forward azimuth from a to b, degrees in [0, 360)."""
    phi1 = a.lat * _DEG
    phi2 = b.lat * _DEG
    dlam = (b.lon - a.lon) * _DEG
    y = math.sin(dlam) * math.cos(phi2)
    x = math.cos(phi1) * math.sin(phi2) - math.sin(phi1) * math.cos(phi2) * math.cos(dlam)
    theta = math.degrees(math.atan2(y, x))
    return theta % 360.0


def interpolate(a: GeoPoint, b: GeoPoint, frac: float) -> GeoPoint:
    """Linear interpolation between a and b; adequate for sub-kilometer edges."""
    f = min(1.0, max(0.0, frac))
    return GeoPoint(a.lat + (b.lat - a.lat) * f, a.lon + (b.lon - a.lon) * f,
                    a.alt + (b.alt - a.alt) * f)


def midpoint(a: GeoPoint, b: GeoPoint) -> GeoPoint:
    return interpolate(a, b, 0.5)


def planar_offsets_m(origin: GeoPoint, p: GeoPoint) -> tuple[float, float]:
    """(east, north) meters of p relative to origin in a local tangent plane."""
    east = (p.lon - origin.lon) * _DEG * EARTH_RADIUS_M * math.cos(origin.lat * _DEG)
    north = (p.lat - origin.lat) * _DEG * EARTH_RADIUS_M
    return east, north


def project_onto_segment(p: GeoPoint, seg_start: GeoPoint, seg_end: GeoPoint) -> tuple[float, float]:
    """Project p onto the segment in a plane local to p.

    Returns (t, lateral_m): t is the clamped position parameter in [0, 1]
    along the segment, lateral_m the distance from p to the projected point.
    """
    ax, ay = planar_offsets_m(p, seg_start)
    bx, by = planar_offsets_m(p, seg_end)
    vx, vy = bx - ax, by - ay
    seg_len_sq = vx * vx + vy * vy
    if seg_len_sq == 0.0:
        t = 0.0
    else:
        # p is the local origin, so the projection of -a onto v
        t = min(1.0, max(0.0, -(ax * vx + ay * vy) / seg_len_sq))
    cx, cy = ax + t * vx, ay + t * vy
    return t, math.hypot(cx, cy)
