"""Great-circle distance and nearest-warehouse lookup.

A linear scan over the company's warehouses is plenty at single-company
scale; no spatial index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable

from .errors import ImsError

if TYPE_CHECKING:
    from .model import Warehouse

EARTH_RADIUS_KM = 6371.0088  # IUGG mean Earth radius
DEFAULT_RADIUS_M = 500.0


@dataclass(frozen=True)
class GeoPoint:
    latitude_deg: float
    longitude_deg: float

    def to_json(self) -> dict:
        return {"latitudeDeg": self.latitude_deg, "longitudeDeg": self.longitude_deg}

    @classmethod
    def from_json(cls, obj: dict) -> "GeoPoint":
        return cls(float(obj["latitudeDeg"]), float(obj["longitudeDeg"]))


def check_point(p: GeoPoint) -> None:
    """Raise BAD_COORDINATES unless both coordinates are finite and in range."""
    lat, lon = p.latitude_deg, p.longitude_deg
    ok = (
        isinstance(lat, (int, float))
        and isinstance(lon, (int, float))
        and math.isfinite(lat)
        and math.isfinite(lon)
        and -90.0 <= lat <= 90.0
        and -180.0 <= lon <= 180.0
    )
    if not ok:
        raise ImsError(f"bad coordinates ({lat!r}, {lon!r})", code="BAD_COORDINATES")


def haversine_km(a: GeoPoint, b: GeoPoint) -> float:
    """Great-circle distance between two points in kilometres."""
    check_point(a)
    check_point(b)
    phi1 = math.radians(a.latitude_deg)
    phi2 = math.radians(b.latitude_deg)
    dphi = math.radians(b.latitude_deg - a.latitude_deg)
    dlam = math.radians(b.longitude_deg - a.longitude_deg)
    root = math.sin(dphi / 2) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlam / 2) ** 2
    # clamp guards rounding just above 1.0 for near-antipodal points
    return 2.0 * EARTH_RADIUS_KM * math.asin(min(1.0, math.sqrt(root)))


@dataclass(frozen=True)
class NearestMatch:
    warehouse: "Warehouse"
    distance_km: float


def nearest_warehouse(
    user: GeoPoint,
    warehouses: Iterable["Warehouse"],
    max_radius_m: float = DEFAULT_RADIUS_M,
) -> NearestMatch | None:
    """Closest warehouse within `max_radius_m` of the user, or None.

    Ties are broken by the lexicographically smallest warehouse id so the
    suggestion is reproducible.
    """
    check_point(user)
    best: NearestMatch | None = None
    for w in warehouses:
        d = haversine_km(user, w.location)
        if d * 1000.0 > max_radius_m:
            continue
        if best is None or (d, w.id) < (best.distance_km, best.warehouse.id):
            best = NearestMatch(w, d)
    return best
