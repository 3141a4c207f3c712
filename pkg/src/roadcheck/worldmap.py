"""Lanelet-based static road model.

A map is a set of convex lane-segment polygons, each carrying a driving
orientation and width, plus the explicit centre line separating opposing
traffic.  Maps are immutable after loading and safe for concurrent reads.

The on-disk format is a UTF-8 JSON document:

    {
      "lanelets": [
        {"id": "east", "vertices": [[x, y], ...],
         "orientation_rad": 0.0, "width_m": 3.65,
         "direction": "with_map_axis"},
        ...
      ],
      "centreline": [[x, y], ...]
    }

Unknown keys are rejected in strict mode and warned about otherwise.
"""

from __future__ import annotations

import io
import json
import warnings
from dataclasses import dataclass

from .geometry import (ConvexPolygon, GeometryError, normalize_angle,
                       overlap_area, segment_intersects_polygon,
                       _point_in_polygon)

DIRECTIONS = ("with_map_axis", "against_map_axis")


class MapError(ValueError):
    """Malformed or invalid map document."""

    def __init__(self, message, location=None):
        self.location = location
        if location:
            message = f"{message} (at {location})"
        super().__init__(message)


class OffRoadError(LookupError):
    """A query point lies outside every lanelet."""


@dataclass(frozen=True)
class Lanelet:
    id: str
    shape: ConvexPolygon
    orientation: float
    width: float
    direction: str

    def __post_init__(self):
        if self.width <= 0.0:
            raise MapError(f"lanelet width must be > 0, got {self.width}",
                           location=f"lanelet {self.id!r}")
        if self.direction not in DIRECTIONS:
            raise MapError(f"unknown direction {self.direction!r}",
                           location=f"lanelet {self.id!r}")
        object.__setattr__(self, "orientation", normalize_angle(self.orientation))


@dataclass(frozen=True)
class RoadMap:
    lanelets: tuple[Lanelet, ...]
    centreline: tuple[tuple[float, float], ...]

    def __post_init__(self):
        ids = [l.id for l in self.lanelets]
        if len(set(ids)) != len(ids):
            dup = sorted({i for i in ids if ids.count(i) > 1})
            raise MapError(f"duplicate lanelet ids: {dup}")
        if len(self.centreline) < 2:
            raise MapError("centreline needs at least 2 points")
        object.__setattr__(self, "lanelets",
                           tuple(sorted(self.lanelets, key=lambda l: l.id)))
        object.__setattr__(self, "centreline",
                           tuple((float(x), float(y)) for x, y in self.centreline))

    def lanelet(self, lanelet_id: str) -> Lanelet:
        for l in self.lanelets:
            if l.id == lanelet_id:
                return l
        raise KeyError(lanelet_id)


_LANELET_KEYS = {"id", "vertices", "orientation_rad", "width_m", "direction"}
_TOP_KEYS = {"lanelets", "centreline"}


def _check_keys(obj: dict, allowed: set, where: str, strict: bool):
    unknown = set(obj) - allowed
    if unknown:
        msg = f"unknown keys {sorted(unknown)} in {where}"
        if strict:
            raise MapError(msg, location=where)
        warnings.warn(msg)


def load_map(source, strict: bool = False) -> RoadMap:
    """Parse and validate a map document from bytes, text, or a file object."""
    if isinstance(source, (bytes, bytearray)):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        text = source
    elif isinstance(source, io.IOBase) or hasattr(source, "read"):
        data = source.read()
        text = data.decode("utf-8") if isinstance(data, bytes) else data
    else:
        raise TypeError(f"cannot read map from {type(source).__name__}")

    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MapError(f"invalid JSON: {exc.msg}",
                       location=f"line {exc.lineno}, column {exc.colno}") from exc
    if not isinstance(doc, dict):
        raise MapError("top-level value must be an object")
    _check_keys(doc, _TOP_KEYS, "map document", strict)
    if "lanelets" not in doc:
        raise MapError("missing required key 'lanelets'")
    if "centreline" not in doc:
        raise MapError("missing required key 'centreline'")

    lanelets = []
    for i, entry in enumerate(doc["lanelets"]):
        where = f"lanelets[{i}]"
        if not isinstance(entry, dict):
            raise MapError("lanelet entry must be an object", location=where)
        _check_keys(entry, _LANELET_KEYS, where, strict)
        missing = _LANELET_KEYS - set(entry)
        if missing:
            raise MapError(f"missing keys {sorted(missing)}", location=where)
        lid = str(entry["id"])
        where = f"lanelet {lid!r}"
        try:
            shape = ConvexPolygon.from_points(entry["vertices"])
        except (GeometryError, TypeError, ValueError) as exc:
            raise MapError(f"invalid shape: {exc}", location=where) from exc
        try:
            width = float(entry["width_m"])
            orientation = float(entry["orientation_rad"])
        except (TypeError, ValueError) as exc:
            raise MapError(f"invalid number: {exc}", location=where) from exc
        lanelets.append(Lanelet(id=lid, shape=shape, orientation=orientation,
                                width=width, direction=str(entry["direction"])))

    centreline = doc["centreline"]
    if (not isinstance(centreline, list) or len(centreline) < 2
            or not all(isinstance(p, list) and len(p) == 2 for p in centreline)):
        raise MapError("centreline must be a list of >= 2 [x, y] points",
                       location="centreline")
    return RoadMap(lanelets=tuple(lanelets),
                   centreline=tuple((float(x), float(y)) for x, y in centreline))


def serialise_map(road: RoadMap) -> str:
    """Canonical JSON text; load_map(serialise_map(m)) equals m."""
    doc = {
        "lanelets": [
            {"id": l.id,
             "vertices": [[x, y] for x, y in l.shape.vertices],
             "orientation_rad": l.orientation,
             "width_m": l.width,
             "direction": l.direction}
            for l in road.lanelets
        ],
        "centreline": [[x, y] for x, y in road.centreline],
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def lanelets_containing(road: RoadMap, shape: ConvexPolygon):
    """All lanelets overlapping the shape with positive area, id-sorted."""
    out = []
    for l in road.lanelets:
        area = overlap_area(shape, l.shape)
        if area > 0.0:
            out.append((l.id, area))
    return out


def crosses_centreline(road: RoadMap, shape: ConvexPolygon) -> bool:
    """True iff the polygon touches or crosses the centre-line polyline."""
    pts = road.centreline
    for i in range(len(pts) - 1):
        if segment_intersects_polygon(pts[i], pts[i + 1], shape):
            return True
    return False


def lane_orientation_at(road: RoadMap, point: tuple[float, float]) -> float:
    """Driving orientation of the smallest containing lanelet.

    Boundary-shared points resolve to the lexicographically smallest id.
    """
    candidates = [l for l in road.lanelets if _point_in_polygon(point, l.shape)]
    if not candidates:
        raise OffRoadError(f"point {point} is outside every lanelet")
    best = min(candidates, key=lambda l: (l.shape.area, l.id))
    return best.orientation


def lanelet_at(road: RoadMap, point: tuple[float, float]) -> Lanelet:
    candidates = [l for l in road.lanelets if _point_in_polygon(point, l.shape)]
    if not candidates:
        raise OffRoadError(f"point {point} is outside every lanelet")
    return min(candidates, key=lambda l: (l.shape.area, l.id))
