"""Room polygons, half-plane clipping and polygon union"""
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from shapely.geometry import MultiPolygon, Polygon
from shapely.geometry.polygon import orient
from shapely.ops import unary_union

from ..errors import ShapeError

MERGE_TOL = 1e-7
COLLINEAR_DEG = 0.5
MIN_AREA = 1e-8

UNIT_SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def signed_area(loop: np.ndarray) -> float:
    x, y = loop[:, 0], loop[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _canonical_start(loop: np.ndarray) -> np.ndarray:
    """Rotate the loop so it starts at its lowest-then-leftmost vertex"""
    start = int(np.lexsort((loop[:, 0], loop[:, 1]))[0])
    return np.roll(loop, -start, axis=0)


def simplify_loop(loop: np.ndarray, merge_tol: float = MERGE_TOL, collinear_deg: float = COLLINEAR_DEG) -> np.ndarray:
    """Drop repeated vertices and vertices whose turn is below collinear_deg"""
    pts = [p for p in np.asarray(loop, dtype=np.float64)]
    if len(pts) > 1 and np.linalg.norm(pts[0] - pts[-1]) <= merge_tol:
        pts.pop()
    changed = True
    while changed and len(pts) >= 3:
        changed = False
        for i in range(len(pts)):
            prev, cur, nxt = pts[i - 1], pts[i], pts[(i + 1) % len(pts)]
            a, b = cur - prev, nxt - cur
            na, nb = np.linalg.norm(a), np.linalg.norm(b)
            if na <= merge_tol or nb <= merge_tol:
                del pts[i]
                changed = True
                break
            turn = np.degrees(abs(np.arctan2(a[0] * b[1] - a[1] * b[0], float(a @ b))))
            if turn < collinear_deg:
                del pts[i]
                changed = True
                break
    return np.asarray(pts).reshape(-1, 2)


@dataclass
class RoomPolygon:
    """Outer loop counter-clockwise, holes clockwise; normalized image coordinates"""
    outer: np.ndarray
    holes: List[np.ndarray] = field(default_factory=list)
    room_id: int = 0
    slot: Optional[int] = None

    def __post_init__(self):
        self.outer = np.asarray(self.outer, dtype=np.float64).reshape(-1, 2)
        self.holes = [np.asarray(h, dtype=np.float64).reshape(-1, 2) for h in self.holes]
        if len(self.outer) < 3:
            raise ShapeError(f"Room polygon needs at least 3 vertices, got {len(self.outer)}")

    @property
    def area(self) -> float:
        return self.to_shapely().area

    def to_shapely(self) -> Polygon:
        return Polygon(self.outer, [h for h in self.holes])

    @classmethod
    def from_shapely(cls, poly: Polygon, room_id: int = 0, slot: Optional[int] = None) -> "RoomPolygon":
        poly = orient(poly, sign=1.0)
        outer = _canonical_start(simplify_loop(np.asarray(poly.exterior.coords)))
        holes = []
        for ring in poly.interiors:
            hole = simplify_loop(np.asarray(ring.coords))
            if len(hole) >= 3:
                holes.append(_canonical_start(hole))
        return cls(outer, holes, room_id, slot)

    def with_id(self, room_id: int, slot: Optional[int] = None) -> "RoomPolygon":
        return RoomPolygon(self.outer, self.holes, room_id, slot)


def halfplane_intersect(lines: np.ndarray) -> Optional[RoomPolygon]:
    """
    Clip the unit square against every half-plane a*x + b*y + c <= 0 in turn.
    Returns None for an empty or near-zero-area result.
    """
    poly = UNIT_SQUARE.copy()
    for a, b, c in np.asarray(lines, dtype=np.float64).reshape(-1, 3):
        if len(poly) == 0:
            break
        d = poly @ np.array([a, b]) + c
        clipped = []
        for i in range(len(poly)):
            j = (i + 1) % len(poly)
            if d[i] <= 0:
                clipped.append(poly[i])
            if (d[i] < 0 < d[j]) or (d[j] < 0 < d[i]):
                t = d[i] / (d[i] - d[j])
                clipped.append(poly[i] + t * (poly[j] - poly[i]))
        poly = np.asarray(clipped).reshape(-1, 2)

    if len(poly) < 3:
        return None
    poly = simplify_loop(poly, collinear_deg=0.0)
    if len(poly) < 3 or abs(signed_area(poly)) < MIN_AREA:
        return None
    if signed_area(poly) < 0:
        poly = poly[::-1]
    return RoomPolygon(_canonical_start(poly))


def _sort_key(poly: RoomPolygon):
    lo = poly.outer.min(axis=0)
    return (round(float(lo[1]), 9), round(float(lo[0]), 9), -round(poly.area, 12))


def union_polygons(convexes: Sequence[RoomPolygon]) -> List[RoomPolygon]:
    """Boolean union; one RoomPolygon per connected component, in a fixed spatial order"""
    shapes = [c.to_shapely() for c in convexes]
    if not shapes:
        return []
    merged = unary_union(shapes)
    if isinstance(merged, Polygon):
        parts = [merged]
    elif isinstance(merged, MultiPolygon):
        parts = list(merged.geoms)
    else:
        parts = [g for g in getattr(merged, "geoms", []) if isinstance(g, Polygon)]
    out = []
    for part in parts:
        if part.is_empty or part.area < MIN_AREA:
            continue
        try:
            out.append(RoomPolygon.from_shapely(part))
        except ShapeError:
            continue
    return sorted(out, key=_sort_key)
