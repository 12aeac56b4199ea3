import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import shapely
from shapely.geometry import Point

from ..decoder import RoomDecoder
from ..ndgrad import Array2, no_grad
from ..preprocess import ImageTransform
from .geometry import RoomPolygon, halfplane_intersect, union_polygons

logger = logging.getLogger(__name__)


@dataclass
class Floorplan:
    rooms: List[RoomPolygon] = field(default_factory=list)
    transform: Optional[ImageTransform] = None

    def __len__(self):
        return len(self.rooms)


def discretize_selection(T, gamma: float = 0.01) -> np.ndarray:
    T = T.value if isinstance(T, Array2) else np.asarray(T, dtype=np.float64)
    return (T > gamma).astype(np.float64)


def room_star(lines: np.ndarray, T_bin: np.ndarray, xy: np.ndarray) -> np.ndarray:
    """S* at arbitrary points from numeric lines and a binary selection"""
    if T_bin.shape[1] == 0:
        return np.full(len(xy), np.inf)
    D = np.hstack([xy, np.ones((len(xy), 1))]) @ lines.T
    return (np.maximum(D, 0.0) @ T_bin).min(axis=1)


def room_geometry(lines: np.ndarray, T_bin: np.ndarray) -> List[RoomPolygon]:
    """Union of the convex primitives of every non-empty group"""
    convexes = []
    for j in range(T_bin.shape[1]):
        selected = T_bin[:, j] > 0
        if not selected.any():
            continue
        convex = halfplane_intersect(lines[selected])
        if convex is not None:
            convexes.append(convex)
    return union_polygons(convexes)


def grid_agreement(polygon: RoomPolygon, lines: np.ndarray, T_bin: np.ndarray, samples: int = 64) -> float:
    """mean(1 - clip01(S*)) over the sample grid cells that fall inside the polygon"""
    centers = (np.arange(samples) + 0.5) / samples
    xs, ys = np.meshgrid(centers, centers)
    shape = polygon.to_shapely()
    inside = shapely.contains_xy(shape, xs.ravel(), ys.ravel())
    xy = np.stack([xs.ravel()[inside], ys.ravel()[inside]], axis=1)
    if len(xy) == 0:
        point: Point = shape.representative_point()
        xy = np.array([[point.x, point.y]])
    star = room_star(lines, T_bin, xy)
    return float(np.mean(1.0 - np.clip(star, 0.0, 1.0)))


def extract_floorplan(codes: Array2,
                      decoder: RoomDecoder,
                      gamma: float = 0.01,
                      validity_threshold: float = 1e-4,
                      samples: int = 64,
                      agreement: float = 0.5,
                      transform: Optional[ImageTransform] = None) -> Floorplan:
    """Construct every slot's polygon, then keep the slots passing the area and grid checks"""
    T_full = discretize_selection(decoder.T, gamma)
    T_bin = T_full[:, T_full.any(axis=0)]
    with no_grad():
        banks = decoder.line_banks(codes)
    rooms: List[RoomPolygon] = []
    for slot, bank in enumerate(banks):
        lines = bank.L.value
        parts = room_geometry(lines, T_bin)
        if not parts:
            logger.debug(f"Slot {slot}: no primitives")
            continue
        room = max(parts, key=lambda p: p.area)
        if len(parts) > 1:
            logger.debug(f"Slot {slot}: {len(parts)} components, keeping the largest")
        if room.area < validity_threshold:
            logger.debug(f"Slot {slot}: area {room.area:.2e} below {validity_threshold}")
            continue
        score = grid_agreement(room, lines, T_bin, samples)
        if score < agreement:
            logger.debug(f"Slot {slot}: grid agreement {score:.3f} below {agreement}")
            continue
        rooms.append(room.with_id(len(rooms), slot))
    logger.info(f"Extracted {len(rooms)} rooms from {len(banks)} slots")
    return Floorplan(rooms, transform)
