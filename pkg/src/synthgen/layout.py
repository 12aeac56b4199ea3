"""Room layouts on a 256-pixel grid: disjoint rectangles with optional 45 degree corner cuts"""
import logging
from dataclasses import asdict, dataclass
from typing import List, Tuple

import numpy as np

from ..errors import ConfigError

logger = logging.getLogger(__name__)

GRID = 256
MARGIN = 16
GAP = 8
SIDE_RANGE = (40, 110)
MAX_TRIES = 1000


@dataclass
class SceneSpec:
    min_rooms: int = 1
    max_rooms: int = 3
    manhattan_prob: float = 0.0
    diagonal_cut_prob: float = 0.3
    noise_sigma: float = 0.01
    outlier_fraction: float = 0.0
    pixel_size: float = 0.04
    wall_height: float = 2.5
    wall_density: float = 200.0
    floor_density: float = 20.0
    height_channel: bool = True

    def __post_init__(self):
        if not 1 <= self.min_rooms <= self.max_rooms <= 4:
            raise ConfigError(f"Room count range must satisfy 1 <= min <= max <= 4, got {self.min_rooms}..{self.max_rooms}")
        for name in ("manhattan_prob", "diagonal_cut_prob", "outlier_fraction"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {value}")
        if self.noise_sigma < 0 or self.pixel_size <= 0 or self.wall_height <= 0:
            raise ConfigError("noise_sigma must be >= 0; pixel_size and wall_height must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


def _overlaps(box: Tuple[int, int, int, int], placed: List[Tuple[int, int, int, int]]) -> bool:
    x0, y0, x1, y1 = box
    for a0, b0, a1, b1 in placed:
        if x0 < a1 + GAP and a0 < x1 + GAP and y0 < b1 + GAP and b0 < y1 + GAP:
            return True
    return False


def place_rectangles(rng: np.random.Generator, count: int) -> List[Tuple[int, int, int, int]]:
    """Up to count boxes (x0, y0, x1, y1) inside [MARGIN, GRID - MARGIN] separated by at least GAP"""
    placed = []
    lo, hi = MARGIN, GRID - MARGIN
    for _ in range(count):
        for _ in range(MAX_TRIES):
            w, h = rng.integers(SIDE_RANGE[0], SIDE_RANGE[1] + 1, size=2)
            x0 = int(rng.integers(lo, hi - w + 1))
            y0 = int(rng.integers(lo, hi - h + 1))
            box = (x0, y0, x0 + int(w), y0 + int(h))
            if not _overlaps(box, placed):
                placed.append(box)
                break
        else:
            logger.warning(f"Placed {len(placed)} of {count} rooms after {MAX_TRIES} tries")
            break
    return placed


def cut_corner(outer: np.ndarray, corner: int, length: float) -> np.ndarray:
    """Replace one vertex by the two points at distance length along its edges"""
    v = outer[corner]
    prev, nxt = outer[corner - 1], outer[(corner + 1) % len(outer)]
    a = v + (prev - v) / np.linalg.norm(prev - v) * length
    b = v + (nxt - v) / np.linalg.norm(nxt - v) * length
    return np.vstack([outer[:corner], a, b, outer[corner + 1:]])


def room_outlines(rng: np.random.Generator, spec: SceneSpec) -> Tuple[List[np.ndarray], bool]:
    """Counter-clockwise pixel outlines and whether fewer rooms than requested were placed"""
    count = int(rng.integers(spec.min_rooms, spec.max_rooms + 1))
    boxes = place_rectangles(rng, count)
    manhattan = rng.uniform() < spec.manhattan_prob
    outlines = []
    for x0, y0, x1, y1 in boxes:
        outer = np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]], dtype=np.float64)
        if not manhattan and rng.uniform() < spec.diagonal_cut_prob:
            length = rng.uniform(0.15, 0.35) * min(x1 - x0, y1 - y0)
            outer = cut_corner(outer, int(rng.integers(4)), length)
        outlines.append(outer)
    return outlines, len(boxes) < count
