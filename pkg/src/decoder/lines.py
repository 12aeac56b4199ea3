"""Query points and the structured (horizontal, vertical, diagonal) line bank"""
from dataclasses import dataclass

import numpy as np

from ..errors import ShapeError
from ..ndgrad import Array2


@dataclass(frozen=True)
class QuerySet:
    """n x 3 homogeneous points (x, y, 1) in normalized image space"""
    X: Array2

    def __post_init__(self):
        if self.X.cols != 3:
            raise ShapeError(f"QuerySet needs n x 3 points, got {self.X.shape}")
        if not np.all(self.X.value[:, 2] == 1.0):
            raise ShapeError("QuerySet third column must be identically 1")

    @property
    def n(self) -> int:
        return self.X.rows

    @property
    def xy(self) -> np.ndarray:
        return self.X.value[:, :2]

    @classmethod
    def from_xy(cls, xy: np.ndarray) -> "QuerySet":
        xy = np.asarray(xy, dtype=np.float64).reshape(-1, 2)
        return cls(Array2(np.hstack([xy, np.ones((len(xy), 1))])))

    @classmethod
    def uniform(cls, n: int, rng: np.random.Generator) -> "QuerySet":
        return cls.from_xy(rng.uniform(0.0, 1.0, size=(n, 2)))

    @classmethod
    def grid(cls, k: int) -> "QuerySet":
        """Cell centers of a k x k grid, row-major with rows along y"""
        centers = (np.arange(k) + 0.5) / k
        ys, xs = np.meshgrid(centers, centers, indexing="ij")
        return cls.from_xy(np.stack([xs.ravel(), ys.ravel()], axis=1))


@dataclass(frozen=True)
class LineBank:
    """3l x 3 rows (a, b, c) ordered [horizontal; vertical; diagonal]; inside is a*x + b*y + c <= 0"""
    L: Array2

    def __post_init__(self):
        if self.L.cols != 3 or self.L.rows % 3:
            raise ShapeError(f"LineBank needs 3l x 3 rows, got {self.L.shape}")

    @property
    def l(self) -> int:
        return self.L.rows // 3

    @property
    def horizontal(self) -> np.ndarray:
        return self.L.value[:self.l]

    @property
    def vertical(self) -> np.ndarray:
        return self.L.value[self.l:2 * self.l]

    @property
    def diagonal(self) -> np.ndarray:
        return self.L.value[2 * self.l:]

    @classmethod
    def from_rows(cls, horizontal, vertical, diagonal) -> "LineBank":
        """Hand-built bank; every sub-bank must have the same length l"""
        banks = [np.asarray(b, dtype=np.float64).reshape(-1, 3) for b in (horizontal, vertical, diagonal)]
        if len({len(b) for b in banks}) != 1:
            raise ShapeError(f"Sub-banks differ in length: {[len(b) for b in banks]}")
        if np.any(banks[0][:, 0] != 0) or np.any(banks[1][:, 1] != 0):
            raise ShapeError("Horizontal lines need a = 0 and vertical lines need b = 0")
        return cls(Array2(np.vstack(banks)))
