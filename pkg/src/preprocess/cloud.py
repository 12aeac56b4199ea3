from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np


@dataclass
class PointCloud:
    """xyz points in meters; normals are filled in by estimate_normals"""
    points: np.ndarray
    normals: Optional[np.ndarray] = None
    normal_valid: Optional[np.ndarray] = None
    curvature: Optional[np.ndarray] = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        if not np.all(np.isfinite(self.points)):
            raise ValueError("Point cloud contains non-finite coordinates")

    def __len__(self):
        return len(self.points)

    @property
    def has_normals(self) -> bool:
        return self.normals is not None

    def with_normals(self, normals: np.ndarray, valid: np.ndarray, curvature: np.ndarray) -> "PointCloud":
        return replace(self, normals=normals, normal_valid=valid, curvature=curvature)


@dataclass
class WallSegment:
    """Plane n.p + d = 0 fitted to the member points of one region"""
    indices: np.ndarray
    normal: np.ndarray
    offset: float
    inlier_count: int = field(default=0)

    def __post_init__(self):
        self.indices = np.asarray(self.indices, dtype=np.int64)
        normal = np.asarray(self.normal, dtype=np.float64)
        norm = np.linalg.norm(normal)
        if norm == 0:
            raise ValueError("Wall plane normal must be non-zero")
        self.normal = normal / norm
        self.offset = float(self.offset) / norm
        self.inlier_count = self.inlier_count or len(self.indices)

    def is_vertical(self, tolerance: float = 0.1) -> bool:
        return abs(self.normal[2]) < tolerance

    def distances(self, points: np.ndarray) -> np.ndarray:
        return points @ self.normal + self.offset
