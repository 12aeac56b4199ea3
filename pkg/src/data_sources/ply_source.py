from pathlib import Path
from typing import Tuple

import numpy as np
from plyfile import PlyData, PlyElement, PlyParseError

from ..errors import FormatError
from ..preprocess.cloud import PointCloud
from .base import PointCloudSource, SourceMetadata

VERTEX_DTYPE = np.dtype([("x", "<f4"), ("y", "<f4"), ("z", "<f4")])


class PLYSource(PointCloudSource):
    """ASCII and binary PLY files with x, y, z vertex properties"""

    def __init__(self):
        self.metadata = SourceMetadata(
            name="ply",
            type="ascii/binary",
            description="Stanford PLY vertex element"
        )

    def extensions(self) -> Tuple[str, ...]:
        return (".ply",)

    def read(self, path: Path) -> PointCloud:
        try:
            vertex = PlyData.read(str(path))["vertex"]
            points = np.stack([vertex["x"], vertex["y"], vertex["z"]], axis=1).astype(np.float64)
        except (PlyParseError, ValueError, KeyError, IndexError) as e:
            self.metadata.record_read(False)
            raise FormatError(f"Cannot parse PLY file {path}: {e}")
        self.metadata.record_read(True)
        return PointCloud(points.reshape(-1, 3))

    def write(self, cloud: PointCloud, path: Path) -> Path:
        vertex = np.empty(len(cloud), dtype=VERTEX_DTYPE)
        for i, axis in enumerate("xyz"):
            vertex[axis] = cloud.points[:, i]
        PlyData([PlyElement.describe(vertex, "vertex")], text=False, byte_order="<").write(str(path))
        return path
