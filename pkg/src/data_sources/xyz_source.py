from pathlib import Path
from typing import Tuple

import numpy as np
import pandas as pd

from ..errors import FormatError
from ..preprocess.cloud import PointCloud
from .base import PointCloudSource, SourceMetadata


class XYZSource(PointCloudSource):
    """ASCII clouds, one 'x y z' triple per line"""

    def __init__(self):
        self.metadata = SourceMetadata(
            name="xyz",
            type="ascii",
            description="Whitespace separated x y z coordinates"
        )

    def extensions(self) -> Tuple[str, ...]:
        return (".xyz", ".txt")

    def read(self, path: Path) -> PointCloud:
        try:
            df = pd.read_csv(path, sep=r"\s+", header=None, comment="#", usecols=[0, 1, 2], dtype=np.float64)
        except pd.errors.EmptyDataError:
            self.metadata.record_read(True)
            return PointCloud(np.zeros((0, 3)))
        except (ValueError, pd.errors.ParserError) as e:
            self.metadata.record_read(False)
            raise FormatError(f"Cannot parse XYZ file {path}: {e}")
        self.metadata.record_read(True)
        return PointCloud(df.to_numpy())

    def write(self, cloud: PointCloud, path: Path) -> Path:
        pd.DataFrame(cloud.points).to_csv(path, sep=" ", header=False, index=False, float_format="%.6f")
        return path
