from abc import ABC, abstractmethod
from datetime import datetime
from pathlib import Path
from typing import Tuple

from ..preprocess.cloud import PointCloud


class PointCloudSource(ABC):
    """Abstract base class for all point cloud file formats"""

    @abstractmethod
    def extensions(self) -> Tuple[str, ...]:
        """Lower-case file suffixes handled by this source"""
        pass

    @abstractmethod
    def read(self, path: Path) -> PointCloud:
        """Load the x, y, z coordinates stored at path"""
        pass

    @abstractmethod
    def write(self, cloud: PointCloud, path: Path) -> Path:
        """Store the cloud coordinates at path"""
        pass


class SourceMetadata:
    """Metadata for point cloud sources"""
    def __init__(self, name: str, type: str, description: str):
        self.name = name
        self.type = type
        self.description = description
        self.last_used = None
        self.files_read = 0
        self.error_count = 0

    def record_read(self, ok: bool):
        self.last_used = datetime.now()
        if ok:
            self.files_read += 1
        else:
            self.error_count += 1
