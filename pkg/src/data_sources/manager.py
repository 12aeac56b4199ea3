from pathlib import Path
from typing import Dict, List, Optional
import logging

from ..errors import FormatError
from ..preprocess.cloud import PointCloud
from .base import PointCloudSource
from .ply_source import PLYSource
from .xyz_source import XYZSource


class PointCloudSourceManager:
    def __init__(self):
        self.sources: Dict[str, PointCloudSource] = {}
        self.logger = logging.getLogger(__name__)

    def register_source(self, source: PointCloudSource) -> bool:
        """Register a source for every extension it handles"""
        for ext in source.extensions():
            if ext in self.sources:
                self.logger.warning(f"Extension {ext} re-registered to {source.metadata.name}")
            self.sources[ext] = source
        self.logger.debug(f"Registered point cloud source: {source.metadata.name}")
        return True

    def remove_source(self, name: str) -> bool:
        """Remove a source and all of its extensions"""
        exts = [ext for ext, src in self.sources.items() if src.metadata.name == name]
        for ext in exts:
            del self.sources[ext]
        return bool(exts)

    def get_source(self, path) -> Optional[PointCloudSource]:
        """Get the source handling this file's extension"""
        return self.sources.get(Path(path).suffix.lower())

    def get_all_extensions(self) -> List[str]:
        return sorted(self.sources)

    def read(self, path) -> PointCloud:
        source = self.get_source(path)
        if source is None:
            raise FormatError(f"No point cloud reader for '{path}' (known: {', '.join(self.get_all_extensions())})")
        cloud = source.read(Path(path))
        self.logger.info(f"Read {len(cloud)} points from {path}")
        return cloud

    def write(self, cloud: PointCloud, path) -> Path:
        source = self.get_source(path)
        if source is None:
            raise FormatError(f"No point cloud writer for '{path}'")
        return source.write(cloud, Path(path))


def default_manager() -> PointCloudSourceManager:
    manager = PointCloudSourceManager()
    manager.register_source(XYZSource())
    manager.register_source(PLYSource())
    return manager


def read_point_cloud(path) -> PointCloud:
    return default_manager().read(path)


def write_point_cloud(cloud: PointCloud, path) -> Path:
    return default_manager().write(cloud, path)
