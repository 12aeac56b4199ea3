"""Point cloud to density + wall height input image"""
import logging
from dataclasses import dataclass

from .cloud import PointCloud, WallSegment
from .image import (CHANNELS, IMAGE_SIZE, ImageTransform, InputImage, build_input_image, read_input_image,
                    wall_trace, write_input_image)
from .normals import estimate_normals
from .segmentation import extract_wall_planes, fit_plane_ransac, merge_walls, segment_regions

logger = logging.getLogger(__name__)


@dataclass
class PreprocessConfig:
    k: int = 16
    angle_thresh: float = 10.0
    dist_thresh: float = 0.1
    min_region_size: int = 50
    ransac_iters: int = 200
    inlier_thresh: float = 0.02
    vertical_tolerance: float = 0.1
    min_wall_inliers: int = 100
    height_tolerance: float = 0.05
    use_height_channel: bool = True
    seed: int = 0
    jobs: int = 1


def preprocess_cloud(cloud: PointCloud, config: PreprocessConfig = None) -> InputImage:
    """Normals, region growing, RANSAC wall planes, then the raster"""
    config = config or PreprocessConfig()
    if len(cloud) <= config.k:
        logger.warning(f"Cloud has {len(cloud)} points; too few for wall extraction")
        return build_input_image(cloud, [], use_height=config.use_height_channel)
    cloud = estimate_normals(cloud, config.k)
    regions = segment_regions(cloud, config.angle_thresh, config.dist_thresh, config.k, config.min_region_size)
    walls = extract_wall_planes(regions, cloud, config.ransac_iters, config.inlier_thresh,
                                config.vertical_tolerance, config.seed, config.jobs, config.min_wall_inliers)
    return build_input_image(cloud, walls, height_tolerance=config.height_tolerance,
                             use_height=config.use_height_channel)
