from .manager import PointCloudSourceManager, default_manager, read_point_cloud, write_point_cloud
