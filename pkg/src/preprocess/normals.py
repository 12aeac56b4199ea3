import logging

import numpy as np
import open3d as o3d
from scipy.spatial import cKDTree

from .cloud import PointCloud

logger = logging.getLogger(__name__)


def neighbor_graph(points: np.ndarray, k: int):
    """k nearest neighbors of every point, self excluded (distances, indices)"""
    tree = cKDTree(points)
    dists, idx = tree.query(points, k=k + 1)
    return dists[:, 1:], idx[:, 1:]


def to_open3d(points: np.ndarray) -> o3d.geometry.PointCloud:
    pcd = o3d.geometry.PointCloud()
    pcd.points = o3d.utility.Vector3dVector(np.asarray(points, dtype=np.float64))
    return pcd


def estimate_normals(cloud: PointCloud, k: int = 16) -> PointCloud:
    """
    Unoriented per-point normals over each point and its k nearest neighbors.
    Curvature is the smallest covariance eigenvalue over the eigenvalue sum;
    neighborhoods of rank below 2 are flagged invalid.
    """
    n = len(cloud)
    if n < k + 1:
        raise ValueError(f"estimate_normals needs at least {k + 1} points, got {n}")

    # the KNN search returns the query point itself
    search = o3d.geometry.KDTreeSearchParamKNN(knn=k + 1)
    pcd = to_open3d(cloud.points)
    pcd.estimate_normals(search)
    pcd.estimate_covariances(search)
    normals = np.asarray(pcd.normals).copy()
    eigvals = np.linalg.eigvalsh(np.asarray(pcd.covariances))

    scale = np.maximum(eigvals[:, 2], np.finfo(np.float64).tiny)
    valid = eigvals[:, 1] > 1e-12 * scale
    curvature = np.clip(eigvals[:, 0], 0.0, None) / np.maximum(eigvals.sum(axis=1), np.finfo(np.float64).tiny)

    invalid = int((~valid).sum())
    if invalid:
        logger.warning(f"{invalid} of {n} points have degenerate neighborhoods and are excluded")
    return cloud.with_normals(normals, valid, curvature)
