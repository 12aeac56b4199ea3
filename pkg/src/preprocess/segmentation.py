"""Region growing on the k-NN graph, coplanar fragment merging and per-region RANSAC wall extraction"""
import logging
import threading
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional

import numpy as np
import open3d as o3d
from scipy.cluster.hierarchy import DisjointSet

from .cloud import PointCloud, WallSegment
from .normals import neighbor_graph, to_open3d

logger = logging.getLogger(__name__)

# open3d keeps one global RNG; seeding and sampling must not interleave across threads
_RANSAC_LOCK = threading.Lock()


def _axis(scatter: np.ndarray) -> np.ndarray:
    """Sign-free mean normal: top eigenvector of the scatter sum n n^T"""
    _, vecs = np.linalg.eigh(scatter)
    return vecs[:, -1]


def _grow(cloud: PointCloud, dists: np.ndarray, idx: np.ndarray, cos_t: float, dist_thresh: float) -> np.ndarray:
    """Label every valid point with a region id; invalid points get -1"""
    normals = cloud.normals
    label = np.full(len(cloud), -2, dtype=np.int64)
    label[~cloud.normal_valid] = -1
    order = np.argsort(np.where(cloud.normal_valid, cloud.curvature, np.inf), kind="stable")

    rid = 0
    for seed in order:
        if label[seed] != -2:
            continue
        label[seed] = rid
        queue = deque([seed])
        seed_normal = normals[seed]
        while queue:
            p = queue.popleft()
            nbrs = idx[p]
            cand = nbrs[(dists[p] <= dist_thresh) & (label[nbrs] == -2)]
            if cand.size == 0:
                continue
            smooth = (np.abs(normals[cand] @ normals[p]) >= cos_t) & (np.abs(normals[cand] @ seed_normal) >= cos_t)
            for j in cand[smooth]:
                if label[j] == -2:
                    label[j] = rid
                    queue.append(j)
        rid += 1
    return label


def _merge_coplanar(cloud: PointCloud, label: np.ndarray, idx: np.ndarray,
                    cos_t: float, dist_thresh: float) -> np.ndarray:
    """
    Union fragments that touch in the k-NN graph, share a mean normal within
    the angle threshold and lie on one plane within dist_thresh.
    """
    count = int(label.max()) + 1
    if count <= 1:
        return label
    src = np.repeat(np.arange(len(label)), idx.shape[1])
    dst = idx.ravel()
    a, b = label[src], label[dst]
    touching = (a >= 0) & (b >= 0) & (a != b)
    if not touching.any():
        return label
    pairs = np.unique(np.sort(np.stack([a[touching], b[touching]], axis=1), axis=1), axis=0)

    # per-fragment point count, coordinate sum and normal scatter, kept per root
    member = label >= 0
    sizes = np.bincount(label[member], minlength=count).astype(np.float64)
    sums = np.zeros((count, 3))
    np.add.at(sums, label[member], cloud.points[member])
    scatter = np.zeros((count, 3, 3))
    normals = cloud.normals[member]
    np.add.at(scatter, label[member], normals[:, :, None] * normals[:, None, :])

    # pairs with the largest fragment first so merges are judged against well-supported planes
    order = np.lexsort((pairs[:, 1], pairs[:, 0], -np.maximum(sizes[pairs[:, 0]], sizes[pairs[:, 1]])))
    sets = DisjointSet(range(count))
    for ra, rb in pairs[order]:
        ra, rb = sets[int(ra)], sets[int(rb)]
        if ra == rb:
            continue
        big, small = (ra, rb) if sizes[ra] >= sizes[rb] else (rb, ra)
        n_big, n_small = _axis(scatter[big]), _axis(scatter[small])
        if abs(n_big @ n_small) < cos_t:
            continue
        gap = sums[small] / sizes[small] - sums[big] / sizes[big]
        if abs(n_big @ gap) >= dist_thresh:
            continue
        sets.merge(big, small)
        root = sets[big]
        sizes[root] = sizes[big] + sizes[small]
        sums[root] = sums[big] + sums[small]
        scatter[root] = scatter[big] + scatter[small]

    roots = np.array([sets[r] for r in range(count)])
    merged = label.copy()
    merged[member] = roots[label[member]]
    return merged


def segment_regions(cloud: PointCloud,
                    angle_thresh: float = 10.0,
                    dist_thresh: float = 0.1,
                    k: int = 16,
                    min_region_size: int = 50) -> List[np.ndarray]:
    """
    Grow smooth regions from low-curvature seeds. A neighbor joins when it is
    closer than dist_thresh and its normal is within angle_thresh of both the
    current point's and the seed's normal (sign-free). Touching coplanar
    fragments are merged before regions under min_region_size are dropped.
    """
    if not cloud.has_normals:
        raise ValueError("segment_regions needs normals; run estimate_normals first")
    n = len(cloud)
    if n < 2:
        return []
    dists, idx = neighbor_graph(cloud.points, min(k, n - 1))
    cos_t = np.cos(np.radians(angle_thresh))

    label = _grow(cloud, dists, idx, cos_t, dist_thresh)
    grown = int(label.max()) + 1
    label = _merge_coplanar(cloud, label, idx, cos_t, dist_thresh)

    ids, sizes = np.unique(label[label >= 0], return_counts=True)
    kept = ids[sizes >= min_region_size]
    # ordered by first member index so the output does not depend on root choice
    regions = sorted((np.flatnonzero(label == r) for r in kept), key=lambda m: m[0])
    logger.info(f"Region growing: {grown} fragments merged into {len(ids)}, "
                f"{len(regions)} kept with at least {min_region_size} points")
    return regions


def _canonical(normal: np.ndarray, offset: float):
    """Fix the plane sign so that the largest normal component is positive"""
    if normal[np.argmax(np.abs(normal))] < 0:
        return -normal, -offset
    return normal, offset


def _refit(points: np.ndarray, inliers: np.ndarray, inlier_thresh: float, rounds: int = 10):
    """Least-squares plane through the inliers, repeated until the inlier set stops changing"""
    for _ in range(rounds):
        centroid = points[inliers].mean(axis=0)
        _, _, vt = np.linalg.svd(points[inliers] - centroid, full_matrices=False)
        normal = vt[-1]
        offset = -float(normal @ centroid)
        refit = np.abs(points @ normal + offset) < inlier_thresh
        if refit.sum() < 3:
            refit = inliers
            break
        if np.array_equal(refit, inliers):
            break
        inliers = refit
    normal, offset = _canonical(normal, offset)
    return normal, offset, refit


def fit_plane_ransac(points: np.ndarray,
                     seed: int = 0,
                     iters: int = 200,
                     inlier_thresh: float = 0.02):
    """open3d 3-point RANSAC, then a least-squares refit on the inliers"""
    points = np.asarray(points, dtype=np.float64)
    if len(points) < 3:
        return None
    pcd = to_open3d(points)
    with _RANSAC_LOCK:
        o3d.utility.random.seed(int(seed))
        model, picked = pcd.segment_plane(distance_threshold=inlier_thresh, ransac_n=3, num_iterations=iters)
    if len(picked) < 3 or np.linalg.norm(model[:3]) < 1e-12:
        return None
    inliers = np.zeros(len(points), dtype=bool)
    inliers[np.asarray(picked)] = True
    return _refit(points, inliers, inlier_thresh)


def merge_walls(walls: List[WallSegment],
                cloud: PointCloud,
                inlier_thresh: float = 0.02,
                angle_thresh: float = 10.0,
                overlap: float = 0.5) -> List[WallSegment]:
    """
    Fold a wall into a larger one when the normals agree within angle_thresh
    and at least `overlap` of its inliers lie within inlier_thresh of the
    larger plane. Merged walls are refit on the union of their inliers.
    """
    cos_t = np.cos(np.radians(angle_thresh))
    pending = sorted(walls, key=lambda w: (-w.inlier_count, int(w.indices[0]) if len(w.indices) else -1))
    merged: List[WallSegment] = []
    for wall in pending:
        pts = cloud.points[wall.indices]
        for i, kept in enumerate(merged):
            if abs(kept.normal @ wall.normal) < cos_t:
                continue
            if np.mean(np.abs(kept.distances(pts)) < inlier_thresh) < overlap:
                continue
            union = np.union1d(kept.indices, wall.indices)
            normal, offset, inliers = _refit(cloud.points[union], np.ones(len(union), dtype=bool), inlier_thresh)
            merged[i] = WallSegment(indices=union[inliers], normal=normal, offset=offset)
            break
        else:
            merged.append(wall)
    return merged


def extract_wall_planes(regions: List[np.ndarray],
                        cloud: PointCloud,
                        ransac_iters: int = 200,
                        inlier_thresh: float = 0.02,
                        vertical_tolerance: float = 0.1,
                        seed: int = 0,
                        jobs: int = 1,
                        min_inliers: int = 100,
                        merge_angle: float = 10.0) -> List[WallSegment]:
    """Fit one plane per region, keep the vertical ones, merge duplicates and drop thin walls"""

    def fit(i: int) -> Optional[WallSegment]:
        region = regions[i]
        if len(region) < 3:
            logger.debug(f"Region {i} has fewer than 3 points, skipped")
            return None
        fitted = fit_plane_ransac(cloud.points[region], seed + i, ransac_iters, inlier_thresh)
        if fitted is None:
            return None
        normal, offset, inliers = fitted
        if not inliers.any():
            return None
        wall = WallSegment(indices=region[inliers], normal=normal, offset=offset)
        return wall if wall.is_vertical(vertical_tolerance) else None

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as executor:
        fitted = [w for w in executor.map(fit, range(len(regions))) if w is not None]
    walls = merge_walls(fitted, cloud, inlier_thresh, merge_angle)
    walls = [w for w in walls if w.is_vertical(vertical_tolerance) and w.inlier_count >= min_inliers]
    logger.info(f"RANSAC: {len(fitted)} vertical planes out of {len(regions)} regions, {len(walls)} walls after merging")
    return walls
