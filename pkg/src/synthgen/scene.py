import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Union

import numpy as np
import shapely
from shapely.geometry import Polygon

from ..data_sources import read_point_cloud, write_point_cloud
from ..decoder import QuerySet
from ..preprocess import InputImage, PointCloud, WallSegment, build_input_image, read_input_image, write_input_image
from ..vectorize import Floorplan, RoomPolygon, floorplan_from_json, floorplan_to_json
from .layout import SceneSpec, room_outlines

logger = logging.getLogger(__name__)

Seed = Union[int, List[int]]


@dataclass
class SynthScene:
    scene_id: str
    seed: Seed
    spec: SceneSpec
    floorplan: Floorplan
    cloud: PointCloud
    image: InputImage
    walls: List[WallSegment] = field(default_factory=list)
    flags: List[str] = field(default_factory=list)


def _sample_walls(rng: np.random.Generator, outlines: List[np.ndarray], spec: SceneSpec):
    """Vertical wall surfaces along every outline edge, one WallSegment per edge"""
    chunks, walls, start = [], [], 0
    for outer in outlines:
        for i in range(len(outer)):
            p0, p1 = outer[i], outer[(i + 1) % len(outer)]
            length = float(np.linalg.norm(p1 - p0))
            count = max(3, int(round(spec.wall_density * length * spec.wall_height)))
            t = rng.uniform(0.0, 1.0, size=(count, 1))
            z = rng.uniform(0.0, spec.wall_height, size=(count, 1))
            chunks.append(np.hstack([p0 + t * (p1 - p0), z]))
            d = (p1 - p0) / length
            normal = np.array([d[1], -d[0], 0.0])
            walls.append(WallSegment(np.arange(start, start + count), normal, -float(normal[:2] @ p0)))
            start += count
    return np.vstack(chunks), walls


def _sample_floor(rng: np.random.Generator, outlines: List[np.ndarray], spec: SceneSpec) -> np.ndarray:
    chunks = []
    for outer in outlines:
        poly = Polygon(outer)
        count = int(round(spec.floor_density * poly.area))
        lo, hi = outer.min(axis=0), outer.max(axis=0)
        found = np.empty((0, 2))
        while len(found) < count:
            cand = rng.uniform(lo, hi, size=(2 * count, 2))
            found = np.vstack([found, cand[shapely.contains_xy(poly, cand[:, 0], cand[:, 1])]])
        chunks.append(np.hstack([found[:count], np.zeros((count, 1))]))
    return np.vstack(chunks) if chunks else np.empty((0, 3))


def gen_scene(seed: Seed, spec: SceneSpec = None, scene_id: str = None) -> SynthScene:
    """Deterministic per seed: layout, wall/floor point cloud, input image and normalized GT"""
    spec = spec or SceneSpec()
    rng = np.random.default_rng(seed)
    outlines_px, short = room_outlines(rng, spec)
    outlines = [o * spec.pixel_size for o in outlines_px]

    wall_pts, walls = _sample_walls(rng, outlines, spec)
    floor_pts = _sample_floor(rng, outlines, spec)
    points = np.vstack([wall_pts, floor_pts])
    points = points + rng.normal(0.0, spec.noise_sigma, size=points.shape)
    n_out = int(round(spec.outlier_fraction * len(points)))
    if n_out:
        lo, hi = points.min(axis=0), points.max(axis=0)
        points = np.vstack([points, rng.uniform(lo, hi, size=(n_out, 3))])
    cloud = PointCloud(points)
    image = build_input_image(cloud, walls, use_height=spec.height_channel)

    rooms = [RoomPolygon(image.transform.to_normalized(o), room_id=i) for i, o in enumerate(outlines)]
    flags = ["placement_shortfall"] if short else []
    seed = [int(s) for s in seed] if isinstance(seed, (list, tuple)) else int(seed)
    scene_id = scene_id or "scene_" + "_".join(str(s) for s in np.atleast_1d(seed))
    logger.debug(f"{scene_id}: {len(rooms)} rooms, {len(cloud)} points")
    return SynthScene(scene_id, seed, spec, Floorplan(rooms, image.transform), cloud, image, walls, flags)


def gen_occupancy(scene: Union[SynthScene, Floorplan], X: QuerySet) -> np.ndarray:
    """m_gt x n; 1 where the point lies strictly inside the room"""
    floorplan = scene.floorplan if isinstance(scene, SynthScene) else scene
    xy = X.xy
    rows = [shapely.contains_xy(room.to_shapely(), xy[:, 0], xy[:, 1]) for room in floorplan.rooms]
    return np.asarray(rows, dtype=np.float64).reshape(len(rows), len(xy))


def gen_corpus(seed: int, count: int, spec: SceneSpec = None) -> List[SynthScene]:
    return [gen_scene([seed, i], spec, scene_id=f"scene_{i:04d}") for i in range(count)]


def write_scene(scene: SynthScene, directory) -> Path:
    """<directory>/<scene_id>/ with cloud.ply, floorplan.json, image.{raw,json,png} and scene.json"""
    out = Path(directory) / scene.scene_id
    out.mkdir(parents=True, exist_ok=True)
    write_point_cloud(scene.cloud, out / "cloud.ply")
    floorplan_to_json(scene.floorplan, out / "floorplan.json")
    write_input_image(scene.image, out / "image")
    meta = {"scene_id": scene.scene_id, "seed": scene.seed, "spec": scene.spec.to_dict(), "flags": scene.flags}
    (out / "scene.json").write_text(json.dumps(meta, indent=2, sort_keys=True))
    return out


def load_scene(directory) -> SynthScene:
    directory = Path(directory)
    meta = json.loads((directory / "scene.json").read_text())
    return SynthScene(scene_id=meta["scene_id"],
                      seed=meta["seed"],
                      spec=SceneSpec(**meta["spec"]),
                      floorplan=floorplan_from_json(directory / "floorplan.json"),
                      cloud=read_point_cloud(directory / "cloud.ply"),
                      image=read_input_image(directory / "image"),
                      flags=meta.get("flags", []))
