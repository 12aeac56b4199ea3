import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Tuple

import numpy as np
from PIL import Image

from ..errors import FormatError, ShapeError
from .cloud import PointCloud, WallSegment

IMAGE_SIZE = 256
CHANNELS = ("density", "wall_height")


@dataclass(frozen=True)
class ImageTransform:
    """Uniform world (meters) to pixel mapping: pixel = world * scale + offset"""
    scale: float = 1.0
    offset_x: float = 0.0
    offset_y: float = 0.0
    size: int = IMAGE_SIZE

    def to_pixel(self, xy: np.ndarray) -> np.ndarray:
        xy = np.asarray(xy, dtype=np.float64)
        return xy * self.scale + np.array([self.offset_x, self.offset_y])

    def to_world(self, pixel: np.ndarray) -> np.ndarray:
        pixel = np.asarray(pixel, dtype=np.float64)
        return (pixel - np.array([self.offset_x, self.offset_y])) / self.scale

    def to_normalized(self, xy: np.ndarray) -> np.ndarray:
        return self.to_pixel(xy) / self.size

    def normalized_to_world(self, uv: np.ndarray) -> np.ndarray:
        return self.to_world(np.asarray(uv, dtype=np.float64) * self.size)

    def to_dict(self) -> dict:
        return {"scale": self.scale, "offset_x": self.offset_x, "offset_y": self.offset_y, "size": self.size}

    @classmethod
    def from_dict(cls, data: dict) -> "ImageTransform":
        return cls(float(data["scale"]), float(data["offset_x"]), float(data["offset_y"]), int(data.get("size", IMAGE_SIZE)))

    @classmethod
    def fit(cls, xy: np.ndarray, size: int = IMAGE_SIZE, margin: float = 0.05) -> "ImageTransform":
        """Center the xy bounding box, padded by margin on every side, in a size x size raster"""
        lo, hi = xy.min(axis=0), xy.max(axis=0)
        span = max(float((hi - lo).max()), 1e-9) * (1.0 + 2.0 * margin)
        scale = size / span
        center = (lo + hi) / 2.0
        return cls(scale, size / 2.0 - center[0] * scale, size / 2.0 - center[1] * scale, size)


@dataclass
class InputImage:
    """Raster data[row=y, col=x, channel] with density and optionally wall_height, every value in [0, 1]"""
    data: np.ndarray
    transform: ImageTransform

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float32)
        if self.data.ndim != 3 or self.data.shape[2] not in (1, len(CHANNELS)):
            raise ShapeError(f"InputImage needs shape (H, W, 1) or (H, W, 2), got {self.data.shape}")

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def channels(self) -> Tuple[str, ...]:
        return CHANNELS[:self.data.shape[2]]

    @property
    def density(self) -> np.ndarray:
        return self.data[:, :, 0]

    @property
    def wall_height(self) -> Optional[np.ndarray]:
        return self.data[:, :, 1] if self.data.shape[2] > 1 else None


def _pixel_indices(points: np.ndarray, transform: ImageTransform):
    px = np.floor(transform.to_pixel(points[:, :2])).astype(np.int64)
    px = np.clip(px, 0, transform.size - 1)
    return px[:, 1], px[:, 0]


def wall_trace(xy: np.ndarray, wall: WallSegment, transform: ImageTransform,
               max_gap: float = 3.0, step: float = 0.5):
    """
    Pixels (rows, cols) along the wall's line in the xy plane, covering the
    projections of its points. Gaps longer than max_gap pixels stay open.
    """
    n2 = wall.normal[:2]
    norm2 = float(n2 @ n2)
    if len(xy) == 0 or norm2 == 0.0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    feet = xy - np.outer((xy @ n2 + wall.offset) / norm2, n2)
    feet_px = transform.to_pixel(feet)
    direction = np.array([-n2[1], n2[0]]) / np.sqrt(norm2)
    origin = feet_px.mean(axis=0)
    t = np.sort((feet_px - origin) @ direction)
    if len(t) == 1:
        t = np.repeat(t, 2)

    samples = np.append(np.arange(t[0], t[-1], step), t[-1])
    right = np.clip(np.searchsorted(t, samples), 1, len(t) - 1)
    covered = (t[right] - t[right - 1] <= max_gap) | (np.abs(samples - t[right - 1]) <= step) | \
              (np.abs(samples - t[right]) <= step)
    px = np.floor(origin + np.outer(samples[covered], direction)).astype(np.int64)
    inside = np.all((px >= 0) & (px < transform.size), axis=1)
    px = np.unique(px[inside], axis=0)
    return px[:, 1], px[:, 0]


def build_input_image(cloud: PointCloud,
                      walls: Sequence[WallSegment],
                      size: int = IMAGE_SIZE,
                      margin: float = 0.05,
                      density_percentile: float = 99.0,
                      height_tolerance: float = 0.05,
                      use_height: bool = True) -> InputImage:
    """
    density = per-pixel count / 99th percentile of occupied-pixel counts;
    wall_height = each wall's top (max z of its points) / scene max z, drawn
    along the wall's trace. Tops within height_tolerance of the scene top
    count as full height. use_height=False leaves the density channel only.
    """
    channels = len(CHANNELS) if use_height else 1
    if len(cloud) == 0:
        return InputImage(np.zeros((size, size, channels), dtype=np.float32), ImageTransform(size=size))

    transform = ImageTransform.fit(cloud.points[:, :2], size, margin)
    rows, cols = _pixel_indices(cloud.points, transform)
    counts = np.bincount(rows * size + cols, minlength=size * size).reshape(size, size).astype(np.float64)
    occupied = counts[counts > 0]
    density = np.clip(counts / np.percentile(occupied, density_percentile), 0.0, 1.0)
    if not use_height:
        return InputImage(density[:, :, None], transform)

    heights = np.zeros((size, size))
    scene_top = float(cloud.points[:, 2].max())
    if scene_top > 0:
        for wall in walls:
            if len(wall.indices) == 0:
                continue
            members = cloud.points[wall.indices]
            top = float(members[:, 2].max())
            value = 1.0 if scene_top - top <= height_tolerance else float(np.clip(top / scene_top, 0.0, 1.0))
            trace_rows, trace_cols = wall_trace(members[:, :2], wall, transform)
            np.maximum.at(heights, (trace_rows, trace_cols), value)

    return InputImage(np.stack([density, heights], axis=2), transform)


def write_input_image(image: InputImage, stem, previews: bool = True) -> Path:
    """<stem>.raw (u32 width, u32 height, float32 H x W x C) plus <stem>.json and PNG previews"""
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    raw = stem.with_suffix(".raw")
    with open(raw, "wb") as f:
        f.write(struct.pack("<II", image.width, image.height))
        f.write(image.data.astype("<f4").tobytes())
    sidecar = {"width": image.width, "height": image.height, "channels": list(image.channels),
               "transform": image.transform.to_dict()}
    stem.with_suffix(".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True))
    if previews:
        for i, name in enumerate(image.channels):
            pixels = np.round(np.clip(image.data[:, :, i], 0, 1) * 255).astype(np.uint8)
            Image.fromarray(pixels).save(stem.parent / f"{stem.name}_{name}.png")
    return raw


def read_input_image(stem) -> InputImage:
    """Channel count comes from the file size: density only, or density and wall height"""
    stem = Path(stem)
    raw = stem.with_suffix(".raw").read_bytes()
    if len(raw) < 8:
        raise FormatError(f"{stem}.raw is too short for a header")
    width, height = struct.unpack("<II", raw[:8])
    channels = (len(raw) - 8) // max(width * height * 4, 1)
    if channels not in (1, len(CHANNELS)) or len(raw) != 8 + width * height * channels * 4:
        raise FormatError(f"{stem}.raw has {len(raw)} bytes, expected "
                          f"{8 + width * height * len(CHANNELS) * 4} or {8 + width * height * 4}")
    data = np.frombuffer(raw, dtype="<f4", offset=8).reshape(height, width, channels)
    sidecar_path = stem.with_suffix(".json")
    transform: Optional[ImageTransform] = None
    if sidecar_path.exists():
        transform = ImageTransform.from_dict(json.loads(sidecar_path.read_text())["transform"])
    return InputImage(data.copy(), transform or ImageTransform(size=width))
