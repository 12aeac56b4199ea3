import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Optional

from ..errors import FormatError
from ..preprocess import InputImage, read_input_image
from ..vectorize import Floorplan, floorplan_from_json

logger = logging.getLogger(__name__)


@dataclass
class TrainingSample:
    scene_id: str
    floorplan: Floorplan
    image: Optional[InputImage] = None


def samples_from_scenes(scenes: Iterable, with_images: bool = True) -> List[TrainingSample]:
    """Wrap in-memory SynthScene objects"""
    return [TrainingSample(s.scene_id, s.floorplan, s.image if with_images else None) for s in scenes]


def load_samples(corpus_dir, with_images: bool = True) -> List[TrainingSample]:
    """One sample per scene directory holding floorplan.json (and image.raw when images are needed)"""
    corpus_dir = Path(corpus_dir)
    samples = []
    for scene_dir in sorted(p for p in corpus_dir.iterdir() if p.is_dir()):
        if not (scene_dir / "floorplan.json").exists():
            logger.debug(f"Skipping {scene_dir}: no floorplan.json")
            continue
        image = read_input_image(scene_dir / "image") if with_images else None
        samples.append(TrainingSample(scene_dir.name, floorplan_from_json(scene_dir / "floorplan.json"), image))
    if not samples:
        raise FormatError(f"No scenes with floorplan.json under {corpus_dir}")
    logger.info(f"Loaded {len(samples)} training scenes from {corpus_dir}")
    return samples
