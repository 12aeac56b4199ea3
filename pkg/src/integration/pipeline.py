"""Corpus-level orchestration of preprocess, inference and evaluation"""
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Dict, List, Sequence, Tuple

from ..data_sources import default_manager, read_point_cloud
from ..metrics import EvalReport, evaluate_corpus
from ..ndgrad import no_grad
from ..preprocess import PreprocessConfig, preprocess_cloud, read_input_image, write_input_image
from ..training import FloorplanModel
from ..vectorize import Floorplan, extract_floorplan, floorplan_from_json, floorplan_to_json, floorplan_to_svg

PRED_NAME = "prediction.json"
GT_NAME = "floorplan.json"


class CorpusPipeline:
    """Per-scene work fanned out over a thread pool; results come back in scene order"""

    def __init__(self, jobs: int = 1):
        self.logger = logging.getLogger(__name__)
        self.jobs = max(1, jobs)

    def _map(self, fn: Callable, items: Sequence) -> List:
        with ThreadPoolExecutor(max_workers=self.jobs) as executor:
            return list(executor.map(fn, items))

    @staticmethod
    def scene_dirs(root) -> List[Path]:
        root = Path(root)
        return sorted(p for p in root.iterdir() if p.is_dir())

    def find_clouds(self, root) -> List[Tuple[str, Path]]:
        """(scene_id, cloud path): files directly under root or one per scene directory"""
        root = Path(root)
        extensions = set(default_manager().get_all_extensions())
        found = []
        for path in sorted(root.rglob("*")):
            if path.is_file() and path.suffix.lower() in extensions:
                scene_id = path.parent.name if path.parent != root else path.stem
                found.append((scene_id, path))
        return found

    def preprocess(self, input_root, output_root, config: PreprocessConfig) -> List[Path]:
        clouds = self.find_clouds(input_root)
        output_root = Path(output_root)

        def run(item):
            scene_id, path = item
            image = preprocess_cloud(read_point_cloud(path), config)
            self.logger.info(f"Preprocessed {scene_id} ({path.name})")
            return write_input_image(image, output_root / scene_id / "image")

        return self._map(run, clouds)

    def infer(self, model: FloorplanModel, input_root, output_root, gamma: float = 0.01,
              validity_threshold: float = 1e-4, seed: int = 0) -> List[Path]:
        """prediction.json and prediction.svg per scene directory that has an image"""
        output_root = Path(output_root)
        scenes = [d for d in self.scene_dirs(input_root) if (d / "image.raw").exists()]
        table = model.encoder.table

        def run(scene_dir: Path):
            scene_id = scene_dir.name
            if table is not None and scene_id not in table:
                self.logger.warning(f"{scene_id} has no latent code in this checkpoint; skipped")
                return None
            image = read_input_image(scene_dir / "image")
            with no_grad():
                codes = model.codes(scene_id, image if table is None else None)
            floorplan = extract_floorplan(codes, model.decoder, gamma, validity_threshold,
                                          transform=image.transform)
            out = output_root / scene_id
            floorplan_to_json(floorplan, out / PRED_NAME)
            floorplan_to_svg(floorplan, out / "prediction.svg", seed=seed, underlay=image.density)
            self.logger.info(f"{scene_id}: {len(floorplan)} rooms")
            return out / PRED_NAME

        return [p for p in self._map(run, scenes) if p is not None]

    def evaluate(self, pred_root, gt_root, output_root, corner_tol: float = 10.0, angle_tol: float = 5.0,
                 iou_threshold: float = 0.5) -> Tuple[EvalReport, List[Dict]]:
        """Writes report.json and per_scene.csv; scenes without a prediction count as empty"""
        pred_root, gt_root, output_root = Path(pred_root), Path(gt_root), Path(output_root)
        scenes = [d for d in self.scene_dirs(gt_root) if (d / GT_NAME).exists()]

        def load(scene_dir: Path):
            pred_path = pred_root / scene_dir.name / PRED_NAME
            gt = floorplan_from_json(scene_dir / GT_NAME)
            if not pred_path.exists():
                self.logger.warning(f"No prediction for {scene_dir.name}; scoring it as empty")
                return scene_dir.name, Floorplan([], gt.transform), gt
            return scene_dir.name, floorplan_from_json(pred_path), gt

        report, frame = evaluate_corpus(self._map(load, scenes), corner_tol, angle_tol, iou_threshold)
        output_root.mkdir(parents=True, exist_ok=True)
        (output_root / "report.json").write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True))
        frame.to_csv(output_root / "per_scene.csv", index=False)
        self.logger.info(f"Evaluated {len(scenes)} scenes: room F1 {report.room.f1:.3f}, "
                         f"mean IoU {report.mean_iou:.3f}")
        return report, frame.to_dict(orient="records")
