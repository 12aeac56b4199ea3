"""Room, corner and angle precision/recall/F1 plus room IoU"""
import logging
from dataclasses import dataclass, field
from typing import Iterable, List, Tuple

import numpy as np
import pandas as pd

from ..preprocess import IMAGE_SIZE
from ..vectorize import Floorplan, RoomPolygon, signed_area

logger = logging.getLogger(__name__)


@dataclass
class PRF:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r > 0 else 0.0

    def __add__(self, other: "PRF") -> "PRF":
        return PRF(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)

    def to_dict(self) -> dict:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1,
                "tp": self.tp, "fp": self.fp, "fn": self.fn}


@dataclass
class EvalReport:
    room: PRF = field(default_factory=PRF)
    corner: PRF = field(default_factory=PRF)
    angle: PRF = field(default_factory=PRF)
    iou_sum: float = 0.0
    gt_rooms: int = 0
    matched: List[Tuple[int, int, float]] = field(default_factory=list)
    flags: List[str] = field(default_factory=list)

    @property
    def mean_iou(self) -> float:
        """Average over GT rooms; unmatched GT rooms count as 0"""
        return self.iou_sum / self.gt_rooms if self.gt_rooms else 0.0

    def to_dict(self) -> dict:
        return {"room": self.room.to_dict(), "corner": self.corner.to_dict(), "angle": self.angle.to_dict(),
                "mean_iou": self.mean_iou, "gt_rooms": self.gt_rooms,
                "matched": [list(m) for m in self.matched], "flags": list(self.flags)}

    def flat(self) -> dict:
        row = {"mean_iou": self.mean_iou}
        for level in ("room", "corner", "angle"):
            prf = getattr(self, level)
            row.update({f"{level}_precision": prf.precision, f"{level}_recall": prf.recall, f"{level}_f1": prf.f1})
        return row


def room_iou(a: RoomPolygon, b: RoomPolygon) -> float:
    pa, pb = a.to_shapely(), b.to_shapely()
    if not pa.is_valid or not pb.is_valid or pa.area <= 0 or pb.area <= 0:
        return 0.0
    if pa.equals(pb):
        return 1.0
    union = pa.union(pb).area
    return float(pa.intersection(pb).area / union) if union > 0 else 0.0


def _corners(room: RoomPolygon, size: int) -> np.ndarray:
    loop = room.outer if signed_area(room.outer) > 0 else room.outer[::-1]
    return loop * size


def interior_angles(loop: np.ndarray) -> np.ndarray:
    """Degrees in [0, 360) at every vertex of a counter-clockwise loop"""
    a = np.roll(loop, 1, axis=0) - loop
    b = np.roll(loop, -1, axis=0) - loop
    cross = b[:, 0] * a[:, 1] - b[:, 1] * a[:, 0]
    dot = np.einsum("ij,ij->i", a, b)
    return np.degrees(np.arctan2(cross, dot)) % 360.0


def _greedy(scores: np.ndarray, accept, descending: bool) -> List[Tuple[int, int]]:
    """One-to-one greedy matching; ties resolve to the lowest (row, col)"""
    if scores.size == 0:
        return []
    rows, cols = np.indices(scores.shape)
    key = -scores.ravel() if descending else scores.ravel()
    order = np.lexsort((cols.ravel(), rows.ravel(), key))
    used_r, used_c, pairs = set(), set(), []
    for flat in order:
        r, c = int(rows.ravel()[flat]), int(cols.ravel()[flat])
        if r in used_r or c in used_c or not accept(scores[r, c]):
            continue
        used_r.add(r)
        used_c.add(c)
        pairs.append((r, c))
    return pairs


def evaluate(pred: Floorplan,
             gt: Floorplan,
             corner_tol: float = 10.0,
             angle_tol: float = 5.0,
             iou_threshold: float = 0.5,
             size: int = IMAGE_SIZE) -> EvalReport:
    report = EvalReport(gt_rooms=len(gt.rooms))
    if not gt.rooms:
        report.flags.append("empty_gt")
    if not pred.rooms:
        report.flags.append("empty_pred")

    ious = np.array([[room_iou(p, g) for g in gt.rooms] for p in pred.rooms]).reshape(len(pred.rooms), len(gt.rooms))
    pairs = _greedy(ious, lambda v: v >= iou_threshold, descending=True)
    report.room = PRF(len(pairs), len(pred.rooms) - len(pairs), len(gt.rooms) - len(pairs))

    pred_corners = [_corners(r, size) for r in pred.rooms]
    gt_corners = [_corners(r, size) for r in gt.rooms]
    total_pred = sum(len(c) for c in pred_corners)
    total_gt = sum(len(c) for c in gt_corners)
    corner_tp = angle_tp = 0
    for pi, gi in pairs:
        report.matched.append((pred.rooms[pi].room_id, gt.rooms[gi].room_id, float(ious[pi, gi])))
        report.iou_sum += float(ious[pi, gi])
        pc, gc = pred_corners[pi], gt_corners[gi]
        dists = np.linalg.norm(pc[:, None, :] - gc[None, :, :], axis=2)
        matches = _greedy(dists, lambda d: d <= corner_tol, descending=False)
        corner_tp += len(matches)
        pa, ga = interior_angles(pc), interior_angles(gc)
        for i, j in matches:
            diff = abs(pa[i] - ga[j]) % 360.0
            if min(diff, 360.0 - diff) < angle_tol:
                angle_tp += 1
    report.corner = PRF(corner_tp, total_pred - corner_tp, total_gt - corner_tp)
    report.angle = PRF(angle_tp, total_pred - angle_tp, total_gt - angle_tp)
    return report


def evaluate_corpus(items: Iterable[Tuple[str, Floorplan, Floorplan]],
                    corner_tol: float = 10.0,
                    angle_tol: float = 5.0,
                    iou_threshold: float = 0.5) -> Tuple[EvalReport, pd.DataFrame]:
    """Micro-averaged report over (scene_id, pred, gt) triples and one DataFrame row per scene"""
    total = EvalReport()
    rows = []
    for scene_id, pred, gt in items:
        report = evaluate(pred, gt, corner_tol, angle_tol, iou_threshold)
        total.room = total.room + report.room
        total.corner = total.corner + report.corner
        total.angle = total.angle + report.angle
        total.iou_sum += report.iou_sum
        total.gt_rooms += report.gt_rooms
        total.flags.extend(f"{scene_id}:{flag}" for flag in report.flags)
        rows.append({"scene_id": scene_id, **report.flat(), "flags": ";".join(report.flags)})
    if not rows:
        logger.warning("evaluate_corpus received no scenes")
    frame = pd.DataFrame(rows, columns=["scene_id", "mean_iou",
                                        *[f"{lvl}_{m}" for lvl in ("room", "corner", "angle")
                                          for m in ("precision", "recall", "f1")], "flags"])
    return total, frame
