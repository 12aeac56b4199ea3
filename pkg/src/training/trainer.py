import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd

from ..decoder import QuerySet
from ..errors import NonFiniteLossError
from ..ndgrad import Adam, Parameter, Tape, stage_learning_rate
from ..synthgen import gen_occupancy
from .config import PLUS, StageConfig, TrainConfig
from .dataset import TrainingSample
from .losses import matched_target, stage_loss
from .matching import match_rooms, pad_gt
from .model import FloorplanModel

logger = logging.getLogger(__name__)

LOG_COLUMNS = ["step", "stage", "epoch", "L_rec", "L_T", "L_W", "total", "lr"]


@dataclass
class TrainingResult:
    log: pd.DataFrame
    checkpoints: List[Path] = field(default_factory=list)


class Trainer:
    """Runs the configured stages in order; one Adam optimizer per stage"""

    def __init__(self, model: FloorplanModel, config: TrainConfig, output_dir):
        self.model = model
        self.config = config
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.log_path = self.output_dir / "loss_log.csv"
        self._rows: List[dict] = []
        self._step = 0

    def _register(self, samples: Sequence[TrainingSample]):
        table = self.model.encoder.table
        if table is not None:
            table.register_all(s.scene_id for s in samples)

    def _item(self, sample: TrainingSample, stage: StageConfig, rng: np.random.Generator) -> Tuple[Dict[str, float], Dict[Parameter, np.ndarray]]:
        """Forward, match on the same forward values, loss and gradients for one scene"""
        X = QuerySet.uniform(self.config.query_points, rng)
        G = pad_gt(gen_occupancy(sample.floorplan, X), self.model.m)
        decoder = self.model.decoder
        with Tape() as tape:
            codes = self.model.codes(sample.scene_id, sample.image)
            out = decoder.decode(codes, X, stage.decoder_stage)
            S = out.S_plus if stage.loss_kind == PLUS else out.S_star
            if not np.isfinite(S.value).all():
                return dict.fromkeys(("L_rec", "L_T", "L_W", "total"), float("nan")), {}
            sigma = match_rooms(S.value.T, G, stage.stage)
            terms = stage_loss(stage.loss_kind, S, matched_target(G, sigma), decoder.T, decoder.W, self.config.gamma)
            loss = terms.total
        leaves = tape.leaves()
        return terms.values(), dict(zip(leaves, tape.gradient(loss, leaves)))

    def _save(self, name: str) -> Path:
        return self.model.save(self.output_dir / name, {"seed": self.config.seed, "step": self._step})

    def _flush_log(self):
        pd.DataFrame(self._rows, columns=LOG_COLUMNS).to_csv(self.log_path, index=False)

    def run_stage(self, stage: StageConfig, samples: Sequence[TrainingSample]):
        params = list(self.model.parameters().values())
        # values are immutable, so keeping references is a snapshot
        last_good = [p.value for p in params]
        optimizer = Adam(params, lr=stage.lr, weight_decay=stage.weight_decay)
        seed = self.config.seed
        with ThreadPoolExecutor(max_workers=max(1, self.config.jobs)) as executor:
            for epoch in range(stage.epochs):
                optimizer.lr = stage_learning_rate(stage.lr, epoch, stage.epochs, stage.decay_fraction, stage.decay_factor)
                order = np.random.default_rng([seed, stage.stage, epoch]).permutation(len(samples))
                epoch_rows = []
                for batch_idx, start in enumerate(range(0, len(order), stage.batch_size)):
                    batch = [samples[i] for i in order[start:start + stage.batch_size]]
                    rngs = [np.random.default_rng([seed, stage.stage, epoch, batch_idx, k]) for k in range(len(batch))]
                    results = list(executor.map(lambda args: self._item(*args),
                                                [(s, stage, r) for s, r in zip(batch, rngs)]))

                    values = {k: float(np.mean([r[0][k] for r in results])) for k in results[0][0]}
                    if not np.isfinite(values["total"]):
                        self._flush_log()
                        for p, value in zip(params, last_good):
                            p.assign(value)
                        path = self._save("last_finite")
                        raise NonFiniteLossError(
                            f"Non-finite loss at stage {stage.stage}, epoch {epoch}, step {self._step}", path)

                    grads: Dict[Parameter, np.ndarray] = {}
                    for _, item_grads in results:
                        for p, g in item_grads.items():
                            grads[p] = grads[p] + g if p in grads else g
                    last_good = [p.value for p in params]
                    optimizer.step({p: g / len(batch) for p, g in grads.items()})

                    row = {"step": self._step, "stage": stage.stage, "epoch": epoch, **values, "lr": optimizer.lr}
                    self._rows.append(row)
                    epoch_rows.append(row)
                    self._step += 1
                mean_total = np.mean([r["total"] for r in epoch_rows])
                logger.info(f"Stage {stage.stage} epoch {epoch + 1}/{stage.epochs}: "
                            f"mean loss {mean_total:.6f} (lr {optimizer.lr:.2e})")

    def train_three_stage(self, samples: Sequence[TrainingSample]) -> TrainingResult:
        if not samples:
            raise ValueError("Training needs at least one scene")
        self._register(samples)
        checkpoints = []
        for stage in self.config.stages:
            logger.info(f"Starting stage {stage.stage} ({stage.loss_kind}, {stage.decoder_stage}): "
                        f"{stage.epochs} epochs, batch {stage.batch_size}")
            self.run_stage(stage, samples)
            checkpoints.append(self._save(f"stage{stage.stage}"))
            self._flush_log()
        return TrainingResult(pd.read_csv(self.log_path), checkpoints)
