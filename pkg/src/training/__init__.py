"""Room matching, stage losses and the staged training loop"""
from .config import PLUS, SCHEDULES, STAR, StageConfig, TrainConfig, schedule
from .dataset import TrainingSample, load_samples, samples_from_scenes
from .losses import LossTerms, loss_plus, loss_star, matched_target, stage_loss
from .matching import lexicographic_assignment, match_rooms, pad_gt, pair_costs
from .model import FloorplanModel
from .suite import run_gradient_suite
from .trainer import LOG_COLUMNS, Trainer, TrainingResult


def train_three_stage(samples, model: FloorplanModel, config: TrainConfig, output_dir) -> TrainingResult:
    return Trainer(model, config, output_dir).train_three_stage(samples)
