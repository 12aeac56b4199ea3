from dataclasses import asdict, dataclass, field, replace
from typing import List

from ..decoder import AXIS_ONLY, FULL
from ..errors import ConfigError

PLUS = "plus"
STAR = "star"
SCHEDULES = ("staged", "joint")


@dataclass
class StageConfig:
    """One training stage: 1 axis-only L+, 2 full L+, 3 full L*"""
    stage: int
    epochs: int = 120
    batch_size: int = 8
    lr: float = 2e-4
    weight_decay: float = 1e-4
    decay_fraction: float = 0.3
    decay_factor: float = 0.1

    def __post_init__(self):
        if self.stage not in (1, 2, 3):
            raise ConfigError(f"Stage must be 1, 2 or 3, got {self.stage}")
        if self.epochs < 0 or self.batch_size < 1:
            raise ConfigError(f"Stage {self.stage}: epochs must be >= 0 and batch_size >= 1")
        if self.lr <= 0:
            raise ConfigError(f"Stage {self.stage}: learning rate must be positive")
        if self.weight_decay < 0 or not 0.0 <= self.decay_fraction <= 1.0 or self.decay_factor <= 0:
            raise ConfigError(f"Stage {self.stage}: weight_decay must be >= 0, decay_fraction in [0, 1] "
                              f"and decay_factor positive")

    @property
    def decoder_stage(self) -> str:
        return AXIS_ONLY if self.stage == 1 else FULL

    @property
    def loss_kind(self) -> str:
        return STAR if self.stage == 3 else PLUS


def schedule(kind: str = "staged", epochs: int = 120, batch_size: int = 8, lr: float = 2e-4) -> List[StageConfig]:
    """staged runs 1 -> 2 -> 3; joint drops stage 1 and gives its epochs to stage 2"""
    if kind == "staged":
        return [StageConfig(s, epochs, batch_size, lr) for s in (1, 2, 3)]
    if kind == "joint":
        return [StageConfig(2, 2 * epochs, batch_size, lr), StageConfig(3, epochs, batch_size, lr)]
    raise ConfigError(f"Unknown schedule '{kind}', expected one of {SCHEDULES}")


@dataclass
class TrainConfig:
    stages: List[StageConfig] = field(default_factory=schedule)
    query_points: int = 4096
    gamma: float = 0.01
    seed: int = 0
    jobs: int = 1
    schedule_kind: str = "staged"

    def __post_init__(self):
        order = [s.stage for s in self.stages]
        if order != sorted(order) or len(set(order)) != len(order):
            raise ConfigError(f"Stages must run in increasing order, got {order}")
        if self.query_points < 1:
            raise ConfigError(f"query_points must be positive, got {self.query_points}")

    @classmethod
    def full_scale(cls, **overrides) -> "TrainConfig":
        config = cls(stages=schedule("staged", epochs=600, batch_size=16), query_points=4096)
        return replace(config, **overrides) if overrides else config

    def to_dict(self) -> dict:
        return asdict(self)
