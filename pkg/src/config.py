"""
Run configuration: dataclass defaults, overridden by a key = value config
file, overridden by command-line flags.
"""
import os
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional, Union, get_args, get_origin

from dotenv import dotenv_values

from .decoder import DecoderConfig
from .encoder import EncoderConfig
from .errors import ConfigError
from .preprocess import PreprocessConfig
from .synthgen import SceneSpec
from .training import TrainConfig, schedule

OUTPUT_ROOT_ENV = "FLOORPLAN_OUTPUT_ROOT"
LOG_LEVEL_ENV = "FLOORPLAN_LOG_LEVEL"


def output_root() -> Path:
    return Path(os.getenv(OUTPUT_ROOT_ENV, "./runs"))


@dataclass
class RunConfig:
    command: str = ""
    input: Optional[str] = None
    output: Optional[str] = None
    gt: Optional[str] = None
    checkpoint: Optional[str] = None
    seed: int = 0
    jobs: int = 1
    precision: str = "float64"

    # model
    encoder: str = "table"
    m: int = 20
    q: int = 128
    l: int = 256
    u: int = 64

    # training
    schedule: str = "staged"
    epochs: int = 120
    stage1_epochs: Optional[int] = None
    stage2_epochs: Optional[int] = None
    stage3_epochs: Optional[int] = None
    batch_size: int = 8
    lr: float = 2e-4
    weight_decay: float = 1e-4
    decay_fraction: float = 0.3
    decay_factor: float = 0.1
    query_points: int = 4096

    # preprocessing
    use_height_channel: bool = True

    # inference and evaluation
    gamma: float = 0.01
    validity_threshold: float = 1e-4
    corner_tol: float = 10.0
    angle_tol: float = 5.0
    iou_threshold: float = 0.5
    no_db: bool = False

    # synthetic corpus
    count: int = 4
    min_rooms: int = 1
    max_rooms: int = 3
    manhattan_prob: float = 0.0
    diagonal_cut_prob: float = 0.3
    noise_sigma: float = 0.01
    outlier_fraction: float = 0.0

    gradcheck_configs: int = 50

    def encoder_config(self) -> EncoderConfig:
        return EncoderConfig(mode=self.encoder, m=self.m, q=self.q, seed=self.seed,
                             input_channels=2 if self.use_height_channel else 1)

    def decoder_config(self) -> DecoderConfig:
        return DecoderConfig(q=self.q, l=self.l, u=self.u, seed=self.seed)

    def train_config(self) -> TrainConfig:
        """Shared schedule values, then any per-stage epoch count"""
        per_stage = {1: self.stage1_epochs, 2: self.stage2_epochs, 3: self.stage3_epochs}
        stages = [replace(stage,
                          epochs=stage.epochs if per_stage[stage.stage] is None else per_stage[stage.stage],
                          weight_decay=self.weight_decay,
                          decay_fraction=self.decay_fraction,
                          decay_factor=self.decay_factor)
                  for stage in schedule(self.schedule, self.epochs, self.batch_size, self.lr)]
        return TrainConfig(stages=stages, query_points=self.query_points, gamma=self.gamma, seed=self.seed,
                           jobs=self.jobs, schedule_kind=self.schedule)

    def preprocess_config(self) -> PreprocessConfig:
        return PreprocessConfig(seed=self.seed, jobs=1, use_height_channel=self.use_height_channel)

    def scene_spec(self) -> SceneSpec:
        return SceneSpec(min_rooms=self.min_rooms, max_rooms=self.max_rooms,
                         manhattan_prob=self.manhattan_prob, diagonal_cut_prob=self.diagonal_cut_prob,
                         noise_sigma=self.noise_sigma, outlier_fraction=self.outlier_fraction,
                         height_channel=self.use_height_channel)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _coerce(name: str, kind, raw: str):
    text = raw.strip()
    if get_origin(kind) is Union:
        # Optional[int]: an empty or "none" value unsets the key
        if text.lower() in ("", "none"):
            return None
        kind = next(a for a in get_args(kind) if a is not type(None))
    try:
        if kind is bool:
            if text.lower() in _TRUE:
                return True
            if text.lower() in _FALSE:
                return False
            raise ValueError(text)
        if kind is int:
            return int(text)
        if kind is float:
            return float(text)
    except ValueError:
        raise ConfigError(f"Config key '{name}' has unparsable value {raw!r}")
    return text


def load_config_file(path) -> Dict[str, Any]:
    """Parse key = value lines (# comments) into typed RunConfig values"""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Config file {path} does not exist")
    known = {f.name: f.type for f in fields(RunConfig)}
    values = {}
    for key, raw in dotenv_values(path).items():
        name = key.strip().lower().replace("-", "_")
        if name not in known:
            raise ConfigError(f"Unknown config key '{key}' in {path}")
        if raw is None:
            raise ConfigError(f"Config key '{key}' in {path} has no value")
        values[name] = _coerce(name, known[name], raw)
    return values


def build_run_config(command: str, config_path=None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """Defaults < config file < flags (None means a flag was not given)"""
    values: Dict[str, Any] = {"command": command}
    if config_path:
        values.update(load_config_file(config_path))
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return RunConfig(**values)
