from dataclasses import asdict, dataclass

from ..errors import ConfigError

AXIS_ONLY = "axis-only"
FULL = "full"
STAGES = (AXIS_ONLY, FULL)


def check_stage(stage: str) -> str:
    if stage not in STAGES:
        raise ConfigError(f"Decoder stage must be one of {STAGES}, got {stage!r}")
    return stage


@dataclass
class DecoderConfig:
    q: int = 128
    l: int = 256
    u: int = 64
    init_std: float = 0.02
    seed: int = 0

    def __post_init__(self):
        if self.q < 8:
            raise ConfigError(f"q must be >= 8, got {self.q}")
        if self.l < 1 or self.u < 1:
            raise ConfigError(f"l and u must be positive, got l={self.l}, u={self.u}")

    def to_dict(self) -> dict:
        return asdict(self)
