from dataclasses import asdict, dataclass
from typing import Tuple

from ..errors import ConfigError

MODES = ("latent-table", "tiny-encoder")
MODE_ALIASES = {"table": "latent-table", "tiny": "tiny-encoder"}


@dataclass
class EncoderConfig:
    mode: str = "latent-table"
    m: int = 20
    q: int = 128
    conv_widths: Tuple[int, ...] = (16, 32, 64, 128)
    attention_layers: int = 2
    heads: int = 4
    init_std: float = 0.02
    seed: int = 0
    input_channels: int = 2

    def __post_init__(self):
        self.mode = MODE_ALIASES.get(self.mode, self.mode)
        self.conv_widths = tuple(int(w) for w in self.conv_widths)
        self.validate()

    def validate(self):
        if self.mode not in MODES:
            raise ConfigError(f"Encoder mode must be one of {MODES}, got {self.mode!r}")
        if self.m < 1:
            raise ConfigError(f"m must be >= 1, got {self.m}")
        if self.q < 8:
            raise ConfigError(f"q must be >= 8, got {self.q}")
        if self.input_channels not in (1, 2):
            raise ConfigError(f"input_channels must be 1 (density) or 2 (density, wall height), got {self.input_channels}")
        if self.mode == "tiny-encoder":
            if self.heads < 1 or self.q % self.heads:
                raise ConfigError(f"q={self.q} is not divisible by heads={self.heads}")
            if self.q % 4:
                raise ConfigError(f"q={self.q} must be a multiple of 4 for 2-D positional encodings")
            if not self.conv_widths:
                raise ConfigError("conv_widths must name at least one layer")

    def to_dict(self) -> dict:
        data = asdict(self)
        data["conv_widths"] = list(self.conv_widths)
        return data
