"""Room codes: per-scene latent table or the tiny image encoder"""
from typing import Dict, Optional

from ..ndgrad import Array2, Parameter
from ..preprocess import InputImage
from .config import MODE_ALIASES, MODES, EncoderConfig
from .latent import LatentTable
from .tiny import TinyEncoder, conv_index, sinusoidal_2d


def encode(image: InputImage, encoder: TinyEncoder) -> Array2:
    return encoder.encode(image)


def lookup(scene_id: str, table: LatentTable) -> Parameter:
    return table.lookup(scene_id)


class RoomEncoder:
    """Single entry point that hides which encoder mode is active"""

    def __init__(self, config: EncoderConfig):
        self.config = config
        self.table: Optional[LatentTable] = None
        self.tiny: Optional[TinyEncoder] = None
        if config.mode == "latent-table":
            self.table = LatentTable(config.m, config.q, config.seed, config.init_std)
        else:
            self.tiny = TinyEncoder(config)

    def codes(self, scene_id: str, image: Optional[InputImage] = None) -> Array2:
        if self.table is not None:
            return lookup(scene_id, self.table)
        if image is None:
            raise ValueError(f"Tiny encoder needs the input image of scene '{scene_id}'")
        return encode(image, self.tiny)

    def parameters(self) -> Dict[str, Parameter]:
        if self.table is not None:
            return self.table.parameters()
        return dict(self.tiny.params)

    def restore(self, arrays: Dict[str, object]):
        if self.table is not None:
            self.table.restore(arrays)
            return
        for name, param in self.tiny.params.items():
            if name in arrays:
                param.assign(arrays[name])
