import json
import logging
from pathlib import Path
from typing import Dict, Optional

from ..decoder import DecoderConfig, RoomDecoder
from ..encoder import EncoderConfig, RoomEncoder
from ..errors import ConfigError, FormatError
from ..ndgrad import Array2, Parameter
from ..preprocess import InputImage
from ..utils.checkpoint import load_parameters, save_parameters

logger = logging.getLogger(__name__)

MODEL_FILE = "model.json"


class FloorplanModel:
    """Room encoder (latent table or tiny encoder) feeding the room decoder"""

    def __init__(self, encoder_config: EncoderConfig, decoder_config: DecoderConfig):
        if encoder_config.q != decoder_config.q:
            raise ConfigError(f"Encoder q={encoder_config.q} differs from decoder q={decoder_config.q}")
        self.encoder_config = encoder_config
        self.decoder_config = decoder_config
        self.encoder = RoomEncoder(encoder_config)
        self.decoder = RoomDecoder(decoder_config)

    @property
    def m(self) -> int:
        return self.encoder_config.m

    def codes(self, scene_id: str, image: Optional[InputImage] = None) -> Array2:
        return self.encoder.codes(scene_id, image)

    def parameters(self) -> Dict[str, Parameter]:
        params = dict(self.encoder.parameters())
        params.update(self.decoder.params)
        return params

    def shared_parameters(self) -> Dict[str, Parameter]:
        """Everything except per-scene latent codes"""
        return {k: v for k, v in self.parameters().items() if not k.startswith("latent/")}

    def save(self, directory, metadata: Optional[dict] = None) -> Path:
        directory = Path(directory)
        save_parameters(self.parameters(), directory, metadata)
        config = {"encoder": self.encoder_config.to_dict(), "decoder": self.decoder_config.to_dict()}
        (directory / MODEL_FILE).write_text(json.dumps(config, indent=2, sort_keys=True))
        return directory

    @classmethod
    def load(cls, directory) -> "FloorplanModel":
        directory = Path(directory)
        try:
            config = json.loads((directory / MODEL_FILE).read_text())
        except FileNotFoundError:
            raise FormatError(f"{directory} is not a checkpoint: {MODEL_FILE} missing")
        model = cls(EncoderConfig(**config["encoder"]), DecoderConfig(**config["decoder"]))
        arrays, _ = load_parameters(directory)
        model.encoder.restore(arrays)
        model.decoder.restore(arrays)
        logger.info(f"Loaded checkpoint {directory} ({len(arrays)} arrays)")
        return model
