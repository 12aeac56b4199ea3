import hashlib
import logging
from typing import Dict, Iterable, List

import numpy as np

from ..errors import UnknownSceneError
from ..ndgrad import Parameter

logger = logging.getLogger(__name__)


def _scene_key(scene_id: str) -> int:
    return int(hashlib.sha256(scene_id.encode("utf-8")).hexdigest()[:8], 16)


class LatentTable:
    """
    One learnable m x q code matrix per training scene (auto-decoder mode).
    Codes are seeded from the scene id, so registration order does not matter.
    """

    def __init__(self, m: int, q: int, seed: int = 0, init_std: float = 0.02):
        self.m = m
        self.q = q
        self.seed = seed
        self.init_std = init_std
        self._codes: Dict[str, Parameter] = {}

    def __contains__(self, scene_id: str) -> bool:
        return scene_id in self._codes

    def __len__(self):
        return len(self._codes)

    @staticmethod
    def param_name(scene_id: str) -> str:
        return f"latent/{scene_id}"

    def register(self, scene_id: str) -> Parameter:
        if scene_id not in self._codes:
            rng = np.random.default_rng([self.seed, _scene_key(scene_id)])
            code = rng.normal(0.0, self.init_std, size=(self.m, self.q))
            self._codes[scene_id] = Parameter(code, name=self.param_name(scene_id))
        return self._codes[scene_id]

    def register_all(self, scene_ids: Iterable[str]) -> List[Parameter]:
        return [self.register(s) for s in scene_ids]

    def lookup(self, scene_id: str) -> Parameter:
        try:
            return self._codes[scene_id]
        except KeyError:
            raise UnknownSceneError(f"Scene '{scene_id}' has no latent code; it was not part of training")

    @property
    def scene_ids(self) -> List[str]:
        return sorted(self._codes)

    def parameters(self) -> Dict[str, Parameter]:
        return {self.param_name(s): self._codes[s] for s in self.scene_ids}

    def restore(self, arrays: Dict[str, np.ndarray]):
        prefix = "latent/"
        for name, value in arrays.items():
            if name.startswith(prefix):
                scene_id = name[len(prefix):]
                self._codes[scene_id] = Parameter(value, name=name)
        logger.debug(f"Restored {len(self._codes)} latent codes")
