from typing import Dict, Mapping, Sequence

import numpy as np

from .array import Parameter


class Adam:
    """Adam with decoupled weight decay; parameters without a gradient are left untouched"""

    def __init__(self,
                 params: Sequence[Parameter],
                 lr: float = 2e-4,
                 betas=(0.9, 0.999),
                 eps: float = 1e-8,
                 weight_decay: float = 1e-4):
        self.params = list(params)
        self.lr = lr
        self.beta1, self.beta2 = betas
        self.eps = eps
        self.weight_decay = weight_decay
        self._m: Dict[int, np.ndarray] = {}
        self._v: Dict[int, np.ndarray] = {}
        self._t: Dict[int, int] = {}

    def add_params(self, params: Sequence[Parameter]):
        known = {id(p) for p in self.params}
        self.params.extend(p for p in params if id(p) not in known)

    def step(self, grads: Mapping[Parameter, np.ndarray]):
        for p in self.params:
            g = grads.get(p)
            if g is None:
                continue
            key = id(p)
            t = self._t.get(key, 0) + 1
            m = self.beta1 * self._m.get(key, 0.0) + (1.0 - self.beta1) * g
            v = self.beta2 * self._v.get(key, 0.0) + (1.0 - self.beta2) * g * g
            self._t[key], self._m[key], self._v[key] = t, m, v

            m_hat = m / (1.0 - self.beta1 ** t)
            v_hat = v / (1.0 - self.beta2 ** t)
            decayed = p.value * (1.0 - self.lr * self.weight_decay)
            p.assign(decayed - self.lr * m_hat / (np.sqrt(v_hat) + self.eps))


def stage_learning_rate(base_lr: float, epoch: int, epochs: int, decay_fraction: float = 0.3, factor: float = 0.1) -> float:
    """Constant rate, multiplied by ``factor`` for the final ``decay_fraction`` of the epochs"""
    decay_start = int(round(epochs * (1.0 - decay_fraction)))
    return base_lr * factor if epoch >= decay_start else base_lr
