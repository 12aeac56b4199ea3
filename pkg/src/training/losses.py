"""
Reconstruction and regularization losses. S is n x m (one column per room
slot) and target holds the matched GT occupancy in the same layout, 1 inside.
"""
from dataclasses import dataclass
from typing import Dict

import numpy as np

from ..ndgrad import (Array2, Operand, absolute, add, as_array, constant, mean, mul, relu, square,
                      sub, total)
from .config import PLUS


@dataclass
class LossTerms:
    rec: Array2
    reg_t: Array2
    reg_w: Array2

    @property
    def total(self) -> Array2:
        return add(add(self.rec, self.reg_t), self.reg_w)

    def values(self) -> Dict[str, float]:
        return {"L_rec": self.rec.item(), "L_T": self.reg_t.item(), "L_W": self.reg_w.item(),
                "total": self.total.item()}


def matched_target(G: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """n x m target whose column i is GT row sigma[i]"""
    return np.asarray(G, dtype=np.float64)[np.asarray(sigma)].T


def loss_plus(S_plus: Operand, target: np.ndarray, T: Operand, W: Operand) -> LossTerms:
    rec = mean(square(sub(S_plus, target)))
    T = as_array(T)
    reg_t = add(total(relu(mul(T, -1.0))), total(relu(sub(T, 1.0))))
    reg_w = total(absolute(sub(W, 1.0)))
    return LossTerms(rec, reg_t, reg_w)


def loss_star(S_star: Operand, target: np.ndarray, T: Operand, gamma: float = 0.01) -> LossTerms:
    inside = mean(mul(relu(S_star), target))
    outside = mean(mul(relu(sub(1.0, S_star)), 1.0 - target))
    T = as_array(T)
    below = (T.value < gamma).astype(np.float64)
    reg_t = add(total(mul(absolute(T), below)), total(mul(absolute(sub(T, 1.0)), 1.0 - below)))
    return LossTerms(add(inside, outside), reg_t, constant(0.0))


def stage_loss(kind: str, S: Operand, target: np.ndarray, T: Operand, W: Operand, gamma: float = 0.01) -> LossTerms:
    if kind == PLUS:
        return loss_plus(S, target, T, W)
    return loss_star(S, target, T, gamma)
