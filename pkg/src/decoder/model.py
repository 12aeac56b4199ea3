import logging
from dataclasses import dataclass
from typing import Dict, List

import numpy as np

from ..ndgrad import (Array2, Parameter, concat_cols, concat_rows, no_grad, relu, reshape,
                      slice_cols, slice_rows, zeros)
from .assembly import assemble_min, assemble_sum, effective_selection, group_convex, signed_distances
from .config import FULL, DecoderConfig, check_stage
from .lines import LineBank, QuerySet

logger = logging.getLogger(__name__)

# output values per line for each bank
BANKS = (("horizontal", 2), ("vertical", 2), ("diagonal", 3))


def _xavier(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=(fan_in, fan_out))


def _spread_bias(bank: str, l: int, rng: np.random.Generator) -> np.ndarray:
    """Output bias placing the initial lines across the unit square, interleaved per line"""
    if bank == "diagonal":
        theta = rng.uniform(0.0, 2.0 * np.pi, size=l)
        a, b = np.cos(theta), np.sin(theta)
        px, py = rng.uniform(0.0, 1.0, size=(2, l))
        return np.stack([a, b, -(a * px + b * py)], axis=1).reshape(1, -1)
    sign = rng.choice([-1.0, 1.0], size=l)
    return np.stack([sign, -sign * rng.uniform(0.0, 1.0, size=l)], axis=1).reshape(1, -1)


@dataclass
class DecodedRooms:
    """Per-room decoder outputs over one query set; S_star and S_plus are n x m"""
    lines: List[LineBank]
    C: List[Array2]
    S_star: Array2
    S_plus: Array2


class RoomDecoder:
    """Three line MLPs plus the shared selection matrix T and convex weights W"""

    def __init__(self, config: DecoderConfig):
        self.config = config
        rng = np.random.default_rng([config.seed, 202])
        q, l, u = config.q, config.l, config.u
        self.params: Dict[str, Parameter] = {}
        for bank, width in BANKS:
            self._add(f"decoder/{bank}/w0", _xavier(rng, q, q))
            self._add(f"decoder/{bank}/b0", np.zeros((1, q)))
            self._add(f"decoder/{bank}/w1", _xavier(rng, q, q))
            self._add(f"decoder/{bank}/b1", np.zeros((1, q)))
            self._add(f"decoder/{bank}/w2", rng.normal(0.0, config.init_std, size=(q, l * width)))
            self._add(f"decoder/{bank}/b2", _spread_bias(bank, l, rng))
        self._add("decoder/T", rng.normal(0.0, config.init_std, size=(3 * l, u)))
        self._add("decoder/W", np.zeros((u, 1)))

    def _add(self, name: str, value: np.ndarray):
        self.params[name] = Parameter(value, name=name)

    @property
    def T(self) -> Parameter:
        return self.params["decoder/T"]

    @property
    def W(self) -> Parameter:
        return self.params["decoder/W"]

    def parameters(self) -> List[Parameter]:
        return list(self.params.values())

    def restore(self, arrays: Dict[str, np.ndarray]):
        for name, param in self.params.items():
            if name not in arrays:
                logger.warning(f"Checkpoint has no '{name}', keeping its initial value")
                continue
            param.assign(arrays[name])

    def _mlp(self, bank: str, codes: Array2) -> Array2:
        p = self.params
        h = relu(codes @ p[f"decoder/{bank}/w0"] + p[f"decoder/{bank}/b0"])
        h = relu(h @ p[f"decoder/{bank}/w1"] + p[f"decoder/{bank}/b1"])
        return h @ p[f"decoder/{bank}/w2"] + p[f"decoder/{bank}/b2"]

    def line_banks(self, codes: Array2) -> List[LineBank]:
        """One LineBank per code row; the MLPs run once over all rows"""
        l = self.config.l
        raw = {bank: self._mlp(bank, codes) for bank, _ in BANKS}
        gap = zeros(l, 1)
        banks = []
        for i in range(codes.rows):
            h = reshape(slice_rows(raw["horizontal"], i, i + 1), l, 2)
            v = reshape(slice_rows(raw["vertical"], i, i + 1), l, 2)
            d = reshape(slice_rows(raw["diagonal"], i, i + 1), l, 3)
            horizontal = concat_cols([gap, h])
            vertical = concat_cols([slice_cols(v, 0, 1), gap, slice_cols(v, 1, 2)])
            banks.append(LineBank(concat_rows([horizontal, vertical, d])))
        return banks

    def predict_lines(self, code: Array2, stage: str = FULL) -> LineBank:
        # the stage masks T in group_convex, never the lines themselves
        check_stage(stage)
        return self.line_banks(code)[0]

    def decode(self, codes: Array2, X: QuerySet, stage: str = FULL) -> DecodedRooms:
        T = effective_selection(self.T, stage)
        lines = self.line_banks(codes)
        memberships, stars, pluses = [], [], []
        for bank in lines:
            C = group_convex(signed_distances(X, bank), T, FULL)
            memberships.append(C)
            stars.append(assemble_min(C))
            pluses.append(assemble_sum(C, self.W))
        return DecodedRooms(lines, memberships, concat_cols(stars), concat_cols(pluses))


def predict_lines(code: Array2, decoder: RoomDecoder, stage: str = FULL) -> LineBank:
    return decoder.predict_lines(code, stage)


def decode_room(codes: Array2, decoder: RoomDecoder, X: QuerySet, stage: str = FULL) -> DecodedRooms:
    return decoder.decode(codes, X, stage)


def occupancy_grid(L, T, k: int = 128, stage: str = FULL) -> np.ndarray:
    """S* of one room on the k x k cell-center grid, indexed [row=y, col=x]"""
    with no_grad():
        C = group_convex(signed_distances(QuerySet.grid(k), L), T, stage)
        return assemble_min(C).value.reshape(k, k).copy()
