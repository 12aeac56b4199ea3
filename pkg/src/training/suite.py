"""Finite-difference checks of both stage losses over random small configurations"""
import logging
from typing import List

import numpy as np

from ..decoder import FULL, DecoderConfig, QuerySet, RoomDecoder
from ..ndgrad import GradCheckResult, Parameter, check_gradients, no_grad
from .config import PLUS, STAR
from .losses import matched_target, stage_loss
from .matching import match_rooms

logger = logging.getLogger(__name__)


def _random_boxes(rng: np.random.Generator, X: QuerySet, rooms: int, m: int) -> np.ndarray:
    xy = X.xy
    G = np.zeros((m, len(xy)))
    for i in range(rooms):
        lo = rng.uniform(0.05, 0.5, size=2)
        hi = lo + rng.uniform(0.2, 0.45, size=2)
        G[i] = np.all((xy > lo) & (xy < hi), axis=1)
    return G


def run_gradient_suite(configs: int = 50,
                       seed: int = 0,
                       q: int = 32,
                       l: int = 16,
                       u: int = 8,
                       n: int = 64,
                       m: int = 3,
                       entries_per_param: int = 8) -> List[GradCheckResult]:
    """
    Each configuration draws codes, decoder parameters, T, W and GT boxes,
    fixes the assignment from one forward pass, then checks L+ and L*.
    """
    results: List[GradCheckResult] = []
    for k in range(configs):
        rng = np.random.default_rng([seed, k])
        decoder = RoomDecoder(DecoderConfig(q=q, l=l, u=u, seed=seed * 1000 + k))
        decoder.T.assign(rng.uniform(-0.2, 1.2, size=(3 * l, u)))
        decoder.W.assign(rng.uniform(0.1, 0.6, size=(u, 1)))
        codes = Parameter(rng.normal(0.0, 1.0, size=(m, q)), name="codes")
        X = QuerySet.uniform(n, rng)
        G = _random_boxes(rng, X, int(rng.integers(1, m + 1)), m)
        params = [codes] + decoder.parameters()

        for kind in (PLUS, STAR):
            with no_grad():
                out = decoder.decode(codes, X, FULL)
                S = out.S_plus if kind == PLUS else out.S_star
                target = matched_target(G, match_rooms(S.value.T, G, 3 if kind == STAR else 2))

            def loss_fn(kind=kind, target=target):
                decoded = decoder.decode(codes, X, FULL)
                S = decoded.S_plus if kind == PLUS else decoded.S_star
                return stage_loss(kind, S, target, decoder.T, decoder.W).total

            for result in check_gradients(loss_fn, params, rng, entries_per_param):
                result.name = f"config{k:02d}/L_{kind}/{result.name}"
                results.append(result)
    failed = sum(not r.passed for r in results)
    logger.info(f"Gradient suite: {len(results)} checks, {failed} failed")
    return results
