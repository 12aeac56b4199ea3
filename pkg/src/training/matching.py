"""GT padding and the Hungarian room assignment"""
import numpy as np
from scipy.optimize import linear_sum_assignment

from ..errors import ConfigError, ShapeError
from .config import PLUS, STAR


def pad_gt(S_gt: np.ndarray, m: int) -> np.ndarray:
    """Append zero rows (invalid rooms) up to m"""
    S_gt = np.asarray(S_gt, dtype=np.float64)
    if S_gt.ndim != 2:
        raise ShapeError(f"GT occupancy must be m_gt x n, got shape {S_gt.shape}")
    if S_gt.shape[0] > m:
        raise ConfigError(f"Scene has {S_gt.shape[0]} rooms but only m={m} slots")
    return np.vstack([S_gt, np.zeros((m - S_gt.shape[0], S_gt.shape[1]))])


def loss_kind_for(stage) -> str:
    if stage in (PLUS, STAR):
        return stage
    return STAR if int(stage) == 3 else PLUS


def pair_costs(S: np.ndarray, G: np.ndarray, stage) -> np.ndarray:
    """cost[i, k] = reconstruction term between predicted slot i and GT row k (both m x n)"""
    S, G = np.asarray(S, dtype=np.float64), np.asarray(G, dtype=np.float64)
    if loss_kind_for(stage) == PLUS:
        return ((S[:, None, :] - G[None, :, :]) ** 2).mean(axis=2)
    n = S.shape[1]
    return (np.maximum(S, 0.0) @ G.T + np.maximum(1.0 - S, 0.0) @ (1.0 - G).T) / n


def _assignment_cost(cost: np.ndarray) -> float:
    if cost.size == 0:
        return 0.0
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum())


def lexicographic_assignment(cost: np.ndarray, rtol: float = 1e-9) -> np.ndarray:
    """Minimum-cost permutation; among optima, slot 0 takes the lowest column, then slot 1, ..."""
    m = cost.shape[0]
    best = _assignment_cost(cost)
    tol = rtol * max(1.0, abs(best))
    free = list(range(m))
    sigma = np.empty(m, dtype=np.int64)
    fixed = 0.0
    for i in range(m):
        for c in free:
            rest_cols = [k for k in free if k != c]
            rest = _assignment_cost(cost[np.ix_(range(i + 1, m), rest_cols)])
            if fixed + cost[i, c] + rest <= best + tol:
                sigma[i] = c
                fixed += cost[i, c]
                free.remove(c)
                break
    return sigma


def match_rooms(S: np.ndarray, G: np.ndarray, stage) -> np.ndarray:
    """sigma[i] = GT row assigned to predicted slot i"""
    S, G = np.asarray(S), np.asarray(G)
    if S.shape != G.shape:
        raise ShapeError(f"Prediction {S.shape} and padded GT {G.shape} differ in shape")
    return lexicographic_assignment(pair_costs(S, G, stage))
