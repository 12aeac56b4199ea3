"""
Distances, convex grouping and the two shape assemblies.

C(i, j) = sum of relu(D) over the lines selected by group j, so C(i, j) = 0
exactly when point i lies inside every selected half-plane.
"""
import numpy as np

from ..ndgrad import Array2, Operand, as_array, clip01, matmul, min_reduce_row, mul, relu, sub
from .config import AXIS_ONLY, check_stage
from .lines import LineBank, QuerySet


def _lines(L) -> Array2:
    return L.L if isinstance(L, LineBank) else as_array(L)


def _points(X) -> Array2:
    return X.X if isinstance(X, QuerySet) else as_array(X)


def axis_mask(l: int) -> np.ndarray:
    """3l x 1 column with the diagonal rows zeroed"""
    mask = np.ones((3 * l, 1))
    mask[2 * l:] = 0.0
    return mask


def signed_distances(X, L) -> Array2:
    """D = X L^T, unnormalized; D <= 0 is the inside half-plane"""
    return matmul(_points(X), _lines(L).T)


def effective_selection(T: Operand, stage: str) -> Array2:
    T = as_array(T)
    if check_stage(stage) == AXIS_ONLY:
        return mul(T, axis_mask(T.rows // 3))
    return T


def group_convex(D: Operand, T: Operand, stage: str) -> Array2:
    return matmul(relu(D), effective_selection(T, stage))


def assemble_min(C: Operand) -> Array2:
    """S*: 0 inside the union of primitives, positive outside"""
    return min_reduce_row(C)


def assemble_sum(C: Operand, W: Operand) -> Array2:
    """S+: clip01 of the W-weighted soft memberships; 1 is inside"""
    return clip01(matmul(clip01(sub(1.0, C)), W))
