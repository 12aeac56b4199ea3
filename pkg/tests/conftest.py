import os

import numpy as np
import pytest

from src.decoder import DecoderConfig, LineBank, RoomDecoder


def pytest_collection_modifyitems(config, items):
    if os.getenv("FLOORPLAN_RUN_SLOW") == "1":
        return
    skip = pytest.mark.skip(reason="slow; set FLOORPLAN_RUN_SLOW=1")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def box_lines(x0, y0, x1, y1):
    """Horizontal and vertical half-planes whose intersection is the box"""
    horizontal = [[0.0, -1.0, y0], [0.0, 1.0, -y1]]
    vertical = [[-1.0, 0.0, x0], [1.0, 0.0, -x1]]
    return horizontal, vertical


def diagonal_cut(px, py, nx, ny):
    """Half-plane keeping the side opposite to (nx, ny) of the line through (px, py)"""
    norm = np.hypot(nx, ny)
    a, b = nx / norm, ny / norm
    return [a, b, -(a * px + b * py)]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def small_decoder():
    return RoomDecoder(DecoderConfig(q=16, l=4, u=3, seed=7))


@pytest.fixture
def square_bank():
    """Box [0.2, 0.6] x [0.3, 0.7]; rows 0-3 axis lines, rows 4-5 diagonals containing the whole unit square"""
    h, v = box_lines(0.2, 0.3, 0.6, 0.7)
    far = diagonal_cut(0.0, 0.0, -1.0, -1.0)
    return LineBank.from_rows(h, v, [far, far])
