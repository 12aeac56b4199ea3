import numpy as np
import pytest
import shapely
from shapely.geometry import Polygon
from shapely.ops import unary_union

from src.decoder import (AXIS_ONLY, FULL, DecoderConfig, LineBank, QuerySet, RoomDecoder, assemble_min,
                         assemble_sum, axis_mask, decode_room, effective_selection, group_convex,
                         occupancy_grid, predict_lines, signed_distances)
from src.errors import ConfigError, ShapeError
from src.ndgrad import Array2
from src.vectorize import halfplane_intersect

from .conftest import box_lines, diagonal_cut

FAR = diagonal_cut(0.0, 0.0, -1.0, -1.0)


def test_signed_distance_is_unnormalized_dot_product():
    X = QuerySet.from_xy([[0.5, 0.5]])
    L = Array2([[1.0, 0.0, -0.6], [0.0, 2.0, -0.6]])
    np.testing.assert_allclose(signed_distances(X, L).value, [[-0.1, 0.4]])


def test_group_convex_is_zero_inside_and_positive_outside(square_bank):
    X = QuerySet.from_xy([[0.4, 0.5], [0.9, 0.5]])
    T = np.array([[1.0], [1.0], [1.0], [1.0], [0.0], [0.0]])
    C = group_convex(signed_distances(X, square_bank), T, FULL).value
    assert C[0, 0] == 0.0
    assert C[1, 0] == pytest.approx(0.3)


def test_assemble_min_and_sum_examples():
    C = Array2([[0.0, 0.0], [1.5, 2.0]])
    W = Array2([[1.0], [1.0]])
    np.testing.assert_allclose(assemble_min(C).value, [[0.0], [1.5]])
    np.testing.assert_allclose(assemble_sum(C, W).value, [[1.0], [0.0]])


def test_weighted_sum_can_misclassify_outside_point():
    C = Array2([[0.5, 0.5]])
    W = Array2([[1.0], [1.0]])
    assert assemble_min(C).item() > 0.0
    assert assemble_sum(C, W).item() == 1.0


def test_binary_selection_makes_assemblies_agree(rng, square_bank):
    X = QuerySet.uniform(200, rng)
    T = np.array([[1.0], [1.0], [1.0], [1.0], [0.0], [0.0]])
    C = group_convex(signed_distances(X, square_bank), T, FULL)
    star = assemble_min(C).value[:, 0]
    plus = assemble_sum(C, np.ones((1, 1))).value[:, 0]
    np.testing.assert_array_equal(star == 0.0, plus == 1.0)


def test_axis_only_stage_masks_diagonal_rows():
    l = 2
    np.testing.assert_array_equal(axis_mask(l)[:, 0], [1, 1, 1, 1, 0, 0])
    cut = diagonal_cut(0.5, 0.5, 1.0, 1.0)
    bank = LineBank.from_rows([[0.0, -1.0, -1.0], [0.0, -1.0, -1.0]],
                              [[-1.0, 0.0, -1.0], [-1.0, 0.0, -1.0]], [cut, FAR])
    T = np.array([[0.0], [0.0], [0.0], [0.0], [1.0], [0.0]])
    X = QuerySet.from_xy([[0.9, 0.9]])
    D = signed_distances(X, bank)
    assert group_convex(D, T, FULL).item() > 0.0
    assert group_convex(D, T, AXIS_ONLY).item() == 0.0
    np.testing.assert_array_equal(effective_selection(T, AXIS_ONLY).value[:, 0], [0, 0, 0, 0, 0, 0])


def test_unknown_stage_is_rejected():
    with pytest.raises(ConfigError):
        effective_selection(np.ones((3, 1)), "diagonal-only")


def test_line_bank_structure_is_checked():
    with pytest.raises(ShapeError):
        LineBank.from_rows([[1.0, 1.0, 0.0]], [[1.0, 0.0, 0.0]], [FAR])
    with pytest.raises(ShapeError):
        LineBank(Array2(np.ones((4, 3))))
    with pytest.raises(ShapeError):
        QuerySet(Array2([[0.5, 0.5, 0.0]]))


def test_query_grid_is_row_major_along_y():
    xy = QuerySet.grid(2).xy
    np.testing.assert_allclose(xy, [[0.25, 0.25], [0.75, 0.25], [0.25, 0.75], [0.75, 0.75]])


def _two_box_bank(a, b):
    ha, va = box_lines(*a)
    hb, vb = box_lines(*b)
    bank = LineBank.from_rows(ha + hb, va + vb, [FAR] * 4)
    T = np.zeros((12, 2))
    T[[0, 1, 4, 5], 0] = 1.0
    T[[2, 3, 6, 7], 1] = 1.0
    return bank, T


def _oracle_cases():
    cases = []
    for x0, y0, x1, y1 in [(0.1, 0.1, 0.9, 0.9), (0.2, 0.3, 0.6, 0.7), (0.05, 0.5, 0.45, 0.95),
                           (0.3, 0.3, 0.7, 0.7), (0.15, 0.05, 0.35, 0.95), (0.5, 0.2, 0.95, 0.45),
                           (0.25, 0.55, 0.75, 0.85), (0.02, 0.02, 0.98, 0.98)]:
        h, v = box_lines(x0, y0, x1, y1)
        cases.append((LineBank.from_rows(h, v, [FAR, FAR]), np.array([[1.0]] * 4 + [[0.0]] * 2)))
    # 45 degree cut off each corner in turn
    h, v = box_lines(0.1, 0.1, 0.8, 0.8)
    cases.append((LineBank.from_rows(h, v, [diagonal_cut(0.8, 0.6, 1.0, 1.0), FAR]), np.ones((6, 1))))
    h, v = box_lines(0.1, 0.1, 0.9, 0.9)
    corners = [diagonal_cut(0.9, 0.6, 1.0, 1.0), diagonal_cut(0.1, 0.4, -1.0, -1.0),
               diagonal_cut(0.1, 0.6, -1.0, 1.0), diagonal_cut(0.9, 0.4, 1.0, -1.0)]
    for cut in corners:
        cases.append((LineBank.from_rows(h, v, [cut, FAR]), np.ones((6, 1))))
    # octagon: all four cuts at once
    cases.append((LineBank.from_rows(h + h, v + v, corners), np.ones((12, 1))))
    # diamond selected from the diagonal rows alone
    diamond = [diagonal_cut(0.85, 0.5, 1.0, 1.0), diagonal_cut(0.15, 0.5, -1.0, -1.0),
               diagonal_cut(0.5, 0.85, -1.0, 1.0), diagonal_cut(0.5, 0.15, 1.0, -1.0)]
    T = np.zeros((12, 1))
    T[8:] = 1.0
    cases.append((LineBank.from_rows([[0.0, -1.0, -1.0]] * 4, [[-1.0, 0.0, -1.0]] * 4, diamond), T))
    # triangle from two axis lines and a diagonal
    cases.append((LineBank.from_rows([[0.0, -1.0, 0.2], [0.0, -1.0, 0.2]],
                                     [[-1.0, 0.0, 0.2], [-1.0, 0.0, 0.2]],
                                     [diagonal_cut(0.8, 0.2, 1.0, 1.0), FAR]), np.ones((6, 1))))
    # L shape as two boxes, then two disjoint boxes
    cases.append(_two_box_bank((0.1, 0.1, 0.9, 0.4), (0.1, 0.1, 0.4, 0.9)))
    cases.append(_two_box_bank((0.1, 0.1, 0.4, 0.4), (0.6, 0.5, 0.9, 0.9)))
    # box overlapping a triangle
    hb, vb = box_lines(0.1, 0.1, 0.6, 0.4)
    bank = LineBank.from_rows(hb + [[0.0, -1.0, 0.1]], vb + [[-1.0, 0.0, 0.5]],
                              [diagonal_cut(0.9, 0.1, 1.0, 1.0), FAR, FAR])
    T = np.zeros((9, 2))
    T[[0, 1, 3, 4], 0] = 1.0
    T[[2, 5, 6], 1] = 1.0
    cases.append((bank, T))
    return cases


@pytest.mark.parametrize("bank,T", _oracle_cases())
def test_star_zero_set_matches_polygon_clipping(bank, T):
    k = 128
    grid = occupancy_grid(bank.L, T, k)
    lines = bank.L.value
    parts = [halfplane_intersect(lines[T[:, j] > 0]) for j in range(T.shape[1])]
    region = unary_union([p.to_shapely() for p in parts if p is not None])
    xy = QuerySet.grid(k).xy
    inside = shapely.contains_xy(region, xy[:, 0], xy[:, 1]).reshape(k, k)
    band = shapely.distance(region.boundary, shapely.points(xy)).reshape(k, k) <= 1.0 / k
    interior = ~band
    np.testing.assert_array_equal((grid <= 0.0)[interior], inside[interior])


def test_decoder_shapes_and_axis_structure(small_decoder, rng):
    codes = Array2(rng.normal(size=(3, 16)))
    X = QuerySet.uniform(50, rng)
    out = decode_room(codes, small_decoder, X)
    assert out.S_star.shape == (50, 3)
    assert out.S_plus.shape == (50, 3)
    assert len(out.lines) == 3 and len(out.C) == 3
    assert out.C[0].shape == (50, 3)
    bank = out.lines[1]
    assert bank.l == 4
    assert np.all(bank.horizontal[:, 0] == 0.0)
    assert np.all(bank.vertical[:, 1] == 0.0)
    assert np.all((out.S_plus.value >= 0.0) & (out.S_plus.value <= 1.0))


def test_predict_lines_matches_first_decoded_bank(small_decoder, rng):
    codes = Array2(rng.normal(size=(2, 16)))
    single = predict_lines(Array2(codes.value[:1]), small_decoder, AXIS_ONLY)
    np.testing.assert_allclose(single.L.value, small_decoder.line_banks(codes)[0].L.value)


def test_decoder_initialization_is_seeded():
    a = RoomDecoder(DecoderConfig(q=16, l=4, u=3, seed=3))
    b = RoomDecoder(DecoderConfig(q=16, l=4, u=3, seed=3))
    assert a.params.keys() == b.params.keys()
    for name in a.params:
        np.testing.assert_array_equal(a.params[name].value, b.params[name].value)
    assert a.T.shape == (12, 3)
    assert a.W.shape == (3, 1)


def test_decoder_config_validation():
    with pytest.raises(ConfigError):
        DecoderConfig(q=4)
    with pytest.raises(ConfigError):
        DecoderConfig(l=0)
