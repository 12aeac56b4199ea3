import numpy as np
import pytest

from src.errors import ConfigError, ShapeError
from src.ndgrad import (Adam, Array2, Parameter, Tape, absolute, add, check_gradients, clip01, concat_cols,
                        elementwise, get_dtype, grad, matmul, mean, min_reduce_row, mul, no_grad, patches,
                        precision, relu, reshape, set_precision, slice_rows, softmax_rows, square,
                        stage_learning_rate, sub, total)


def test_relu_and_clip_values():
    x = Array2([[-1.0, 0.4, 2.0]])
    np.testing.assert_allclose(relu(x).value, [[0.0, 0.4, 2.0]])
    np.testing.assert_allclose(clip01(x).value, [[0.0, 0.4, 1.0]])


def test_clip01_is_idempotent(rng):
    x = Array2(rng.normal(0.0, 2.0, size=(5, 4)))
    np.testing.assert_array_equal(clip01(clip01(x)).value, clip01(x).value)


def test_min_reduce_row_returns_column():
    out = min_reduce_row(Array2([[3.0, 1.0, 2.0], [0.0, 5.0, 0.0]]))
    assert out.shape == (2, 1)
    np.testing.assert_allclose(out.value, [[1.0], [0.0]])


def test_min_reduce_row_gradient_goes_to_first_argmin():
    a = Parameter([[2.0, 0.5, 0.5]])
    with Tape() as tape:
        out = total(min_reduce_row(a))
    g = grad(tape, out)[a]
    np.testing.assert_allclose(g, [[0.0, 1.0, 0.0]])


def test_kink_subgradients_are_zero():
    a = Parameter([[0.0, 1.0, 0.5]])
    with Tape() as tape:
        out = add(total(relu(a)), total(clip01(a)))
    g = grad(tape, out)[a]
    # relu: 0 at 0, 1 at 1 and 0.5; clip01: 0 at both bounds, 1 inside
    np.testing.assert_allclose(g, [[0.0, 1.0, 2.0]])


def test_broadcast_bias_gradient_sums_over_rows():
    x = Array2(np.ones((4, 3)))
    b = Parameter(np.zeros((1, 3)))
    with Tape() as tape:
        out = total(add(x, b))
    np.testing.assert_allclose(grad(tape, out)[b], [[4.0, 4.0, 4.0]])


def test_matmul_and_softmax_gradients_match_finite_differences(rng):
    a = Parameter(rng.normal(size=(3, 4)), name="a")
    b = Parameter(rng.normal(size=(4, 2)), name="b")

    def loss():
        return mean(square(matmul(softmax_rows(matmul(a, b)), Array2([[1.0], [-2.0]]))))

    results = check_gradients(loss, [a, b], rng, entries_per_param=6)
    assert [r.name for r in results] == ["a", "b"]
    assert all(r.passed for r in results), [(r.name, r.failures) for r in results]


def test_piecewise_ops_gradients_match_finite_differences(rng):
    a = Parameter(rng.uniform(-1.0, 2.0, size=(4, 5)), name="a")
    w = Parameter(rng.uniform(0.2, 0.8, size=(5, 1)), name="w")

    def loss():
        c = relu(sub(a, 0.3))
        return add(total(absolute(mul(min_reduce_row(c), 2.0))), mean(clip01(matmul(clip01(sub(1.0, c)), w))))

    results = check_gradients(loss, [a, w], rng)
    assert all(r.passed for r in results)


def test_reshape_and_slice_round_trip_gradient():
    a = Parameter(np.arange(6.0).reshape(2, 3))
    with Tape() as tape:
        out = total(mul(reshape(slice_rows(a, 1, 2), 3, 1), Array2([[1.0], [2.0], [3.0]])))
    np.testing.assert_allclose(grad(tape, out)[a], [[0.0, 0.0, 0.0], [1.0, 2.0, 3.0]])


def test_concat_cols_shape_check():
    with pytest.raises(ShapeError):
        concat_cols([Array2(np.ones((2, 1))), Array2(np.ones((3, 1)))])


def test_patches_reads_zero_padding():
    a = Array2([[1.0, 2.0], [3.0, 4.0]])
    out = patches(a, np.array([[0, -1], [1, 0]]))
    np.testing.assert_allclose(out.value, [[1.0, 2.0, 0.0, 0.0], [3.0, 4.0, 1.0, 2.0]])


def test_gradient_needs_scalar_output():
    a = Parameter(np.ones((2, 2)))
    with Tape() as tape:
        out = relu(a)
    with pytest.raises(ShapeError):
        tape.gradient(out, [a])


def test_no_grad_records_nothing():
    a = Parameter(np.ones((2, 2)))
    with Tape() as tape:
        with no_grad():
            relu(a)
    assert len(tape) == 0


def test_elementwise_dispatch():
    x = Array2([[-2.0, 3.0]])
    np.testing.assert_allclose(elementwise("abs", x).value, [[2.0, 3.0]])
    assert elementwise("sum", x).item() == 1.0
    with pytest.raises(ValueError):
        elementwise("tanh", x)


def test_precision_switch_and_restore():
    assert get_dtype() == np.float64
    with precision("float32"):
        assert Array2([[1.0]]).value.dtype == np.float32
    assert get_dtype() == np.float64
    with pytest.raises(ConfigError):
        set_precision("float16")


def test_parameter_assign_checks_shape():
    p = Parameter(np.zeros((2, 3)))
    with pytest.raises(ShapeError):
        p.assign(np.zeros((3, 2)))


def test_adam_minimizes_quadratic():
    p = Parameter([[3.0, -2.0]])
    optimizer = Adam([p], lr=0.1, weight_decay=0.0)
    for _ in range(300):
        with Tape() as tape:
            loss = total(square(p))
        optimizer.step(grad(tape, loss))
    assert np.abs(p.value).max() < 0.1


def test_stage_learning_rate_decays_final_thirty_percent():
    rates = [stage_learning_rate(2e-4, e, 10) for e in range(10)]
    assert rates[:7] == [2e-4] * 7
    assert rates[7:] == pytest.approx([2e-5] * 3)


def test_matmul_matches_triple_loop(rng):
    a, b = rng.normal(size=(5, 7)), rng.normal(size=(7, 3))
    expected = np.zeros((5, 3))
    for i in range(5):
        for j in range(3):
            for k in range(7):
                expected[i, j] += a[i, k] * b[k, j]
    np.testing.assert_allclose(matmul(Array2(a), Array2(b)).value, expected, rtol=0, atol=1e-12)


def test_matmul_is_bilinear(rng):
    a, a2 = rng.normal(size=(5, 7)), rng.normal(size=(5, 7))
    b, b2 = rng.normal(size=(7, 3)), rng.normal(size=(7, 3))

    def mm(x, y):
        return matmul(Array2(x), Array2(y)).value

    np.testing.assert_allclose(mm(2.5 * a, b), 2.5 * mm(a, b), atol=1e-12)
    np.testing.assert_allclose(mm(a, -0.5 * b), -0.5 * mm(a, b), atol=1e-12)
    np.testing.assert_allclose(mm(a + a2, b), mm(a, b) + mm(a2, b), atol=1e-12)
    np.testing.assert_allclose(mm(a, b + b2), mm(a, b) + mm(a, b2), atol=1e-12)
