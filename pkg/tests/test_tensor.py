"""
Tests for the tensor core: operators, the gradient tape and the finite-difference oracle
"""

import numpy as np
import pytest

from mapsam.errors import NumericError, ShapeError, TapeError
from mapsam.tensor import (
    Tensor,
    bilinear_matrix,
    conv1x1,
    gelu,
    get_tape,
    interpolate_bilinear,
    layernorm,
    matmul,
    no_grad,
    sigmoid,
    softmax,
)
from mapsam.tensor.gradcheck import gradient_check, numerical_gradient, relative_error

TOLERANCE = 1e-4


def _leaf(rng, *shape):
    return Tensor(rng.normal(size=shape), requires_grad=True)


class TestMatmul:
    def test_identity(self, rng):
        a = rng.normal(size=(3, 4))
        out = matmul(Tensor(a), Tensor(np.eye(4)))
        np.testing.assert_array_equal(out.data, a)

    def test_orthogonal(self, rng):
        q, _ = np.linalg.qr(rng.normal(size=(5, 5)))
        out = matmul(Tensor(q.T), Tensor(q))
        np.testing.assert_allclose(out.data, np.eye(5), atol=1e-12)

    def test_shape_error_names_both_shapes(self):
        with pytest.raises(ShapeError) as excinfo:
            matmul(Tensor(np.zeros((2, 3))), Tensor(np.zeros((4, 5))))
        assert "(2, 3)" in str(excinfo.value)
        assert "(4, 5)" in str(excinfo.value)

    def test_batched_gradients(self, rng):
        a, b = _leaf(rng, 2, 3, 4), _leaf(rng, 2, 4, 2)
        w = rng.normal(size=(2, 3, 2))
        assert gradient_check(lambda: (matmul(a, b) * w).sum(), [a, b]) < TOLERANCE


class TestSoftmax:
    def test_uniform_pair(self):
        out = softmax(Tensor([[0.0, 0.0]]))
        np.testing.assert_allclose(out.data, [[0.5, 0.5]])

    def test_negative_infinity_maps_to_zero(self):
        out = softmax(Tensor([[0.0, -np.inf]]))
        np.testing.assert_array_equal(out.data, [[1.0, 0.0]])

    def test_matches_closed_form(self, rng):
        x = rng.normal(size=(4, 6))
        e = np.exp(x - x.max(axis=-1, keepdims=True))
        np.testing.assert_allclose(softmax(Tensor(x)).data, e / e.sum(axis=-1, keepdims=True), atol=1e-12)

    def test_fully_masked_row_is_uniform_with_zero_gradient(self):
        x = Tensor([[-np.inf, -np.inf, -np.inf], [1.0, 2.0, 3.0]], requires_grad=True)
        out = softmax(x)
        np.testing.assert_allclose(out.data[0], np.full(3, 1.0 / 3.0))
        (out * Tensor([[1.0, 2.0, 3.0], [1.0, 2.0, 3.0]])).sum().backward()
        np.testing.assert_array_equal(x.grad[0], np.zeros(3))
        assert np.all(np.isfinite(x.grad))

    def test_nan_input_raises(self):
        with pytest.raises(NumericError):
            softmax(Tensor([[0.0, np.nan]]))

    def test_gradients(self, rng):
        x = _leaf(rng, 3, 5)
        w = rng.normal(size=(3, 5))
        assert gradient_check(lambda: (softmax(x) * w).sum(), [x]) < TOLERANCE


class TestLayernorm:
    def test_constant_vector_maps_to_zero(self):
        out = layernorm(Tensor([[3.0, 3.0, 3.0, 3.0]]), Tensor(np.ones(4)), Tensor(np.zeros(4)))
        np.testing.assert_array_equal(out.data, np.zeros((1, 4)))

    def test_symmetric_pair(self):
        out = layernorm(Tensor([[1.0, -1.0]]), Tensor(np.ones(2)), Tensor(np.zeros(2)), eps=1e-12)
        np.testing.assert_allclose(out.data, [[1.0, -1.0]], atol=1e-9)

    def test_gain_shape_mismatch(self):
        with pytest.raises(ShapeError):
            layernorm(Tensor(np.zeros((2, 3))), Tensor(np.ones(4)), Tensor(np.zeros(4)))

    def test_gradients(self, rng):
        x, gain, bias = _leaf(rng, 3, 6), _leaf(rng, 6), _leaf(rng, 6)
        w = rng.normal(size=(3, 6))
        assert gradient_check(lambda: (layernorm(x, gain, bias) * w).sum(), [x, gain, bias]) < TOLERANCE


class TestConv1x1:
    def test_identity_weight(self, rng):
        x = rng.normal(size=(3, 4, 5))
        np.testing.assert_array_equal(conv1x1(Tensor(x), Tensor(np.eye(5))).data, x)

    def test_single_pixel_is_a_matrix_product(self, rng):
        x, w, b = rng.normal(size=(1, 1, 4)), rng.normal(size=(4, 3)), rng.normal(size=3)
        out = conv1x1(Tensor(x), Tensor(w), Tensor(b))
        np.testing.assert_allclose(out.data[0, 0], x[0, 0] @ w + b, atol=1e-12)

    def test_equals_reshape_matmul(self, rng):
        x, w, b = rng.normal(size=(4, 3, 6)), rng.normal(size=(6, 2)), rng.normal(size=2)
        expected = (x.reshape(12, 6) @ w + b).reshape(4, 3, 2)
        np.testing.assert_array_equal(conv1x1(Tensor(x), Tensor(w), Tensor(b)).data, expected)

    def test_channel_mismatch(self):
        with pytest.raises(ShapeError):
            conv1x1(Tensor(np.zeros((2, 2, 3))), Tensor(np.zeros((4, 1))))

    def test_gradients(self, rng):
        x, w, b = _leaf(rng, 2, 3, 4), _leaf(rng, 4, 2), _leaf(rng, 2)
        g = rng.normal(size=(2, 3, 2))
        assert gradient_check(lambda: (conv1x1(x, w, b) * g).sum(), [x, w, b]) < TOLERANCE


class TestInterpolate:
    def test_matrix_rows_sum_to_one(self):
        m = bilinear_matrix(4, 16)
        np.testing.assert_allclose(m.sum(axis=1), np.ones(16), atol=1e-12)

    def test_same_size_is_identity(self, rng):
        x = rng.normal(size=(5, 5, 2))
        np.testing.assert_allclose(interpolate_bilinear(Tensor(x), 5, 5).data, x, atol=1e-12)

    def test_constant_grid_stays_constant(self):
        x = np.full((4, 4, 1), 2.5)
        np.testing.assert_allclose(interpolate_bilinear(Tensor(x), 16, 16).data, np.full((16, 16, 1), 2.5), atol=1e-12)

    def test_zero_target_size(self):
        with pytest.raises(ShapeError):
            interpolate_bilinear(Tensor(np.zeros((2, 2, 1))), 0, 4)

    def test_gradients(self, rng):
        x = _leaf(rng, 3, 3, 2)
        w = rng.normal(size=(7, 5, 2))
        assert gradient_check(lambda: (interpolate_bilinear(x, 7, 5) * w).sum(), [x]) < TOLERANCE


class TestActivations:
    def test_sigmoid_at_zero(self):
        assert sigmoid(Tensor([0.0])).data[0] == 0.5

    def test_gelu_and_sigmoid_gradients(self, rng):
        x = _leaf(rng, 4, 3)
        w = rng.normal(size=(4, 3))
        assert gradient_check(lambda: (gelu(x) * w).sum(), [x]) < TOLERANCE
        assert gradient_check(lambda: (sigmoid(x) * w).sum(), [x]) < TOLERANCE


class TestBackward:
    def test_non_scalar_loss(self, rng):
        x = _leaf(rng, 3)
        with pytest.raises(TapeError):
            (x * 2.0).backward()
        get_tape().clear()

    def test_empty_tape(self):
        get_tape().clear()
        with pytest.raises(TapeError):
            Tensor([1.0]).sum().backward()

    def test_tape_cleared_after_backward(self, rng):
        x = _leaf(rng, 3)
        (x * x).sum().backward()
        assert len(get_tape()) == 0

    def test_leaf_gradients_accumulate(self):
        x = Tensor([1.0, 2.0], requires_grad=True)
        (x * 3.0).sum().backward()
        (x * 3.0).sum().backward()
        np.testing.assert_array_equal(x.grad, [6.0, 6.0])

    def test_reused_tensor_sums_paths(self):
        x = Tensor([2.0], requires_grad=True)
        (x * x + x).sum().backward()
        np.testing.assert_array_equal(x.grad, [5.0])

    def test_no_grad_records_nothing(self, rng):
        get_tape().clear()
        x = _leaf(rng, 3)
        with no_grad():
            y = (x * x).sum()
        assert len(get_tape()) == 0
        assert not y.requires_grad

    def test_ndarray_on_the_left(self):
        x = Tensor([1.0, 2.0], requires_grad=True)
        y = np.array([3.0, 4.0]) * x
        assert isinstance(y, Tensor)
        y.sum().backward()
        np.testing.assert_array_equal(x.grad, [3.0, 4.0])


class TestGradientOracle:
    def test_small_gradients_are_measured_relatively(self):
        assert relative_error(0.0, 5e-4) == 1.0
        assert relative_error(1.0005e-3, 1e-3) < 1e-3
        assert relative_error(0.0, 1e-12) < 1e-3

    def test_tensor_scale_bounds_the_error(self):
        assert relative_error(0.0, 1e-6, scale=1.0) == 1e-6
        assert relative_error(2e-3, 1e-3, scale=1e-3) == 0.5

    def test_extrapolation_cancels_the_step_error(self):
        x = Tensor([1.0], requires_grad=True)
        cube = lambda: (x * x * x).sum()
        plain = numerical_gradient(cube, x, (0,), h=0.1)
        extrapolated = numerical_gradient(cube, x, (0,), h=0.1, extrapolate=True)
        assert abs(plain - 3.01) < 1e-12
        assert abs(extrapolated - 3.0) < 1e-12
        assert x.data[0] == 1.0

    def test_wrong_backward_is_caught(self, rng):
        x = _leaf(rng, 4)
        w = rng.normal(size=4)
        assert gradient_check(lambda: (x * x * w).sum(), [x]) < TOLERANCE
        halved = lambda: (x * x * w * 0.5).sum() + (Tensor(x.data) * x.data * w * 0.5).sum()
        assert gradient_check(halved, [x]) > 0.1
