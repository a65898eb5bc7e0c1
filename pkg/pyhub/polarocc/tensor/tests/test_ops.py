import math

import numpy as np
import pytest

from pyhub.polarocc.core.exceptions import ConfigError, DimensionError, NumericError
from pyhub.polarocc.tensor import (
    DualArray,
    avg_pool,
    avg_pool_backward,
    compose_kernels,
    conv3d,
    conv3d_backward,
    delta_kernel,
    finite_diff_grad,
    matmul,
    matmul_backward,
    relative_error,
    relu,
    relu_backward,
    sigmoid,
    softmax,
    softmax_backward,
)

ZWZ = ("zero", "wrap", "zero")
WRAP_ALL = ("wrap", "wrap", "wrap")


def naive_conv3d(x, kernel, padding):
    R, A, Z, cin = x.shape
    kr, ka, kz, _, cout = kernel.shape
    extents = (R, A, Z)
    halo = (kr // 2, ka // 2, kz // 2)
    out = np.zeros((R, A, Z, cout))
    for r in range(R):
        for a in range(A):
            for z in range(Z):
                for dr in range(kr):
                    for da in range(ka):
                        for dz in range(kz):
                            src = []
                            for axis, (i, d) in enumerate(zip((r, a, z), (dr, da, dz))):
                                j = i + d - halo[axis]
                                if padding[axis] == "wrap":
                                    j %= extents[axis]
                                elif not 0 <= j < extents[axis]:
                                    j = None
                                src.append(j)
                            if None in src:
                                continue
                            for ci in range(cin):
                                for co in range(cout):
                                    out[r, a, z, co] += x[src[0], src[1], src[2], ci] * kernel[dr, da, dz, ci, co]
    return out


class TestMatmul:
    def test_identity(self):
        b = np.array([[1.0, 2.0], [3.0, 4.0]])
        np.testing.assert_array_equal(matmul(np.eye(2), b), b)

    def test_hand_product(self):
        assert matmul(np.array([[1.0, 2.0]]), np.array([[3.0], [4.0]])).tolist() == [[11.0]]

    def test_random_vs_triple_loop(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            a, b = rng.normal(size=(3, 4)), rng.normal(size=(4, 2))
            expected = np.zeros((3, 2))
            for i in range(3):
                for j in range(2):
                    for k in range(4):
                        expected[i, j] += a[i, k] * b[k, j]
            np.testing.assert_allclose(matmul(a, b), expected, rtol=0, atol=1e-12)

    def test_shape_mismatch_names_both_shapes(self):
        with pytest.raises(DimensionError) as exc_info:
            matmul(np.ones((2, 3)), np.ones((2, 3)))
        assert "(2, 3)" in str(exc_info.value)
        assert exc_info.value.left == (2, 3)

    def test_backward_vs_finite_differences(self):
        rng = np.random.default_rng(1)
        a, b, g = rng.uniform(-1, 1, (3, 4)), rng.uniform(-1, 1, (4, 2)), rng.uniform(-1, 1, (3, 2))
        da, db = matmul_backward(a, b, g)
        assert relative_error(da, finite_diff_grad(lambda t: np.sum(matmul(t, b) * g), a)) <= 1e-4
        assert relative_error(db, finite_diff_grad(lambda t: np.sum(matmul(a, t) * g), b)) <= 1e-4


class TestSoftmax:
    @pytest.mark.parametrize(
        "x,expected",
        [
            ([0.0, 0.0, 0.0], [1 / 3, 1 / 3, 1 / 3]),
            ([1000.0, 0.0], [1.0, 0.0]),
            ([math.log(1), math.log(2), math.log(3)], [1 / 6, 2 / 6, 3 / 6]),
        ],
    )
    def test_closed_forms(self, x, expected):
        np.testing.assert_allclose(softmax(np.array(x)), expected, rtol=0, atol=1e-12)

    def test_rows_sum_to_one_for_large_inputs(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            y = softmax(rng.uniform(-1e3, 1e3, (4, 7)))
            assert np.all(y >= 0)
            np.testing.assert_allclose(y.sum(axis=-1), 1.0, rtol=0, atol=1e-12)

    def test_nan_raises(self):
        with pytest.raises(NumericError):
            softmax(np.array([0.0, np.nan]))

    def test_masked_entries_get_zero_weight(self):
        y = softmax(np.array([0.0, -np.inf, 0.0]))
        np.testing.assert_array_equal(y, [0.5, 0.0, 0.5])

    def test_backward_matches_finite_differences(self):
        rng = np.random.default_rng(3)
        x, c = rng.uniform(-1, 1, (2, 5)), rng.uniform(-1, 1, (2, 5))
        analytic = softmax_backward(softmax(x), c)
        numeric = finite_diff_grad(lambda t: np.sum(softmax(t) * c), x)
        np.testing.assert_allclose(analytic, numeric, rtol=0, atol=1e-6)


class TestRelu:
    def test_values(self):
        assert relu(np.array([-1.0, 0.0, 2.0])).tolist() == [0.0, 0.0, 2.0]
        assert not relu(-np.ones(5)).any()

    @pytest.mark.parametrize("x,expected", [(3.0, 5.0), (-3.0, 0.0), (0.0, 0.0)])
    def test_gate(self, x, expected):
        assert relu_backward(np.array([x]), np.array([5.0]))[0] == expected


class TestConv3d:
    def test_delta_kernel_is_identity(self):
        x = np.random.default_rng(4).normal(size=(4, 5, 3, 2))
        np.testing.assert_array_equal(conv3d(x, delta_kernel((3, 3, 3), 2), ZWZ), x)

    def test_unit_kernel_scales(self):
        x = np.random.default_rng(5).normal(size=(3, 4, 2, 1))
        np.testing.assert_array_equal(conv3d(x, np.full((1, 1, 1, 1, 1), 2.0)), 2 * x)

    @pytest.mark.parametrize("padding", [ZWZ, WRAP_ALL, ("zero", "zero", "zero")])
    def test_random_vs_naive_oracle(self, padding):
        rng = np.random.default_rng(6)
        x, k = rng.normal(size=(4, 5, 3, 2)), rng.normal(size=(3, 3, 3, 2, 1))
        np.testing.assert_allclose(conv3d(x, k, padding), naive_conv3d(x, k, padding), rtol=0, atol=1e-10)

    def test_many_small_instances(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            x, k = rng.normal(size=(2, 3, 2, 2)), rng.normal(size=(3, 3, 1, 2, 2))
            np.testing.assert_allclose(conv3d(x, k, ZWZ), naive_conv3d(x, k, ZWZ), rtol=0, atol=1e-10)

    def test_linearity(self):
        rng = np.random.default_rng(8)
        x, y, k = rng.normal(size=(3, 4, 2, 2)), rng.normal(size=(3, 4, 2, 2)), rng.normal(size=(3, 3, 3, 2, 3))
        lhs = conv3d(1.5 * x - 0.25 * y, k)
        rhs = 1.5 * conv3d(x, k) - 0.25 * conv3d(y, k)
        np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-12)

    def test_even_kernel_rejected(self):
        with pytest.raises(ConfigError):
            conv3d(np.ones((2, 2, 2, 1)), np.ones((2, 3, 3, 1, 1)))

    def test_unknown_padding_rejected(self):
        with pytest.raises(ConfigError):
            conv3d(np.ones((2, 2, 2, 1)), np.ones((1, 1, 1, 1, 1)), ("zero", "mirror", "zero"))

    def test_channel_mismatch(self):
        with pytest.raises(DimensionError):
            conv3d(np.ones((2, 2, 2, 2)), np.ones((1, 1, 1, 3, 1)))

    def test_azimuth_wrap_equivariance(self):
        rng = np.random.default_rng(9)
        x, k = rng.normal(size=(3, 6, 2, 2)), rng.normal(size=(3, 3, 3, 2, 2))
        rolled = conv3d(np.roll(x, 2, axis=1), k, ZWZ)
        np.testing.assert_allclose(rolled, np.roll(conv3d(x, k, ZWZ), 2, axis=1), rtol=0, atol=1e-12)

    @pytest.mark.parametrize("padding", [ZWZ, WRAP_ALL])
    def test_backward_vs_finite_differences(self, padding):
        rng = np.random.default_rng(10)
        x = rng.uniform(-1, 1, (3, 4, 2, 2))
        k = rng.uniform(-1, 1, (3, 3, 3, 2, 2))
        g = rng.uniform(-1, 1, (3, 4, 2, 2))
        dx, dk = conv3d_backward(x, k, g, padding)
        assert relative_error(dx, finite_diff_grad(lambda t: np.sum(conv3d(t, k, padding) * g), x)) <= 1e-4
        assert relative_error(dk, finite_diff_grad(lambda t: np.sum(conv3d(x, t, padding) * g), k)) <= 1e-4

    def test_zero_upstream_gives_zero_grads(self):
        x, k = np.ones((2, 3, 2, 1)), np.ones((3, 3, 3, 1, 1))
        dx, dk = conv3d_backward(x, k, np.zeros((2, 3, 2, 1)))
        assert not dx.any() and not dk.any()


class TestComposeKernels:
    def test_chain_equals_composed_kernel_under_wrap(self):
        rng = np.random.default_rng(11)
        x = rng.normal(size=(4, 5, 3, 2))
        k1, k2 = rng.normal(size=(1, 3, 3, 2, 2)), rng.normal(size=(3, 1, 3, 2, 2))
        chained = conv3d(conv3d(x, k1, WRAP_ALL), k2, WRAP_ALL)
        composed = compose_kernels(k1, k2)
        assert composed.shape == (3, 3, 5, 2, 2)
        np.testing.assert_allclose(conv3d(x, composed, WRAP_ALL), chained, rtol=0, atol=1e-10)

    def test_chain_equals_composed_kernel_in_interior(self):
        rng = np.random.default_rng(12)
        x = rng.normal(size=(7, 6, 7, 1))
        k1, k2 = rng.normal(size=(3, 3, 3, 1, 1)), rng.normal(size=(3, 3, 3, 1, 1))
        chained = conv3d(conv3d(x, k1, ZWZ), k2, ZWZ)
        direct = conv3d(x, compose_kernels(k1, k2), ZWZ)
        np.testing.assert_allclose(direct[2:-2, :, 2:-2], chained[2:-2, :, 2:-2], rtol=0, atol=1e-10)

    def test_channel_chain_mismatch(self):
        with pytest.raises(DimensionError):
            compose_kernels(np.ones((1, 1, 1, 2, 3)), np.ones((1, 1, 1, 2, 3)))


class TestFiniteDiff:
    def test_quadratic(self):
        np.testing.assert_allclose(finite_diff_grad(lambda t: np.sum(t**2), np.array([1.0, 2.0])), [2, 4], atol=1e-6)

    def test_constant(self):
        assert not finite_diff_grad(lambda t: 3.0, np.ones(4)).any()

    def test_non_finite_raises(self):
        with pytest.raises(NumericError):
            finite_diff_grad(lambda t: np.inf, np.ones(2))

    def test_non_positive_step(self):
        with pytest.raises(ConfigError):
            finite_diff_grad(lambda t: 0.0, np.ones(2), h=0.0)

    def test_input_not_mutated(self):
        x = np.array([0.5, -0.25])
        finite_diff_grad(lambda t: np.sum(t), x)
        np.testing.assert_array_equal(x, [0.5, -0.25])


class TestMisc:
    def test_dual_array_zero_grad(self):
        d = DualArray(np.ones((2, 2)))
        assert d.grad.shape == (2, 2) and not d.grad.any()
        with pytest.raises(DimensionError):
            DualArray(np.ones(2), np.ones(3))

    def test_sigmoid_saturates(self):
        np.testing.assert_array_equal(sigmoid(np.array([np.inf, -np.inf, 0.0])), [1.0, 0.0, 0.5])

    def test_avg_pool_round_trip_shapes(self):
        x = np.arange(4 * 4 * 2 * 1, dtype=float).reshape(4, 4, 2, 1)
        pooled = avg_pool(x, (2, 2, 2))
        assert pooled.shape == (2, 2, 1, 1)
        assert pooled[0, 0, 0, 0] == np.mean(x[:2, :2, :2])
        g = np.random.default_rng(13).uniform(-1, 1, pooled.shape)
        numeric = finite_diff_grad(lambda t: np.sum(avg_pool(t, (2, 2, 2)) * g), x)
        assert relative_error(avg_pool_backward(g, (2, 2, 2)), numeric) <= 1e-4

    def test_avg_pool_indivisible(self):
        with pytest.raises(ConfigError):
            avg_pool(np.ones((3, 4, 2, 1)), (2, 2, 1))

    def test_relative_error_floor(self):
        assert relative_error(np.zeros(3), np.zeros(3)) == 0.0
