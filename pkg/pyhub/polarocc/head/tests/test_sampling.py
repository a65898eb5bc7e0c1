import math

import numpy as np
import pytest

from pyhub.polarocc.geometry import PRESETS, CartesianGridSpec, PolarGridSpec, PolarPoint
from pyhub.polarocc.head import (
    POLAR_WRAP,
    build_plan,
    polar_to_cartesian_backward,
    polar_to_cartesian_grid,
    resampling_plan,
    sample,
    sample_backward,
    trilinear_sample,
)
from pyhub.polarocc.pdconv import FULL_SCHEDULE, schedule_shapes
from pyhub.polarocc.tensor import finite_diff_grad, relative_error
from pyhub.polarocc.voxelize import FeatureVolume

SPEC = PolarGridSpec(r_range=(1.0, 5.0), z_range=(0.0, 2.0), bins=(4, 6, 2))
OUT = CartesianGridSpec(x_range=(-6.0, 6.0), y_range=(-6.0, 6.0), z_range=(0.0, 2.0), bins=(12, 12, 2))


def corner_oracle(data, u):
    """Literal 8-corner blend with azimuth wrap and r/z clamping."""
    R, A, Z, _ = data.shape
    ur = min(max(u[0], 0.0), R - 1.0)
    uz = min(max(u[2], 0.0), Z - 1.0)
    r0 = min(int(math.floor(ur)), max(R - 2, 0))
    z0 = min(int(math.floor(uz)), max(Z - 2, 0))
    a0 = int(math.floor(u[1]))
    fr, fz, fa = ur - r0, uz - z0, u[1] - a0
    out = np.zeros(data.shape[3])
    for dr in (0, 1):
        for da in (0, 1):
            for dz in (0, 1):
                w = (fr if dr else 1 - fr) * (fa if da else 1 - fa) * (fz if dz else 1 - fz)
                out += w * data[min(r0 + dr, R - 1), (a0 + da) % A, min(z0 + dz, Z - 1)]
    return out


class TestPlan:
    def test_integer_index_returns_stored_feature(self, rng):
        data = rng.normal(size=(4, 6, 2, 3))
        for index in [(1, 2, 0), (3, 5, 1), (0, 0, 0)]:
            plan = build_plan(np.array([index], dtype=float), data.shape[:3])
            np.testing.assert_array_equal(sample(data, plan)[0], data[index])

    def test_linear_field_reproduced(self, rng):
        i_r, i_a, i_z = np.meshgrid(np.arange(4), np.arange(6), np.arange(2), indexing="ij")
        field = (0.7 * i_r - 1.3 * i_a + 2.1 * i_z)[..., None]
        u = rng.uniform([0, 0, 0], [3, 5, 1], size=(50, 3))
        values = sample(field, build_plan(u, field.shape[:3]))[:, 0]
        np.testing.assert_allclose(values, 0.7 * u[:, 0] - 1.3 * u[:, 1] + 2.1 * u[:, 2], rtol=0, atol=1e-12)

    def test_azimuth_seam_matches_corner_oracle(self, rng):
        data = rng.normal(size=(4, 6, 2, 2))
        u = np.array([[1.4, 5.3, 0.2], [2.0, -0.4, 0.9], [0.5, 5.99, 0.0]])
        values = sample(data, build_plan(u, data.shape[:3]))
        for row, expected in zip(u, values):
            np.testing.assert_allclose(expected, corner_oracle(data, row), rtol=0, atol=1e-12)

    def test_weights_are_a_partition_of_unity(self, rng):
        u = rng.uniform(-2, 8, size=(200, 3))
        plan = build_plan(u, (4, 6, 2))
        assert np.all(plan.weights >= 0)
        np.testing.assert_allclose(plan.weights.sum(axis=1), 1.0, rtol=0, atol=1e-12)

    def test_invalid_queries_sample_zero(self, rng):
        data = rng.normal(size=(4, 6, 2, 2))
        plan = build_plan(np.array([[1.0, 1.0, 0.0]]), data.shape[:3], POLAR_WRAP, valid=np.array([False]))
        assert not sample(data, plan).any()

    def test_backward_matches_finite_differences(self, rng):
        data = rng.normal(size=(4, 6, 2, 2))
        plan = build_plan(rng.uniform(-1, 6, size=(30, 3)), data.shape[:3])
        g = rng.normal(size=(30, 2))
        numeric = finite_diff_grad(lambda t: np.sum(sample(t, plan) * g), data, h=1e-6)
        assert relative_error(sample_backward(plan, g), numeric) <= 1e-4


class TestTrilinearSample:
    def test_voxel_center(self, rng):
        volume = FeatureVolume(SPEC, rng.normal(size=(4, 6, 2, 3)))
        for index in [(0, 0, 0), (2, 3, 1), (3, 5, 0)]:
            np.testing.assert_allclose(
                trilinear_sample(volume, SPEC.voxel_center(index)), volume.data[index], rtol=0, atol=1e-12
            )

    @pytest.mark.parametrize("point", [PolarPoint(0.5, 0.0, 1.0), PolarPoint(5.5, 0.0, 1.0), PolarPoint(3.0, 0.0, 2.5)])
    def test_outside_extent_is_zero(self, point):
        volume = FeatureVolume(SPEC, np.ones((4, 6, 2, 2)))
        assert not trilinear_sample(volume, point).any()

    def test_edge_half_bin_clamps(self, rng):
        volume = FeatureVolume(SPEC, rng.normal(size=(4, 6, 2, 2)))
        center = SPEC.voxel_center((0, 2, 0))
        inner = PolarPoint(1.1, center.theta, center.z)
        np.testing.assert_allclose(trilinear_sample(volume, inner), volume.data[0, 2, 0], rtol=0, atol=1e-12)


class TestPolarToCartesian:
    def test_constant_volume(self):
        volume = FeatureVolume(SPEC, np.full((4, 6, 2, 2), 3.5))
        out = polar_to_cartesian_grid(volume, OUT)
        assert out.shape == (12, 12, 2, 2)
        np.testing.assert_allclose(out.data[out.mask], 3.5, rtol=0, atol=1e-12)
        assert not out.data[~out.mask].any()
        xs, ys, _ = OUT.axis_centers()
        r = np.hypot(*np.meshgrid(xs, ys, indexing="ij"))
        np.testing.assert_array_equal(out.mask[..., 0], (r >= 1.0) & (r <= 5.0))

    def test_radial_field(self):
        spec = PolarGridSpec(r_range=(1.0, 9.0), z_range=(0.0, 2.0), bins=(64, 32, 2))
        field = np.broadcast_to(spec.r_centers()[:, None, None, None], (64, 32, 2, 1)).copy()
        out_spec = CartesianGridSpec(x_range=(-8, 8), y_range=(-8, 8), z_range=(0, 2), bins=(32, 32, 2))
        out = polar_to_cartesian_grid(FeatureVolume(spec, field), out_spec)
        xs, ys, _ = out_spec.axis_centers()
        r = np.hypot(*np.meshgrid(xs, ys, indexing="ij"))[..., None]
        r = np.broadcast_to(r, out.mask.shape)
        assert np.max(np.abs(out.data[..., 0][out.mask] - r[out.mask])) < spec.widths[0]

    def test_cartesian_source(self, rng):
        src = CartesianGridSpec(x_range=(-6.0, 6.0), y_range=(-6.0, 6.0), z_range=(0.0, 2.0), bins=(12, 12, 2))
        volume = FeatureVolume(src, rng.normal(size=(12, 12, 2, 2)))
        np.testing.assert_allclose(polar_to_cartesian_grid(volume, OUT).data, volume.data, rtol=0, atol=1e-12)

    def test_backward(self, rng):
        data = rng.normal(size=(4, 6, 2, 2))
        g = rng.normal(size=(12, 12, 2, 2))

        def loss(t):
            return np.sum(polar_to_cartesian_grid(FeatureVolume(SPEC, t), OUT).data * g)

        analytic = polar_to_cartesian_backward(SPEC, OUT, g)
        assert relative_error(analytic, finite_diff_grad(loss, data, h=1e-6)) <= 1e-4

    def test_plan_is_cached(self):
        assert resampling_plan(SPEC, OUT) is resampling_plan(SPEC, OUT)

    def test_full_shape_contract(self):
        polar, cartesian = PRESETS["full"]
        assert schedule_shapes(polar.bins, FULL_SCHEDULE)[-1] == (128, 168, 10)
        assert cartesian.bins == (512, 512, 40)
