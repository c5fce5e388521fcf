import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from crashsynth.camera_geometry import (
    CameraIntrinsics,
    bottom_origin_horizon,
    CalibrationInfeasibleError,
    DepthMap,
    EmptyCloudError,
    ImageLine,
    InvalidDepthError,
    PixelBoundsError,
    PixelMask,
    Point3,
    PointCloud,
    ShapeMismatchError,
    backproject_masked,
    backproject_pixel,
    calibrate_from_lanes,
    estimate_position,
    project_point,
    render_ground_line,
)

KITTI = CameraIntrinsics(721.5, 721.5, 621.0, 187.5, 1242, 375)


class TestBackprojectPixel:
    def test_principal_point_is_optical_axis(self):
        intr = CameraIntrinsics(700.0, 700.0, 620.0, 187.0, 1242, 375)
        p = backproject_pixel(620.0, 187.0, intr, 5.0)
        assert p == Point3(0.0, 0.0, 5.0)

    def test_unit_tangent_column(self):
        intr = CameraIntrinsics(700.0, 700.0, 300.0, 187.0, 1242, 375)
        p = backproject_pixel(300.0 + 700.0, 187.0, intr, 3.0)
        assert p.x == pytest.approx(3.0, abs=1e-12)
        assert p.y == 0.0
        assert p.z == 3.0

    def test_hand_evaluated(self):
        # (1000-620)*7.6/760 = 3.8
        intr = CameraIntrinsics(760.0, 760.0, 620.0, 187.0, 1242, 375)
        p = backproject_pixel(1000.0, 187.0, intr, 7.6)
        assert p.x == pytest.approx(3.8, abs=1e-12)
        assert p.y == pytest.approx(0.0, abs=1e-12)

    def test_invalid_depth(self):
        with pytest.raises(InvalidDepthError):
            backproject_pixel(10, 10, KITTI, 0.0)
        with pytest.raises(InvalidDepthError):
            backproject_pixel(10, 10, KITTI, -3.0)

    def test_out_of_bounds(self):
        with pytest.raises(PixelBoundsError):
            backproject_pixel(-1, 10, KITTI, 5.0)
        with pytest.raises(PixelBoundsError):
            backproject_pixel(10, 375, KITTI, 5.0)

    @settings(max_examples=200, deadline=None)
    @given(
        x=st.floats(-50, 50), y=st.floats(-20, 20), z=st.floats(0.5, 150),
        f=st.floats(200, 2000), cu=st.floats(100, 1100), cv=st.floats(50, 320),
    )
    def test_round_trip(self, x, y, z, f, cu, cv):
        intr = CameraIntrinsics(f, f, cu, cv, 1242, 375)
        u, v = project_point(Point3(x, y, z), intr)
        back = backproject_pixel(np.clip(u, 0, 1241.999), np.clip(v, 0, 374.999), intr,
                                 z) if 0 <= u < 1242 and 0 <= v < 375 else None
        if back is None:
            return
        for got, want in zip(back, (x, y, z)):
            assert abs(got - want) <= 1e-9 * max(1.0, abs(want))


class TestBackprojectMasked:
    def test_all_false_mask(self):
        depth = DepthMap(3, 2, np.full((2, 3), 5.0))
        mask = PixelMask.full(3, 2, False)
        assert len(backproject_masked(depth, mask, KITTI)) == 0

    def test_invalid_depth_skipped(self):
        depth = DepthMap(2, 1, np.array([[4.0, -1.0]]))
        mask = PixelMask.full(2, 1)
        cloud = backproject_masked(depth, mask, KITTI)
        assert len(cloud) == 1
        assert cloud.points[0, 2] == 4.0

    def test_max_depth_filter(self):
        depth = DepthMap(3, 1, np.array([[2.0, 5.0, 200.0]]))
        mask = PixelMask.full(3, 1)
        cloud = backproject_masked(depth, mask, KITTI, max_depth=100.0)
        assert len(cloud) == 2

    def test_dimension_mismatch(self):
        depth = DepthMap(3, 2, np.full((2, 3), 5.0))
        mask = PixelMask.full(2, 3)
        with pytest.raises(ShapeMismatchError):
            backproject_masked(depth, mask, KITTI)

    def test_cardinality_matches_filter_count(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            h, w = rng.integers(2, 40, 2)
            grid = rng.uniform(-5, 150, (h, w))
            member = rng.random((h, w)) > 0.4
            max_depth = float(rng.uniform(10, 120))
            cloud = backproject_masked(
                DepthMap(w, h, grid), PixelMask(w, h, member), KITTI, max_depth
            )
            expected = int((member & (grid > 0) & (grid <= max_depth)).sum())
            assert len(cloud) == expected

    def test_row_major_order(self):
        depth = DepthMap(2, 2, np.array([[1.0, 2.0], [3.0, 4.0]]))
        cloud = backproject_masked(depth, PixelMask.full(2, 2), KITTI)
        assert list(cloud.points[:, 2]) == [1.0, 2.0, 3.0, 4.0]


def cuboid_face_cloud(center_z, depth=20.0, dims=(4.5, 1.8, 1.5), camera_height=1.65, n=40):
    """Uniform samples of the camera-facing and top faces of a cuboid."""
    length, width, height = dims
    z_front = center_z - length / 2.0
    z_back = center_z + length / 2.0
    y_bottom = camera_height
    y_top = camera_height - height
    xs = np.linspace(-width / 2, width / 2, n)
    front = np.array([[x, y, z_front] for x in xs for y in np.linspace(y_top, y_bottom, n)])
    top = np.array([[x, y_top, z] for x in xs for z in np.linspace(z_front, z_back, n)])
    return PointCloud(np.vstack([front, top]))


class TestEstimatePosition:
    def test_single_point(self):
        p = Point3(1.0, 2.0, 3.0)
        assert estimate_position(PointCloud(np.array([p]))) == p

    def test_midpoint(self):
        cloud = PointCloud(np.array([[0.0, 0.0, 2.0], [2.0, 0.0, 4.0]]))
        assert estimate_position(cloud) == Point3(1.0, 0.0, 3.0)

    def test_empty_cloud(self):
        with pytest.raises(EmptyCloudError):
            estimate_position(PointCloud(np.empty((0, 3))))

    def test_cuboid_surface_bias_bounded(self):
        # visible-surface mean stays within the vehicle dimensions of center
        cloud = cuboid_face_cloud(center_z=20.0)
        est = estimate_position(cloud)
        center = np.array([0.0, 1.65 - 0.75, 20.0])
        err = np.linalg.norm(np.array(est) - center)
        assert err < 4.5

    def test_translation_equivariance(self):
        rng = np.random.default_rng(3)
        pts = rng.uniform([-2, -1, 5], [2, 1, 30], (100, 3))
        t = np.array([1.5, -0.25, 4.0])
        a = np.array(estimate_position(PointCloud(pts)))
        b = np.array(estimate_position(PointCloud(pts + t)))
        np.testing.assert_allclose(b, a + t, rtol=0, atol=1e-12)


class TestCalibration:
    W, H = 1242, 375
    CAM_H = 1.65
    LANE_W = 3.7

    def _render_pair(self, f, heading_slope=0.08, center=0.3):
        half = self.LANE_W / 2.0 * np.sqrt(1 + heading_slope ** 2)
        left = render_ground_line(f, self.W, self.H, self.CAM_H, center - half, heading_slope)
        right = render_ground_line(f, self.W, self.H, self.CAM_H, center + half, heading_slope)
        return left, right

    @pytest.mark.parametrize("f_true", [500.0, 720.0, 1000.0])
    def test_recovers_rendered_focal_length(self, f_true):
        left, right = self._render_pair(f_true)
        got = calibrate_from_lanes(left, right, self.LANE_W, self.CAM_H, self.W, self.H)
        assert abs(got.f_u - f_true) / f_true < 0.01
        assert got.f_u == got.f_v
        assert (got.c_u, got.c_v) == (self.W / 2.0, self.H / 2.0)

    def test_similar_triangles_scaling(self):
        # doubling the vanishing-point offset from the image center, with the
        # bottom-row separation held, doubles the recovered focal length:
        # the similar-triangles scaling law of the forward model
        left, right = self._render_pair(720.0)
        f_base = calibrate_from_lanes(left, right, self.LANE_W, self.CAM_H, self.W, self.H).f_u
        c_u = self.W / 2.0
        horizon = bottom_origin_horizon(self.H)

        def shift_vanishing(line, factor):
            q = line.u_at(horizon) - c_u
            new_horizon_u = c_u + factor * q
            slope = (new_horizon_u - line.intercept) / horizon
            return ImageLine(slope, line.intercept)

        left2 = shift_vanishing(left, 2.0)
        right2 = shift_vanishing(right, 2.0)
        f_double = calibrate_from_lanes(left2, right2, self.LANE_W, self.CAM_H,
                                        self.W, self.H).f_u
        assert f_double == pytest.approx(2.0 * f_base, rel=1e-4)

    def test_degenerate_coincident_lines(self):
        line = ImageLine(0.5, 300.0)
        with pytest.raises(CalibrationInfeasibleError):
            calibrate_from_lanes(line, ImageLine(0.5, 300.0), self.LANE_W,
                                 self.CAM_H, self.W, self.H)

    def test_axis_aligned_lanes_infeasible(self):
        # lanes through the principal point leave the focal length unobservable
        left = render_ground_line(720.0, self.W, self.H, self.CAM_H, -1.85, 0.0)
        right = render_ground_line(720.0, self.W, self.H, self.CAM_H, 1.85, 0.0)
        with pytest.raises(CalibrationInfeasibleError):
            calibrate_from_lanes(left, right, 3.0, self.CAM_H, self.W, self.H)

    def test_self_consistent_fixed_point(self):
        left, right = self._render_pair(720.0)
        first = calibrate_from_lanes(left, right, self.LANE_W, self.CAM_H, self.W, self.H)
        half = self.LANE_W / 2.0 * np.sqrt(1 + 0.08 ** 2)
        left2 = render_ground_line(first.f_u, self.W, self.H, self.CAM_H, 0.3 - half, 0.08)
        right2 = render_ground_line(first.f_u, self.W, self.H, self.CAM_H, 0.3 + half, 0.08)
        second = calibrate_from_lanes(left2, right2, self.LANE_W, self.CAM_H, self.W, self.H)
        assert abs(second.f_u - first.f_u) / first.f_u < 1e-6


class TestIntrinsicsValidation:
    def test_rejects_nonpositive_focal(self):
        with pytest.raises(ValueError):
            CameraIntrinsics(0.0, 700.0, 100.0, 100.0, 640, 480)

    def test_rejects_principal_point_outside(self):
        with pytest.raises(ValueError):
            CameraIntrinsics(700.0, 700.0, 640.0, 100.0, 640, 480)
