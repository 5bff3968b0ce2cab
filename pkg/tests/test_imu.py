import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from elidmap.cloud_io import ImuSample
from elidmap.errors import DegenerateCalibration, EmptyWindow
from elidmap.imu import (
    STANDARD_GRAVITY,
    AxisCalibration,
    CalibrationProfile,
    average_corrected,
    build_axis_calibration,
    correct_reading,
    correct_sample,
)
from elidmap.simulator import ImuBias, render_calibration_window, render_imu
from elidmap.geometry import EulerAngles
from elidmap.simulator import SensorPose


def samples_of(rows):
    return [ImuSample(gx, gy, gz, i) for i, (gx, gy, gz) in enumerate(rows)]


def identity_profile():
    g = STANDARD_GRAVITY
    return CalibrationProfile(
        AxisCalibration("x", -g, g),
        AxisCalibration("y", -g, g),
        AxisCalibration("z", -g, g),
    )


class TestBuildAxisCalibration:
    def test_constant_windows(self):
        mn = samples_of([(-9.8, 0, 0)] * 4)
        mx = samples_of([(9.8, 0, 0)] * 4)
        cal = build_axis_calibration(mn, mx, "x")
        assert (cal.g_min, cal.g_max) == (-9.8, 9.8)

    def test_two_sample_mean(self):
        mn = samples_of([(0, -9.7, 0), (0, -9.9, 0)])
        mx = samples_of([(0, 9.8, 0)])
        cal = build_axis_calibration(mn, mx, "y")
        assert math.isclose(cal.g_min, -9.8)

    def test_statistical_oracle(self):
        # Windows are Normal(+-g, 0.05); the mean must land within 3 sigma/sqrt(n).
        rng = np.random.default_rng(42)
        n, sigma = 300, 0.05
        mn = samples_of([(v, 0, 0) for v in rng.normal(-STANDARD_GRAVITY, sigma, n)])
        mx = samples_of([(v, 0, 0) for v in rng.normal(STANDARD_GRAVITY, sigma, n)])
        cal = build_axis_calibration(mn, mx, "x")
        bound = 3 * sigma / math.sqrt(n)
        assert abs(cal.g_min + STANDARD_GRAVITY) <= bound
        assert abs(cal.g_max - STANDARD_GRAVITY) <= bound

    def test_empty_window(self):
        with pytest.raises(EmptyWindow):
            build_axis_calibration([], samples_of([(1, 0, 0)]), "x")

    def test_degenerate_when_windows_swapped(self):
        mn = samples_of([(9.8, 0, 0)])
        mx = samples_of([(-9.8, 0, 0)])
        with pytest.raises(DegenerateCalibration):
            build_axis_calibration(mn, mx, "x")


class TestCorrectReading:
    def test_endpoints_and_midpoint(self):
        cal = AxisCalibration("z", -9.4, 10.2)
        g = STANDARD_GRAVITY
        assert abs(correct_reading(cal.g_min, cal) + g) < 1e-12
        assert abs(correct_reading((cal.g_min + cal.g_max) / 2, cal)) < 1e-12
        assert abs(correct_reading(cal.g_max, cal) - g) < 1e-12

    @given(st.floats(-12, 12), st.floats(1e-6, 1.0))
    @settings(max_examples=100)
    def test_strictly_increasing(self, a, step):
        cal = AxisCalibration("x", -9.6, 9.9)
        assert correct_reading(a, cal) < correct_reading(a + step, cal)

    def test_extrapolates_outside_bounds(self):
        cal = AxisCalibration("x", -9.8, 9.8)
        assert correct_reading(2 * 9.8, cal) > STANDARD_GRAVITY


class TestAverageCorrected:
    def test_single_sample(self):
        profile = identity_profile()
        s = ImuSample(1.0, -2.0, 9.0, 0)
        np.testing.assert_allclose(average_corrected([s], profile),
                                   correct_sample(s, profile), atol=0)

    def test_symmetric_samples_cancel(self):
        profile = identity_profile()
        sams = samples_of([(1.0, 2.0, 3.0), (-1.0, -2.0, -3.0)])
        np.testing.assert_allclose(average_corrected(sams, profile), np.zeros(3),
                                   atol=1e-15)

    def test_permutation_invariant_bit_for_bit(self):
        rng = np.random.default_rng(11)
        profile = identity_profile()
        sams = samples_of(rng.normal(0, 5, (64, 3)))
        forward = average_corrected(sams, profile)
        backward = average_corrected(list(reversed(sams)), profile)
        np.testing.assert_array_equal(forward, backward)

    def test_empty_raises(self):
        with pytest.raises(EmptyWindow):
            average_corrected([], identity_profile())

    def test_noisy_gravity_recovery(self):
        # 500 noisy readings of a known gravity vector; mean within sigma-based bound.
        pose = SensorPose(np.array([1.0, 1.0, 1.0]), EulerAngles.from_degrees(12, -7, 30),
                          ring_count=16, azimuth_steps=8)
        truth = pose.rotation.T @ np.array([0, 0, STANDARD_GRAVITY])
        samples = render_imu(pose, noise_sigma=0.05, n_samples=500, seed=9)
        got = average_corrected(samples, identity_profile())
        assert np.abs(got - truth).max() <= 0.02


class TestCalibrationInvertsBias:
    def test_noiseless_inversion_is_exact(self):
        bias = ImuBias(gain=np.array([1.03, 0.98, 1.01]),
                       offset=np.array([0.2, -0.15, 0.05]))
        cals = {}
        for axis in "xyz":
            mn = render_calibration_window(axis, "min", bias, 0.0, 10, seed=1)
            mx = render_calibration_window(axis, "max", bias, 0.0, 10, seed=2)
            cals[axis] = build_axis_calibration(mn, mx, axis)
        profile = CalibrationProfile(cals["x"], cals["y"], cals["z"])

        pose = SensorPose(np.array([1.0, 1.0, 1.0]), EulerAngles.from_degrees(25, -10, 95),
                          ring_count=16, azimuth_steps=8)
        truth = pose.rotation.T @ np.array([0, 0, STANDARD_GRAVITY])
        raw = render_imu(pose, 0.0, bias, n_samples=5, seed=3)
        corrected = average_corrected(raw, profile)
        np.testing.assert_allclose(corrected, truth, atol=1e-9)
