import math

import numpy as np
import pytest

import orosoar as oro
from orosoar.errors import (
    InsufficientSamples,
    NoInteriorMinimum,
    NonPositiveAirspeed,
    OutOfPolarRange,
)


def make_airframe(**over):
    base = dict(
        m=1.2, S=0.3, rho=1.225, g=9.81, a0=0.035, a1=-0.07, a2=0.06,
        theta0=0.08, v_ref=8.5, k_v=20.0, tau_v=0.5, tau_theta=0.3,
        v_min=5.0, v_max=14.0,
    )
    base.update(over)
    return oro.AirframeParams(**base)


class TestLiftCoefficient:
    def test_reference_value(self, airframe):
        cl = oro.lift_coefficient(airframe, 9.0)
        assert cl == pytest.approx(0.7909, abs=1e-4)
        assert cl == pytest.approx(
            2 * 1.2 * 9.81 / (1.225 * 81 * 0.3), rel=1e-14)

    def test_inverse_square_scaling(self, airframe):
        cl = oro.lift_coefficient(airframe, 7.0)
        assert oro.lift_coefficient(airframe, 14.0) == pytest.approx(cl / 4.0, rel=1e-14)

    def test_rejects_zero_airspeed(self, airframe):
        with pytest.raises(NonPositiveAirspeed):
            oro.lift_coefficient(airframe, 0.0)

    def test_lift_balances_weight(self, airframe):
        # C_L * (1/2 rho v^2 S) == m g by construction
        for v in (5.0, 8.0, 12.0):
            cl = oro.lift_coefficient(airframe, v)
            lift = cl * 0.5 * airframe.rho * v * v * airframe.S
            assert lift == pytest.approx(airframe.m * airframe.g, rel=1e-14)


class TestDrag:
    def test_parasitic_only(self):
        p = make_airframe(a0=0.05, a1=0.0, a2=0.0)
        assert oro.drag(p, 10.0) == pytest.approx(0.91875, rel=1e-12)

    def test_quadratic_in_speed_without_lift_terms(self):
        p = make_airframe(a1=0.0, a2=0.0)
        assert oro.drag(p, 12.0) == pytest.approx(4.0 * oro.drag(p, 6.0), rel=1e-13)

    def test_against_independent_evaluation(self, airframe):
        for v in np.linspace(5.0, 14.0, 19):
            cl = 2 * airframe.m * airframe.g / (airframe.rho * v * v * airframe.S)
            expected = (0.5 * airframe.rho * v * v * airframe.S
                        * (airframe.a0 + airframe.a1 * cl + airframe.a2 * cl ** 2))
            assert oro.drag(airframe, v) == pytest.approx(expected, rel=1e-13)


class TestGlideAngle:
    def test_thrust_cancels_drag(self, airframe):
        v = 9.0
        assert oro.glide_angle(airframe, v, oro.drag(airframe, v)) == 0.0

    def test_unpowered_glide_descends(self, airframe):
        assert oro.glide_angle(airframe, 9.0) > 0.0

    def test_against_independent_evaluation(self, airframe):
        v = 7.3
        expected = (oro.drag(airframe, v) - 0.25) / (airframe.m * airframe.g)
        assert oro.glide_angle(airframe, v, 0.25) == pytest.approx(expected, rel=1e-13)

    def test_negative_thrust_rejected(self, airframe):
        with pytest.raises(ValueError):
            oro.glide_angle(airframe, 9.0, -1.0)


class TestSinkRate:
    def test_vertex(self, quadratic_polar):
        assert oro.sink_rate(quadratic_polar, 8.0) == pytest.approx(0.5, rel=1e-12)

    def test_off_vertex(self, quadratic_polar):
        assert oro.sink_rate(quadratic_polar, 12.0) == pytest.approx(1.3, rel=1e-12)

    def test_out_of_range(self, quadratic_polar):
        with pytest.raises(OutOfPolarRange) as exc:
            oro.sink_rate(quadratic_polar, quadratic_polar.v_max + 0.1)
        assert exc.value.airspeed == pytest.approx(14.1)


class TestVMe:
    def test_quadratic_vertex(self, quadratic_polar):
        assert oro.v_me(quadratic_polar) == pytest.approx(8.0, abs=1e-9)

    def test_cubic_against_dense_scan(self):
        polar = oro.GlidePolar(coeffs=(10.0, -2.85, 0.27, -0.008),
                               v_min=4.0, v_max=14.0)
        found = oro.v_me(polar)
        # analytic root of s'(v), frozen
        assert found == pytest.approx(8.454915028125262, abs=1e-9)
        vs = np.arange(4.0, 14.0, 1e-6)
        sinks = polar.coeffs[0] + vs * (polar.coeffs[1] + vs * (
            polar.coeffs[2] + vs * polar.coeffs[3]))
        assert abs(found - vs[np.argmin(sinks)]) < 1e-4

    def test_monotone_rejected(self):
        with pytest.raises(NoInteriorMinimum):
            oro.GlidePolar(coeffs=(0.1, 0.0, 0.0, 0.01), v_min=4.0, v_max=14.0)

    def test_derivative_vanishes_at_minimum(self, default_polar):
        v = oro.v_me(default_polar)
        h = 1e-5
        slope = (oro.sink_rate(default_polar, v + h)
                 - oro.sink_rate(default_polar, v - h)) / (2 * h)
        curvature = (oro.sink_rate(default_polar, v + h)
                     - 2 * oro.sink_rate(default_polar, v)
                     + oro.sink_rate(default_polar, v - h))
        assert abs(slope) < 1e-6
        assert curvature > 0.0

    def test_positive_sink_required(self):
        with pytest.raises(ValueError):
            oro.GlidePolar(coeffs=(0.1, -0.8, 0.05, 0.0), v_min=4.0, v_max=14.0)


class TestFitPolar:
    def test_exact_interpolation(self):
        coeffs = (3.7, -0.8, 0.05, 0.001)
        vs = [5.0, 7.0, 9.0, 12.0]
        samples = [(v, coeffs[0] + v * (coeffs[1] + v * (coeffs[2] + v * coeffs[3])))
                   for v in vs]
        polar, rms = oro.fit_polar(samples, 4.0, 14.0)
        assert polar.coeffs == pytest.approx(coeffs, abs=1e-9)
        assert rms < 1e-9

    def test_too_few_samples(self):
        with pytest.raises(InsufficientSamples):
            oro.fit_polar([(5.0, 1.0), (6.0, 0.9), (7.0, 0.8)], 4.0, 14.0)

    def test_duplicate_airspeeds_rejected(self):
        samples = [(5.0, 1.0), (5.0, 1.1), (6.0, 0.9), (6.0, 0.95)]
        with pytest.raises(InsufficientSamples):
            oro.fit_polar(samples, 4.0, 14.0)

    def test_noisy_fit_matches_normal_equations(self):
        rng = np.random.RandomState(23)
        vs = rng.uniform(5.0, 13.0, size=50)
        truth = 3.7 - 0.8 * vs + 0.05 * vs ** 2
        sinks = truth + rng.normal(0.0, 0.02, size=50)
        polar, _ = oro.fit_polar(list(zip(vs, sinks)), 4.0, 14.0)
        design = np.column_stack([np.ones_like(vs), vs, vs ** 2, vs ** 3])
        normal = np.linalg.solve(design.T @ design, design.T @ sinks)
        assert polar.coeffs == pytest.approx(tuple(normal), abs=1e-9)

    def test_roundtrip_on_noiseless_cubic(self):
        coeffs = (9.0, -2.4, 0.22, -0.006)
        vs = np.linspace(4.5, 13.5, 24)
        samples = [(v, coeffs[0] + v * (coeffs[1] + v * (coeffs[2] + v * coeffs[3])))
                   for v in vs]
        polar, _ = oro.fit_polar(samples, 4.0, 14.0)
        for v, s in samples:
            assert oro.sink_rate(polar, v) == pytest.approx(s, abs=1e-9)


class TestPolarFromPointMass:
    def test_u_shape_with_induced_drag(self, airframe):
        polar = oro.polar_from_point_mass(airframe)
        v = oro.v_me(polar)
        assert airframe.v_min < v < airframe.v_max

    def test_monotone_drag_has_no_minimum(self):
        p = make_airframe(a1=0.0, a2=0.0)
        with pytest.raises(NoInteriorMinimum):
            oro.polar_from_point_mass(p)

    def test_too_few_samples(self, airframe):
        with pytest.raises(InsufficientSamples):
            oro.polar_from_point_mass(airframe, n_samples=7)

    def test_v_me_matches_dense_scan_of_point_mass_sink(self, airframe):
        polar = oro.polar_from_point_mass(airframe)
        vs = np.arange(airframe.v_min, airframe.v_max, 1e-3)
        sinks = np.array([v * oro.glide_angle(airframe, v) for v in vs])
        assert abs(oro.v_me(polar) - vs[np.argmin(sinks)]) < 0.05

    def test_fit_tracks_point_mass_sink_within_one_percent_rms(self, airframe):
        polar = oro.polar_from_point_mass(airframe)
        vs = np.linspace(airframe.v_min, airframe.v_max, 200)
        truth = np.array([v * oro.glide_angle(airframe, v) for v in vs])
        fitted = np.array([oro.sink_rate(polar, v) for v in vs])
        rel_rms = np.sqrt(np.mean((fitted - truth) ** 2) / np.mean(truth ** 2))
        assert rel_rms < 0.01


class TestTrimAirspeed:
    def test_reference_pitch_gives_reference_speed(self, airframe):
        assert oro.trim_airspeed(airframe, airframe.theta0) == airframe.v_ref

    def test_pitch_up_slows(self, airframe):
        assert oro.trim_airspeed(airframe, airframe.theta0 + 0.1) < airframe.v_ref

    def test_clamped_to_range(self, airframe):
        assert oro.trim_airspeed(airframe, airframe.theta0 + 10.0) == airframe.v_min
        assert oro.trim_airspeed(airframe, airframe.theta0 - 10.0) == airframe.v_max


class TestAirframeValidation:
    def test_v_ref_must_be_in_range(self):
        with pytest.raises(ValueError):
            make_airframe(v_ref=20.0)

    def test_positive_lags(self):
        with pytest.raises(ValueError):
            make_airframe(tau_v=0.0)
