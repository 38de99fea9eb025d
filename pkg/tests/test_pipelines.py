"""Multi-trace analysis pipelines.

The water-glycerol viscosity correlation is checked against published
mixture-table values (Segur & Oberstar style handbook data at 20 C) that
were looked up independently of the implementation.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spinfid.dynamics import TraceSeries
from spinfid.errors import DomainError, RangeError
from spinfid.physics import CODATA2018, larmor_frequency
from spinfid.pipelines import (
    RelaxationSeries,
    SweepResult,
    deadtime_truncate,
    detection_limit,
    extract_g_from_sweep,
    extrapolate_t1,
    glycerol_viscosity,
    viscosity_regression,
)

# handbook values for aqueous glycerol at 20 C, mPa*s
GLYCEROL_TABLE_20C = {0.0: 1.005, 0.20: 1.76, 0.40: 3.72, 0.60: 10.8}


class TestExtractG:
    def oracle_points(self, fields, g=1.74):
        return [(b, larmor_frequency(g, b)) for b in fields]

    def test_exact_points_recover_g(self):
        g, sigma = extract_g_from_sweep(self.oracle_points([1, 2, 3, 4, 5]))
        assert abs(g - 1.740) < 1e-6
        assert sigma < 1e-6

    def test_single_point(self):
        g, sigma = extract_g_from_sweep([(5.0, larmor_frequency(1.74, 5.0))])
        assert g == pytest.approx(1.74, rel=1e-12)
        assert math.isnan(sigma)

    def test_zero_field_points_skipped(self):
        pts = [(0.0, 0.0)] + self.oracle_points([2, 4])
        g, _ = extract_g_from_sweep(pts)
        assert g == pytest.approx(1.74, rel=1e-12)

    def test_all_zero_fields_rejected(self):
        with pytest.raises(DomainError):
            extract_g_from_sweep([(0.0, 0.0), (0.0, 0.0)])

    def test_noisy_monte_carlo(self):
        ok = 0
        for seed in range(40):
            rng = np.random.default_rng(seed)
            pts = []
            for b in (1, 2, 3, 4, 5):
                w0 = larmor_frequency(1.74, b)
                pts.append((b, w0 * (1 + 0.01 * rng.standard_normal()), 0.01 * w0))
            g, _ = extract_g_from_sweep(pts)
            ok += abs(g / 1.74 - 1) < 0.01
        assert ok >= 38  # 95%

    def test_invariant_under_reordering(self):
        pts = [(b, larmor_frequency(1.74, b) + 1e8 * (-1) ** i, 1e8)
               for i, b in enumerate((1, 2, 3, 4, 5))]
        g1, s1 = extract_g_from_sweep(pts)
        g2, s2 = extract_g_from_sweep(list(reversed(pts)))
        assert g1 == pytest.approx(g2, rel=1e-14)

    def test_invariant_under_uniform_sigma_scaling(self):
        pts = [(b, larmor_frequency(1.74, b) + 1e8 * (-1) ** i, 1e8)
               for i, b in enumerate((1, 2, 3, 4, 5))]
        scaled = [(b, w, 7.0 * s) for b, w, s in pts]
        assert extract_g_from_sweep(pts)[0] == pytest.approx(
            extract_g_from_sweep(scaled)[0], rel=1e-14)


class TestViscosityRegression:
    def test_two_exact_points_and_inversion(self):
        eta40 = glycerol_viscosity(0.40, 293.15)
        line = viscosity_regression([(1.0, 8.60e-12), (eta40, 21.9e-12)])
        assert line.predict_t2star(1.0) == pytest.approx(8.60e-12, rel=1e-12)
        assert line.predict_t2star(eta40) == pytest.approx(21.9e-12, rel=1e-12)
        assert line.invert_viscosity(8.60e-12) == pytest.approx(1.0, rel=1e-9)

    def test_flat_line_slope_zero_and_uninvertible(self):
        line = viscosity_regression([(1.0, 9e-12), (2.0, 9e-12), (3.0, 9e-12)])
        assert line.slope == 0.0
        with pytest.raises(DomainError):
            line.invert_viscosity(8e-12)

    def test_identical_viscosities_rejected(self):
        with pytest.raises(DomainError):
            viscosity_regression([(1.0, 8e-12), (1.0, 9e-12)])

    def test_predict_invert_round_trip(self):
        line = viscosity_regression([(1.0, 8.6e-12), (2.0, 13.5e-12), (3.0, 18.4e-12)])
        eta = 2.37
        assert line.invert_viscosity(line.predict_t2star(eta)) == pytest.approx(eta, rel=1e-9)

    def test_noisy_slope_recovery(self):
        slope_true, intercept_true = 5e-12, 3.6e-12
        ok = 0
        for seed in range(40):
            rng = np.random.default_rng(seed)
            pts = []
            for eta in np.linspace(1.0, 3.7, 5):
                t2 = intercept_true + slope_true * eta
                pts.append((eta, t2 * (1 + 0.03 * rng.standard_normal())))
            line = viscosity_regression(pts)
            ok += abs(line.slope / slope_true - 1) < 0.15
        assert ok >= 38


class TestGlycerolViscosity:
    @pytest.mark.parametrize("fraction,expected", sorted(GLYCEROL_TABLE_20C.items()))
    def test_against_handbook_table(self, fraction, expected):
        tol = 0.03 if fraction == 0.0 else 0.10
        assert abs(glycerol_viscosity(fraction, 293.15) / expected - 1) < tol

    def test_monotone_in_fraction(self):
        v = [glycerol_viscosity(f, 293.15) for f in (0.0, 0.2, 0.4)]
        assert v[0] < v[1] < v[2]

    def test_decreases_with_temperature(self):
        assert glycerol_viscosity(0.3, 278.0) > glycerol_viscosity(0.3, 313.0)

    def test_validity_window(self):
        with pytest.raises(RangeError):
            glycerol_viscosity(0.7, 293.15)
        with pytest.raises(RangeError):
            glycerol_viscosity(0.3, 250.0)
        with pytest.raises(RangeError):
            glycerol_viscosity(-0.1, 293.15)


def power_law_series(amplitude, exponent, temps=(5, 8, 10, 12, 14, 16, 18, 20)):
    temps = np.array(temps, dtype=float)
    return RelaxationSeries(temperatures=temps, times=amplitude * temps ** exponent)


class TestExtrapolateT1:
    @pytest.mark.parametrize("exponent", [-1.0, -3.0, -5.0, -7.0])
    def test_exact_power_law(self, exponent):
        series = power_law_series(2e-3, exponent)
        result = extrapolate_t1(series, (12.0, 20.0), 294.0)
        assert abs(result.predicted_time / (2e-3 * 294.0 ** exponent) - 1) < 1e-9
        assert result.slope == pytest.approx(exponent, rel=1e-9)

    def test_two_points_interpolate_with_flagged_sigma(self):
        series = power_law_series(1e-3, -3.0, temps=(12, 20))
        result = extrapolate_t1(series, (12.0, 20.0), 294.0)
        assert abs(result.predicted_time / (1e-3 * 294.0 ** -3) - 1) < 1e-9
        assert math.isnan(result.sigma)

    def test_affine_invariance_in_log_space(self):
        series = power_law_series(1e-3, -4.0)
        scaled = RelaxationSeries(temperatures=series.temperatures * 2.5,
                                  times=series.times)
        a = extrapolate_t1(series, (12.0, 20.0), 294.0)
        b = extrapolate_t1(scaled, (30.0, 50.0), 294.0)
        assert a.slope == pytest.approx(b.slope, rel=1e-9)

    def test_linear_mode_flagged_distinct(self):
        series = power_law_series(1e-3, -3.0)
        res = extrapolate_t1(series, (12.0, 20.0), 25.0, mode="linear")
        assert res.mode == "linear"
        ll = extrapolate_t1(series, (12.0, 20.0), 25.0, mode="loglog")
        assert res.predicted_time != ll.predicted_time

    def test_noisy_extrapolation_within_factor_two(self):
        ok = 0
        for seed in range(30):
            rng = np.random.default_rng(seed)
            temps = np.array([12.0, 14.0, 16.0, 18.0, 20.0])
            times = 2e-3 * temps ** -5.0 * np.exp(0.05 * rng.standard_normal(temps.size))
            series = RelaxationSeries(temperatures=temps, times=times)
            res = extrapolate_t1(series, (12.0, 20.0), 294.0)
            truth = 2e-3 * 294.0 ** -5.0
            ok += 0.5 < res.predicted_time / truth < 2.0
        assert ok >= 27  # long extrapolations amplify noise; documented

    def test_too_few_points_in_range(self):
        series = power_law_series(1e-3, -3.0, temps=(5, 8, 30))
        with pytest.raises(DomainError):
            extrapolate_t1(series, (12.0, 20.0), 294.0)

    def test_weighted_fit_uses_sigmas(self):
        temps = np.array([12.0, 14.0, 16.0, 18.0, 20.0])
        times = 2e-3 * temps ** -3.0
        times_off = times.copy()
        times_off[0] *= 1.5  # corrupt one point, then down-weight it
        sig = np.full(temps.size, 1e-9)
        sig[0] = 1.0
        series = RelaxationSeries(temperatures=temps, times=times_off, sigmas=sig)
        res = extrapolate_t1(series, (12.0, 20.0), 294.0)
        assert res.slope == pytest.approx(-3.0, rel=1e-4)


class TestDetectionLimit:
    def test_reference_scaling_to_micromolar(self):
        assert detection_limit((2e-3, 300.0), 3.0) == pytest.approx(20e-6, rel=1e-12)

    def test_threshold_equal_snr(self):
        assert detection_limit((2e-3, 300.0), 300.0) == pytest.approx(2e-3, rel=1e-12)

    def test_pump_energy_scaling(self):
        base = detection_limit((2e-3, 300.0), 3.0)
        assert detection_limit((2e-3, 300.0), 3.0, pump_energy_scale=2.0) == pytest.approx(
            base / 2.0, rel=1e-12)

    @given(st.floats(1e-7, 1.0), st.floats(0.1, 1e4))
    @settings(max_examples=50, derandomize=True)
    def test_homogeneous_in_reference_concentration(self, c_ref, scale):
        a = detection_limit((c_ref, 250.0), 3.0)
        b = detection_limit((scale * c_ref, 250.0), 3.0)
        assert b == pytest.approx(scale * a, rel=1e-12)

    def test_domain(self):
        with pytest.raises(DomainError):
            detection_limit((0.0, 300.0), 3.0)
        with pytest.raises(DomainError):
            detection_limit((2e-3, 300.0), -1.0)


class TestDeadtimeTruncate:
    def test_picosecond_decay_fully_blanked(self):
        t = np.arange(0, 35e-12, 0.1e-12)
        trace = TraceSeries(times=t, values=np.exp(-t / 8.6e-12))
        out = deadtime_truncate(trace)
        assert out.is_empty
        assert out.metadata["deadtime_empty"]

    def test_microsecond_decay_snapped_to_grid(self):
        t = np.arange(0, 1000.5e-9, 1e-9)
        trace = TraceSeries(times=t, values=np.exp(-t / 1e-6))
        out = deadtime_truncate(trace)
        assert not out.is_empty
        assert out.times[0] == pytest.approx(120e-9)
        steps = np.diff(out.times)
        assert np.allclose(steps, 2e-9)
        assert len(out) >= 400

    def test_identity_when_grid_matches(self):
        t = np.arange(0, 101) * 2e-9
        trace = TraceSeries(times=t, values=np.cos(t / 50e-9))
        out = deadtime_truncate(trace, deadtime=0.0, increment=2e-9)
        assert np.allclose(out.times, trace.times)
        assert np.allclose(out.values, trace.values)

    def test_duplicate_snaps_averaged(self):
        t = np.array([120e-9, 120.4e-9, 121.6e-9])
        trace = TraceSeries(times=t, values=np.array([1.0, 3.0, 5.0]))
        out = deadtime_truncate(trace)
        assert len(out) == 2
        assert out.values[0] == pytest.approx(2.0)  # 120 and 120.4 both snap to 120
        assert out.values[1] == pytest.approx(5.0)

    def test_domain(self):
        trace = TraceSeries(times=np.array([0.0, 1e-9]), values=np.zeros(2))
        with pytest.raises(DomainError):
            deadtime_truncate(trace, deadtime=-1e-9)
        with pytest.raises(DomainError):
            deadtime_truncate(trace, increment=0.0)


class TestSweepResult:
    def test_axis_must_be_monotone(self):
        with pytest.raises(DomainError):
            SweepResult(axis_name="field_tesla", axis_values=(1.0, 3.0, 2.0),
                        fits=(None, None, None), derived={})

    def test_one_fit_per_point(self):
        with pytest.raises(DomainError):
            SweepResult(axis_name="field_tesla", axis_values=(1.0, 2.0),
                        fits=(None,), derived={})


class TestRelaxationSeries:
    def test_monotone_temperatures_required(self):
        with pytest.raises(DomainError):
            RelaxationSeries(temperatures=np.array([10.0, 5.0]),
                             times=np.array([1e-6, 2e-6]))

    def test_positive_times_required(self):
        with pytest.raises(DomainError):
            RelaxationSeries(temperatures=np.array([5.0, 10.0]),
                             times=np.array([1e-6, -2e-6]))

    def test_kind_validated(self):
        with pytest.raises(DomainError):
            RelaxationSeries(temperatures=np.array([5.0]), times=np.array([1e-6]),
                             kind="T3")
