import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isocal.isotonic import IsotonicMap
from isocal.metrics import (
    ReliabilityCurve,
    calibration_error,
    coverage,
    interval_coverage,
    mae_mid_quantile,
    reliability_curve,
    sharpness,
    write_reliability_csv,
)
from isocal.predictive import Empirical, Gaussian
from isocal.recalibration import CalibratedForecaster, fit_calibrator
from isocal.synth import SynthConfig, generate

import oracles

LEVELS_19 = np.round(np.arange(1, 20) * 0.05, 10)


def identity_calibrator():
    return CalibratedForecaster("pooled", (IsotonicMap([0.0, 1.0], [0.0, 1.0]),))


class TestCoverage:
    def test_huge_bounds_cover_everything(self):
        assert coverage([1e12, 1e12], [5.0, -3.0]) == 1.0

    def test_non_strict_comparison(self):
        assert coverage([0.0, 0.0, 0.0], [-1.0, 0.0, 1.0]) == pytest.approx(2 / 3)

    def test_equal_bounds_count_as_covered(self):
        obs = [1.0, 2.0, 3.0]
        assert coverage(obs, obs) == 1.0

    def test_rejects_empty_and_mismatch(self):
        with pytest.raises(ValueError):
            coverage([], [])
        with pytest.raises(ValueError):
            coverage([1.0], [1.0, 2.0])

    @given(st.lists(st.floats(-5, 5), min_size=3, max_size=30),
           st.floats(0.05, 0.45), st.floats(0.5, 0.95))
    @settings(max_examples=50, deadline=None)
    def test_monotone_in_level(self, obs, p_lo, p_hi):
        forecasts = [Gaussian(0.0, 1.0)] * len(obs)
        lo = coverage([oracles.normal_quantile(p_lo)] * len(obs), obs)
        hi = coverage([oracles.normal_quantile(p_hi)] * len(obs), obs)
        assert lo <= hi

    def test_interval_coverage(self):
        assert interval_coverage([0.0, 0.0], [1.0, 1.0], [0.5, 2.0]) == 0.5


class TestReliabilityCurve:
    def test_calibrated_forecaster_hugs_diagonal(self):
        forecasts, obs = generate(SynthConfig(n=100_000, alpha=1.0, seed=11))
        curve = reliability_curve(forecasts, obs, np.round(np.arange(1, 10) * 0.1, 10))
        assert np.max(np.abs(curve.empirical - curve.levels)) <= 0.01

    def test_overdispersed_frequency_matches_analytic_value(self):
        forecasts, obs = generate(SynthConfig(n=100_000, alpha=2.0, seed=12))
        curve = reliability_curve(forecasts, obs, [0.9])
        assert curve.empirical[0] == pytest.approx(oracles.DISPERSED_A2_P09, abs=0.005)

    def test_all_observations_below_median(self):
        forecasts = [Gaussian(10.0, 1.0)] * 5
        curve = reliability_curve(forecasts, [0.0] * 5, [0.5])
        assert curve.empirical[0] == 1.0

    def test_unit_weights(self):
        forecasts = [Gaussian(0.0, 1.0)] * 3
        curve = reliability_curve(forecasts, [0.0] * 3, LEVELS_19)
        assert np.all(curve.weights == 1.0)

    def test_rejects_boundary_levels(self):
        with pytest.raises(ValueError):
            reliability_curve([Gaussian(0, 1)], [0.0], [0.0, 0.5])

    def test_in_sample_fit_tracks_grid_levels(self):
        n = 2000
        forecasts, obs = generate(SynthConfig(n=n, alpha=2.0, seed=13))
        cf = fit_calibrator(forecasts, obs)
        curve = reliability_curve(forecasts, obs, LEVELS_19, cf)
        assert np.max(np.abs(curve.empirical - curve.levels)) <= 1.0 / np.sqrt(n) + 1.0 / n

    def test_mixed_forecast_types(self):
        forecasts = [Gaussian(0.0, 1.0), Empirical([-1.0, 0.0, 1.0])]
        curve = reliability_curve(forecasts, [0.0, 0.0], [0.5])
        assert curve.empirical[0] == 1.0


class TestCalibrationError:
    def test_perfect_curve_scores_zero(self):
        curve = ReliabilityCurve(LEVELS_19, LEVELS_19, np.ones_like(LEVELS_19))
        for variant in ("signed", "absolute", "squared"):
            assert calibration_error(curve, variant) == 0.0

    def test_hand_computed_values(self):
        curve = ReliabilityCurve([0.25, 0.5, 0.75], [0.2, 0.5, 0.8], [1.0, 1.0, 1.0])
        assert calibration_error(curve, "signed") == pytest.approx(0.0, abs=1e-15)
        assert calibration_error(curve, "absolute") == pytest.approx(0.1 / 3)
        assert calibration_error(curve, "squared") == pytest.approx(0.005 / 3)

    def test_signed_single_level(self):
        curve = ReliabilityCurve([0.9], [0.98], [1.0])
        assert calibration_error(curve, "signed") == pytest.approx(-0.08)

    def test_unknown_variant(self):
        curve = ReliabilityCurve([0.5], [0.5], [1.0])
        with pytest.raises(ValueError):
            calibration_error(curve, "rms")

    @given(st.lists(st.tuples(st.floats(0.01, 0.99), st.floats(0.0, 2.0)),
                    min_size=1, max_size=20))
    @settings(max_examples=100, deadline=None)
    def test_variant_inequalities(self, rows):
        levels = np.sort(np.unique([r[0] for r in rows]))
        rng = np.random.default_rng(0)
        empirical = rng.uniform(size=levels.size)
        weights = np.asarray([r[1] for r in rows])[: levels.size]
        weights = np.resize(weights, levels.size)
        curve = ReliabilityCurve(levels, empirical, weights)
        signed = calibration_error(curve, "signed")
        absolute = calibration_error(curve, "absolute")
        squared = calibration_error(curve, "squared")
        assert absolute >= abs(signed) - 1e-12
        assert squared <= absolute + 1e-12  # all deviations are within [-1, 1]


class TestSharpness:
    def test_mean_of_variances(self):
        assert sharpness([Gaussian(0, 1.0), Gaussian(5, np.sqrt(3.0))]) == pytest.approx(2.0)

    def test_identity_calibrator_matches_grid_variance(self):
        value = sharpness([Gaussian(0.0, 1.0)], identity_calibrator())
        assert value == pytest.approx(oracles.STD_NORMAL_VAR_512_GRID, abs=1e-9)
        assert value == pytest.approx(1.0, abs=0.01)

    def test_fitted_calibrator_restores_true_spread(self):
        forecasts, obs = generate(SynthConfig(n=20000, alpha=2.0, seed=42))
        cf = fit_calibrator(forecasts, obs)
        value = sharpness([Gaussian(0.0, 2.0)], cf)
        assert value == pytest.approx(1.0, abs=0.1)

    def test_shift_invariance(self):
        base = [Gaussian(m, s) for m, s in [(0, 1), (2, 0.5), (-1, 3)]]
        shifted = [Gaussian(d.mean + 17.5, d.std) for d in base]
        assert sharpness(base) == sharpness(shifted)

    def test_degenerate_calibrator_raises(self):
        cf = CalibratedForecaster("pooled", (IsotonicMap([0.2, 0.8], [0.3, 0.6]),))
        with pytest.raises(ValueError, match="too degenerate"):
            sharpness([Gaussian(0, 1)], cf)

    def test_empirical_forecasts(self):
        d = Empirical(np.linspace(-2, 2, 41))
        assert sharpness([d], identity_calibrator()) <= sharpness([d]) + 1e-9

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            sharpness([])


class TestMaeMidQuantile:
    def test_zero_when_observations_sit_on_medians(self):
        forecasts = [Gaussian(m, 1.0) for m in (0.0, 1.0, -2.0)]
        assert mae_mid_quantile(forecasts, [0.0, 1.0, -2.0]) == 0.0

    def test_identity_calibrator_hand_value(self):
        forecasts = [Gaussian(0.0, 1.0)] * 2
        assert mae_mid_quantile(forecasts, [1.0, -1.0], identity_calibrator()) == pytest.approx(1.0, abs=1e-9)

    def test_symmetric_dispersion_error_leaves_mae_alone(self):
        fit_fc, fit_obs = generate(SynthConfig(n=5000, alpha=2.0, seed=21))
        cf = fit_calibrator(fit_fc, fit_obs)
        test_fc, test_obs = generate(SynthConfig(n=5000, alpha=2.0, seed=22))
        raw = mae_mid_quantile(test_fc, test_obs)
        cal = mae_mid_quantile(test_fc, test_obs, cf)
        assert abs(cal - raw) / raw <= 0.02

    def test_rejects_mismatch(self):
        with pytest.raises(ValueError):
            mae_mid_quantile([Gaussian(0, 1)], [1.0, 2.0])


class TestCurveValidationAndExport:
    def test_levels_must_increase(self):
        with pytest.raises(ValueError):
            ReliabilityCurve([0.5, 0.5], [0.1, 0.2], [1.0, 1.0])

    def test_negative_weights_rejected(self):
        with pytest.raises(ValueError):
            ReliabilityCurve([0.5], [0.5], [-1.0])

    def test_csv_format(self, tmp_path):
        curve = ReliabilityCurve([0.25, 0.5], [0.123456789123, 0.5], [1.0, 1.0])
        path = tmp_path / "curve.csv"
        write_reliability_csv(curve, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "level,empirical,weight"
        assert lines[1] == "0.25,0.123456789,1"
        assert lines[2] == "0.5,0.5,1"
