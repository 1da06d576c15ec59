"""Isotonic recalibration and verification of probabilistic forecasts."""

from .gridio import ForecastSeries, GridSeries, ParseError, WindowSpec, select_window
from .isotonic import IsotonicMap, fit_isotonic
from .metrics import (
    ReliabilityCurve,
    calibration_error,
    coverage,
    interval_coverage,
    mae_mid_quantile,
    reliability_curve,
    sharpness,
)
from .predictive import Empirical, Gaussian, PredictiveDist, cdf, from_samples, quantile, variance
from .recalibration import (
    CalibratedForecaster,
    CalibrationPair,
    build_calibration_dataset,
    calibrated_cdf,
    calibrated_quantile,
    central_interval,
    empirical_cdf_level,
    fit_calibrator,
    load_model,
    save_model,
)
from .synth import SynthConfig, generate, generate_gridded, true_recalibration_map

__version__ = "0.1.0"

__all__ = [
    "CalibratedForecaster",
    "CalibrationPair",
    "Empirical",
    "ForecastSeries",
    "Gaussian",
    "GridSeries",
    "IsotonicMap",
    "ParseError",
    "PredictiveDist",
    "ReliabilityCurve",
    "SynthConfig",
    "WindowSpec",
    "build_calibration_dataset",
    "calibrated_cdf",
    "calibrated_quantile",
    "calibration_error",
    "cdf",
    "central_interval",
    "coverage",
    "empirical_cdf_level",
    "fit_calibrator",
    "fit_isotonic",
    "from_samples",
    "generate",
    "generate_gridded",
    "interval_coverage",
    "load_model",
    "mae_mid_quantile",
    "quantile",
    "reliability_curve",
    "save_model",
    "select_window",
    "sharpness",
    "true_recalibration_map",
    "variance",
]
