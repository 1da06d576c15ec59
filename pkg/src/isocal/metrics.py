"""Forecast verification: coverage, reliability, calibration error,
sharpness and median absolute error.

Every function here is pure, takes forecasts as a flat sequence of
predictive distributions, and accepts an optional calibrator (with an
optional grid cell selecting the map under per-cell scope). Reductions
run in fixed input order so repeated runs are bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .predictive import Gaussian, PredictiveDist, quantile, std_normal_quantile, variance
from .recalibration import SATURATION_LEVEL_HI, SATURATION_LEVEL_LO, CalibratedForecaster

__all__ = [
    "ReliabilityCurve",
    "coverage",
    "interval_coverage",
    "reliability_curve",
    "calibration_error",
    "sharpness",
    "mae_mid_quantile",
    "write_reliability_csv",
]

CE_VARIANTS = ("signed", "absolute", "squared")

SHARPNESS_GRID = 512
_SHARPNESS_LEVELS = (np.arange(SHARPNESS_GRID) + 0.5) / SHARPNESS_GRID
MAX_SATURATED_FRACTION = 0.05

_GAUSSIAN_CHUNK = 8192


@dataclass(frozen=True, eq=False)
class ReliabilityCurve:
    """Nominal confidence levels with their observed frequencies."""

    levels: np.ndarray
    empirical: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        levels = np.asarray(self.levels, dtype=np.float64)
        empirical = np.asarray(self.empirical, dtype=np.float64)
        weights = np.asarray(self.weights, dtype=np.float64)
        if levels.ndim != 1 or levels.size == 0:
            raise ValueError("levels must be a nonempty 1-d sequence")
        if empirical.shape != levels.shape or weights.shape != levels.shape:
            raise ValueError("levels, empirical and weights must have equal length")
        if np.any(levels < 0.0) or np.any(levels > 1.0):
            raise ValueError("levels must lie in [0, 1]")
        if levels.size > 1 and np.any(np.diff(levels) <= 0.0):
            raise ValueError("levels must be strictly increasing")
        if np.any(weights < 0.0):
            raise ValueError("weights must be nonnegative")
        for name, arr in (("levels", levels), ("empirical", empirical), ("weights", weights)):
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


def coverage(quantile_bounds: Sequence[float], observations: Sequence[float]) -> float:
    """Fraction of observations at or below their forecast upper bound."""
    bounds = np.asarray(quantile_bounds, dtype=np.float64)
    obs = np.asarray(observations, dtype=np.float64)
    if bounds.size == 0:
        raise ValueError("coverage of an empty set is undefined")
    if bounds.shape != obs.shape:
        raise ValueError(f"{bounds.size} bounds for {obs.size} observations")
    return float(np.count_nonzero(obs <= bounds)) / bounds.size


def interval_coverage(lows, highs, observations) -> float:
    """Fraction of observations falling inside their [low, high] interval."""
    lo = np.asarray(lows, dtype=np.float64)
    hi = np.asarray(highs, dtype=np.float64)
    obs = np.asarray(observations, dtype=np.float64)
    if lo.size == 0 or lo.shape != obs.shape or hi.shape != obs.shape:
        raise ValueError("interval coverage needs equal-length nonempty inputs")
    return float(np.count_nonzero((obs >= lo) & (obs <= hi))) / obs.size


def _gaussian_params(forecasts) -> tuple[np.ndarray, np.ndarray] | None:
    if all(isinstance(d, Gaussian) for d in forecasts):
        means = np.array([d.mean for d in forecasts])
        stds = np.array([d.std for d in forecasts])
        return means, stds
    return None


def _quantile_bounds(forecasts, level: float, params) -> np.ndarray:
    """Per-forecast quantiles at one raw level, vectorized when Gaussian."""
    if params is not None:
        means, stds = params
        return means + stds * std_normal_quantile(level)
    return np.array([quantile(d, level) for d in forecasts])


def _raw_level(calibrator, cell, p: float) -> float:
    if calibrator is None:
        return p
    raw = calibrator.map_for(cell).inverse(p)
    if raw == 0.0:
        return SATURATION_LEVEL_LO
    if raw == 1.0:
        return SATURATION_LEVEL_HI
    return raw


def reliability_curve(
    forecasts: Sequence[PredictiveDist],
    observations: Sequence[float],
    levels: Sequence[float],
    calibrator: CalibratedForecaster | None = None,
    cell: tuple[int, int] | None = None,
) -> ReliabilityCurve:
    """Observed frequency of staying below the (calibrated) upper bound
    at each nominal level. Weights are all 1.
    """
    levels_arr = np.asarray(levels, dtype=np.float64)
    if levels_arr.ndim != 1 or levels_arr.size == 0:
        raise ValueError("levels must be a nonempty 1-d sequence")
    if np.any(levels_arr <= 0.0) or np.any(levels_arr >= 1.0):
        raise ValueError("levels must lie strictly inside (0, 1)")
    if levels_arr.size > 1 and np.any(np.diff(levels_arr) <= 0.0):
        raise ValueError("levels must be strictly increasing")
    params = _gaussian_params(forecasts)
    empirical = np.empty_like(levels_arr)
    for j, p in enumerate(levels_arr):
        bounds = _quantile_bounds(forecasts, _raw_level(calibrator, cell, float(p)), params)
        empirical[j] = coverage(bounds, observations)
    return ReliabilityCurve(levels_arr, empirical, np.ones_like(levels_arr))


def calibration_error(curve: ReliabilityCurve, variant: str = "absolute") -> float:
    """Weighted mean deviation between nominal and observed levels.

    ``signed`` keeps the raw differences (miscalibration directions can
    cancel), ``absolute`` takes magnitudes and ``squared`` squares them;
    all three divide by the number of levels.
    """
    if variant not in CE_VARIANTS:
        raise ValueError(f"unknown calibration error variant: {variant!r}")
    dev = curve.levels - curve.empirical
    if variant == "absolute":
        dev = np.abs(dev)
    elif variant == "squared":
        dev = dev * dev
    return float(np.sum(curve.weights * dev) / curve.levels.size)


def _calibrated_quantile_rows(forecasts, raw_levels, params):
    """Yield per-forecast quantile vectors at the given raw levels."""
    if params is not None:
        means, stds = params
        z = std_normal_quantile(raw_levels)
        for start in range(0, means.size, _GAUSSIAN_CHUNK):
            block = means[start:start + _GAUSSIAN_CHUNK, None] + stds[start:start + _GAUSSIAN_CHUNK, None] * z[None, :]
            yield from block
    else:
        for d in forecasts:
            if isinstance(d, Gaussian):
                yield d.mean + d.std * std_normal_quantile(raw_levels)
            else:
                xs = d.samples
                positions = (np.arange(xs.size) + 0.5) / xs.size
                yield np.interp(raw_levels, positions, xs)


def sharpness(
    forecasts: Sequence[PredictiveDist],
    calibrator: CalibratedForecaster | None = None,
    cell: tuple[int, int] | None = None,
) -> float:
    """Mean forecast variance, after recalibration when a map is given.

    The recalibrated variance has no closed form, so it is taken over the
    quantiles at the 512 midpoint levels (i - 0.5)/512, making results
    reproducible bit for bit. Exactly saturated levels are clamped near
    the boundary; if more than 5% of the grid saturates for a forecast
    the map is too flat for a meaningful spread and an error is raised.
    """
    if len(forecasts) == 0:
        raise ValueError("sharpness of an empty forecast set is undefined")
    if calibrator is None:
        return float(np.mean([variance(d) for d in forecasts]))

    iso = calibrator.map_for(cell)
    raw = iso.inverse(_SHARPNESS_LEVELS)
    saturated = (raw == 0.0) | (raw == 1.0)
    if np.mean(saturated) > MAX_SATURATED_FRACTION:
        raise ValueError("calibrator too degenerate for sharpness")
    raw = np.where(raw == 0.0, SATURATION_LEVEL_LO, raw)
    raw = np.where(raw == 1.0, SATURATION_LEVEL_HI, raw)

    params = _gaussian_params(forecasts)
    total = 0.0
    for q in _calibrated_quantile_rows(forecasts, raw, params):
        total += float(np.mean(q * q) - np.mean(q) ** 2)
    return total / len(forecasts)


def mae_mid_quantile(
    forecasts: Sequence[PredictiveDist],
    observations: Sequence[float],
    calibrator: CalibratedForecaster | None = None,
    cell: tuple[int, int] | None = None,
) -> float:
    """Mean absolute error of the (calibrated) median forecast."""
    obs = np.asarray(observations, dtype=np.float64)
    if obs.size == 0 or len(forecasts) != obs.size:
        raise ValueError(f"{len(forecasts)} forecasts for {obs.size} observations")
    params = _gaussian_params(forecasts)
    medians = _quantile_bounds(forecasts, _raw_level(calibrator, cell, 0.5), params)
    return float(np.mean(np.abs(obs - medians)))


def write_reliability_csv(curve: ReliabilityCurve, path) -> None:
    """Write ``level,empirical,weight`` rows with 9 significant digits."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("level,empirical,weight\n")
        for p, e, w in zip(curve.levels, curve.empirical, curve.weights):
            fh.write(f"{p:.9g},{e:.9g},{w:.9g}\n")
