"""Recalibration of predictive CDFs against held-out observations.

For each held-out pair the forecast assigns a CDF value c = F(Y) to the
outcome; if the forecaster were calibrated these values would be uniform.
The calibration dataset pairs each c with the empirical fraction of CDF
values strictly below it, and a monotone map fitted to those pairs turns
raw CDF levels into empirical ones. Composing the fitted map with a
forecast CDF yields calibrated probabilities; composing its generalized
inverse with the raw quantile function yields calibrated quantiles and
central intervals.

A fitted `CalibratedForecaster` holds one pooled map or one map per grid
cell, and serializes to a single-object JSON model file::

    {"version": 1, "scope": "pooled" | "per_cell", "h": int, "w": int,
     "interpolation": "linear" | "step",
     "maps": [{"breakpoints": [...], "values": [...]}, ...]}

with per-cell maps in row-major order (pooled models carry exactly one
map and h = w = 0). Floats are written with 17 significant digits, which
round-trips doubles exactly.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .gridio import ForecastSeries, GridSeries
from .isotonic import IsotonicMap, fit_isotonic
from .predictive import PredictiveDist, cdf, quantile

__all__ = [
    "CalibrationPair",
    "CalibratedForecaster",
    "CalibratedQuantile",
    "GridCellData",
    "empirical_cdf_level",
    "build_calibration_dataset",
    "grid_points",
    "fit_calibrator",
    "calibrated_cdf",
    "calibrated_quantile",
    "central_interval",
    "save_model",
    "load_model",
    "model_to_json",
]

logger = logging.getLogger(__name__)

MODEL_VERSION = 1
DEFAULT_MIN_POINTS_PER_CELL = 30

# Raw quantile levels used in place of an exactly saturated inverse (the
# requested probability fell on, or beyond, a flat end of the map).
SATURATION_LEVEL_LO = 1e-6
SATURATION_LEVEL_HI = 1.0 - 1e-6


class CalibrationPair(NamedTuple):
    c: float  # CDF value the forecast assigned to the outcome
    y: float  # empirical fraction of CDF values strictly below c


class CalibratedQuantile(NamedTuple):
    value: float
    saturated: bool


class GridCellData(NamedTuple):
    row: int
    col: int
    forecasts: list[PredictiveDist]
    observations: np.ndarray


def empirical_cdf_level(cs: Sequence[float], p: float) -> float:
    """Fraction of CDF values strictly below level ``p``."""
    arr = np.asarray(cs, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("empirical CDF level needs at least one value")
    if np.any(arr < 0.0) or np.any(arr > 1.0) or not np.all(np.isfinite(arr)):
        raise ValueError("calibration point out of unit square")
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"level out of range: {p}")
    return float(np.count_nonzero(arr < p)) / arr.size


def build_calibration_dataset(
    forecasts: Sequence[PredictiveDist], observations: Sequence[float]
) -> list[CalibrationPair]:
    """Pair each forecast's CDF value at the outcome with its empirical level.

    Output order matches input order. Ties among CDF values count strictly,
    so tied points share the empirical level of their common value.
    """
    obs = np.asarray(observations, dtype=np.float64)
    if len(forecasts) != obs.size:
        raise ValueError(f"{len(forecasts)} forecasts for {obs.size} observations")
    if obs.size < 2:
        raise ValueError("calibration set too small: need at least 2 points")
    if not np.all(np.isfinite(obs)):
        raise ValueError("invalid input value: non-finite observation")
    c = np.array([cdf(d, float(y)) for d, y in zip(forecasts, obs)])
    # Strictly-below counts for all points at once via the sorted copy.
    y_levels = np.searchsorted(np.sort(c), c, side="left") / c.size
    return [CalibrationPair(float(ci), float(yi)) for ci, yi in zip(c, y_levels)]


@dataclass(frozen=True)
class CalibratedForecaster:
    """A fitted recalibration map, pooled or one per grid cell."""

    scope: str  # 'pooled' | 'per_cell'
    maps: tuple[IsotonicMap, ...]
    h: int = 0
    w: int = 0

    def __post_init__(self):
        if self.scope not in ("pooled", "per_cell"):
            raise ValueError(f"unknown scope: {self.scope!r}")
        if self.scope == "pooled":
            if len(self.maps) != 1:
                raise ValueError("pooled scope carries exactly one map")
        else:
            if self.h < 1 or self.w < 1:
                raise ValueError("per_cell scope needs positive grid dims")
            if len(self.maps) != self.h * self.w:
                raise ValueError(f"per_cell scope needs {self.h * self.w} maps, got {len(self.maps)}")

    @property
    def interpolation(self) -> str:
        return self.maps[0].interpolation

    def map_for(self, cell: tuple[int, int] | None) -> IsotonicMap:
        """The map governing ``cell`` (ignored under pooled scope)."""
        if self.scope == "pooled":
            return self.maps[0]
        if cell is None:
            raise ValueError("per_cell calibrator requires a cell")
        r, c = cell
        if not (0 <= r < self.h and 0 <= c < self.w):
            raise ValueError(f"cell out of range: ({r}, {c}) for {self.h}x{self.w} grid")
        return self.maps[r * self.w + c]


def grid_points(forecasts: ForecastSeries, observations: GridSeries) -> list[GridCellData]:
    """Align a forecast grid with an observation grid, cell by cell.

    Time steps with a missing observation are dropped from that cell's
    series. Raises on any dimension or time-axis mismatch.
    """
    if (forecasts.h, forecasts.w) != (observations.h, observations.w):
        raise ValueError(f"grid dimension mismatch: forecasts {forecasts.h}x{forecasts.w}, "
                         f"observations {observations.h}x{observations.w}")
    if forecasts.times != observations.times:
        raise ValueError("forecast and observation time axes differ")
    mask = observations.mask
    cells = []
    for r in range(observations.h):
        for c in range(observations.w):
            valid = np.flatnonzero(mask[:, r, c])
            dists = [forecasts.dist(int(ti), r, c) for ti in valid]
            cells.append(GridCellData(r, c, dists, observations.values[valid, r, c]))
    return cells


def _fit_map(forecasts, observations, interpolation: str) -> IsotonicMap:
    pairs = build_calibration_dataset(forecasts, observations)
    c = np.array([p.c for p in pairs])
    y = np.array([p.y for p in pairs])
    return fit_isotonic(c, y, interpolation=interpolation)


def fit_calibrator(
    forecasts,
    observations,
    scope: str = "pooled",
    interpolation: str = "linear",
    min_points_per_cell: int = DEFAULT_MIN_POINTS_PER_CELL,
) -> CalibratedForecaster:
    """Fit the recalibration map(s) on held-out forecast/observation pairs.

    Inputs are flat sequences, or a `ForecastSeries` with a `GridSeries`.
    Pooled scope concatenates every grid cell into one dataset; per-cell
    scope fits one map per cell and requires gridded inputs with at least
    ``min_points_per_cell`` valid time steps in each cell. The data used
    here must stay disjoint from whatever the calibrated forecaster is
    later evaluated on.
    """
    gridded = isinstance(forecasts, ForecastSeries)
    if gridded != isinstance(observations, GridSeries):
        raise ValueError("forecasts and observations must both be flat or both gridded")
    if scope not in ("pooled", "per_cell"):
        raise ValueError(f"unknown scope: {scope!r}")

    if not gridded:
        if scope == "per_cell":
            raise ValueError("per_cell scope requires gridded inputs")
        return CalibratedForecaster("pooled", (_fit_map(list(forecasts), observations, interpolation),))

    cells = grid_points(forecasts, observations)
    n_incomplete = sum(1 for cell in cells if len(cell.forecasts) < len(observations.times))
    if n_incomplete:
        logger.info("%d of %d cells have missing observations excluded from fitting",
                    n_incomplete, len(cells))
    if scope == "pooled":
        dists = [d for cell in cells for d in cell.forecasts]
        obs = np.concatenate([cell.observations for cell in cells])
        return CalibratedForecaster("pooled", (_fit_map(dists, obs, interpolation),))

    maps = []
    for cell in cells:
        if len(cell.forecasts) < min_points_per_cell:
            raise ValueError(f"cell ({cell.row}, {cell.col}) has {len(cell.forecasts)} calibration "
                             f"points, need at least {min_points_per_cell}")
        maps.append(_fit_map(cell.forecasts, cell.observations, interpolation))
    return CalibratedForecaster("per_cell", tuple(maps), h=observations.h, w=observations.w)


def calibrated_cdf(cf: CalibratedForecaster, d: PredictiveDist, y: float,
                   cell: tuple[int, int] | None = None) -> float:
    """Calibrated probability that the outcome does not exceed ``y``."""
    return cf.map_for(cell).evaluate(cdf(d, y))


def calibrated_quantile(cf: CalibratedForecaster, d: PredictiveDist, p: float,
                        cell: tuple[int, int] | None = None) -> CalibratedQuantile:
    """Raw quantile at the level whose calibrated CDF equals ``p``.

    When the map's inverse saturates (exactly 0 or 1, i.e. ``p`` falls
    outside the map's range), the level is clamped near the boundary and
    the result is flagged rather than raising, so batch evaluation stays
    total.
    """
    if not (0.0 < p < 1.0):
        raise ValueError(f"quantile level out of range: {p}")
    raw = cf.map_for(cell).inverse(p)
    saturated = raw == 0.0 or raw == 1.0
    if saturated:
        raw = SATURATION_LEVEL_LO if raw == 0.0 else SATURATION_LEVEL_HI
    return CalibratedQuantile(quantile(d, raw), saturated)


def central_interval(cf: CalibratedForecaster, d: PredictiveDist, level: float,
                     cell: tuple[int, int] | None = None) -> tuple[float, float]:
    """Equal-tailed calibrated interval covering ``level`` probability."""
    if not (0.0 < level < 1.0):
        raise ValueError(f"interval level out of range: {level}")
    lo = calibrated_quantile(cf, d, (1.0 - level) / 2.0, cell)
    hi = calibrated_quantile(cf, d, (1.0 + level) / 2.0, cell)
    return lo.value, hi.value


def _fmt17(x: float) -> str:
    return format(float(x), ".17g")


def model_to_json(cf: CalibratedForecaster) -> str:
    """Serialize to the model JSON document (17 significant digits)."""
    rendered = []
    for m in cf.maps:
        bps = ", ".join(_fmt17(v) for v in m.breakpoints)
        vals = ", ".join(_fmt17(v) for v in m.values)
        rendered.append(f'{{"breakpoints": [{bps}], "values": [{vals}]}}')
    maps_doc = ", ".join(rendered)
    return (f'{{"version": {MODEL_VERSION}, "scope": "{cf.scope}", "h": {cf.h}, "w": {cf.w}, '
            f'"interpolation": "{cf.interpolation}", "maps": [{maps_doc}]}}\n')


def save_model(cf: CalibratedForecaster, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(model_to_json(cf))


def load_model(path) -> CalibratedForecaster:
    """Read a model JSON file back into a `CalibratedForecaster`."""
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"malformed model file: {exc}") from None
    if not isinstance(doc, dict) or doc.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model version: {doc.get('version')!r}")
    for key in ("scope", "h", "w", "interpolation", "maps"):
        if key not in doc:
            raise ValueError(f"model file missing field {key!r}")
    interpolation = doc["interpolation"]
    maps = tuple(
        IsotonicMap(np.asarray(m["breakpoints"]), np.asarray(m["values"]), interpolation)
        for m in doc["maps"]
    )
    return CalibratedForecaster(doc["scope"], maps, h=int(doc["h"]), w=int(doc["w"]))
