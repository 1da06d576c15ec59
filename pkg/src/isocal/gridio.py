"""Gridded time-series containers and their CSV formats.

Three plain-CSV formats cover the pipeline, all UTF-8 with LF endings and
``.`` as the decimal separator:

* observations:       ``time,row,col,value``
* Gaussian forecasts: ``time,row,col,mean,std``
* ensemble forecasts: ``time,row,col,sample_idx,value``

Records may appear in any order, but every (time, row, col) combination
implied by the distinct times and the maximum row/col indices must be
present exactly once (and, for ensembles, carry members 0..k-1). Missing
observations are written as the token ``NaN`` and tracked by a validity
mask; forecast files must be fully populated with strictly positive
spreads. Reads and writes round-trip at full double precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .predictive import Empirical, Gaussian, PredictiveDist

__all__ = [
    "ParseError",
    "GridSeries",
    "ForecastSeries",
    "WindowSpec",
    "Window",
    "read_observations",
    "write_observations",
    "read_forecasts",
    "write_forecasts",
    "select_window",
]

OBS_HEADER = "time,row,col,value"
GAUSSIAN_HEADER = "time,row,col,mean,std"
ENSEMBLE_HEADER = "time,row,col,sample_idx,value"


class ParseError(ValueError):
    """File-format violation, annotated with the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def _fmt(x: float) -> str:
    return "NaN" if math.isnan(x) else repr(float(x))


@dataclass(frozen=True, eq=False)
class GridSeries:
    """T x H x W scalar field indexed by integer times (e.g. months).

    Missing entries hold NaN; `mask` reports which entries are valid.
    """

    times: tuple[int, ...]
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 3 or vals.shape[1] < 1 or vals.shape[2] < 1:
            raise ValueError(f"values must be a T x H x W array, got shape {vals.shape}")
        times = tuple(int(t) for t in self.times)
        if len(times) != vals.shape[0]:
            raise ValueError(f"{len(times)} times for {vals.shape[0]} value slices")
        for i in range(1, len(times)):
            if times[i] <= times[i - 1]:
                raise ValueError(f"out-of-order times: {times[i]} at position {i} follows {times[i - 1]}")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", vals)

    @property
    def h(self) -> int:
        return self.values.shape[1]

    @property
    def w(self) -> int:
        return self.values.shape[2]

    @property
    def mask(self) -> np.ndarray:
        """True where a value is present."""
        return np.isfinite(self.values)


@dataclass(frozen=True, eq=False)
class ForecastSeries:
    """Per-cell predictive distributions over a grid.

    Holds either Gaussian parameter fields (means, stds) or an ensemble
    member axis (samples, shape T x H x W x k). Spreads must be strictly
    positive everywhere; forecast files carry no missing entries.
    """

    times: tuple[int, ...]
    means: np.ndarray | None = None
    stds: np.ndarray | None = None
    samples: np.ndarray | None = None

    def __post_init__(self):
        gaussian = self.means is not None or self.stds is not None
        ensemble = self.samples is not None
        if gaussian == ensemble:
            raise ValueError("provide either means and stds, or samples")
        times = tuple(int(t) for t in self.times)
        if gaussian:
            means = np.asarray(self.means, dtype=np.float64)
            stds = np.asarray(self.stds, dtype=np.float64)
            if means.ndim != 3 or means.shape != stds.shape:
                raise ValueError("means and stds must both be T x H x W")
            if not (np.all(np.isfinite(means)) and np.all(np.isfinite(stds))):
                raise ValueError("forecast parameters must be finite")
            if np.any(stds <= 0.0):
                raise ValueError("nonpositive std in forecast grid")
            shape = means.shape
            means, stds = means.copy(), stds.copy()
            means.flags.writeable = False
            stds.flags.writeable = False
            object.__setattr__(self, "means", means)
            object.__setattr__(self, "stds", stds)
        else:
            samples = np.asarray(self.samples, dtype=np.float64)
            if samples.ndim != 4 or samples.shape[3] < 2:
                raise ValueError("samples must be T x H x W x k with k >= 2")
            if not np.all(np.isfinite(samples)):
                raise ValueError("forecast samples must be finite")
            shape = samples.shape[:3]
            samples = samples.copy()
            samples.flags.writeable = False
            object.__setattr__(self, "samples", samples)
        if len(times) != shape[0]:
            raise ValueError(f"{len(times)} times for {shape[0]} forecast slices")
        for i in range(1, len(times)):
            if times[i] <= times[i - 1]:
                raise ValueError(f"out-of-order times: {times[i]} at position {i} follows {times[i - 1]}")
        object.__setattr__(self, "times", times)

    @property
    def kind(self) -> str:
        return "gaussian" if self.means is not None else "ensemble"

    @property
    def h(self) -> int:
        arr = self.means if self.means is not None else self.samples
        return arr.shape[1]

    @property
    def w(self) -> int:
        arr = self.means if self.means is not None else self.samples
        return arr.shape[2]

    def dist(self, t_index: int, row: int, col: int) -> PredictiveDist:
        """Predictive distribution at one grid point (time given by position)."""
        if self.means is not None:
            return Gaussian(float(self.means[t_index, row, col]), float(self.stds[t_index, row, col]))
        return Empirical(self.samples[t_index, row, col])


@dataclass(frozen=True)
class WindowSpec:
    """Input-window selection: depth k, periodic extension m, step stride."""

    k: int
    m: int = 0
    stride: int = 1

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("window depth k must be at least 1")
        if self.m < 0:
            raise ValueError("periodic extension m must be nonnegative")
        if self.stride < 1:
            raise ValueError("stride must be at least 1")


class Window(NamedTuple):
    times: tuple[int, ...]
    values: np.ndarray  # (k + m) x H x W, newest first


def select_window(gs: GridSeries, t: int, spec: WindowSpec) -> Window:
    """Stack the k+m input slices preceding time ``t``, newest first.

    Slice times are t-1, t-1-stride, t-1-2*stride, ...; every one must be
    present in the series.
    """
    depth = spec.k + spec.m
    if t - depth * spec.stride < gs.times[0]:
        raise ValueError(f"insufficient history before t={t} for depth {depth} at stride {spec.stride}")
    wanted = tuple(t - 1 - i * spec.stride for i in range(depth))
    index = {tv: i for i, tv in enumerate(gs.times)}
    positions = []
    for tv in wanted:
        if tv not in index:
            raise ValueError(f"insufficient history: time {tv} not in series")
        positions.append(index[tv])
    return Window(wanted, gs.values[positions])


def _read_rows(path, expected_headers: tuple[str, ...]):
    """Read (line_number, fields) records, validating the header line."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        if not header:
            raise ParseError("empty file, expected a header", line=1)
        name = header.rstrip("\n").rstrip("\r")
        if name not in expected_headers:
            raise ParseError(f"malformed header {name!r}, expected {' or '.join(expected_headers)}", line=1)
        n_fields = len(name.split(","))
        rows = []
        for lineno, raw in enumerate(fh, start=2):
            stripped = raw.rstrip("\n").rstrip("\r")
            if not stripped:
                continue
            fields = stripped.split(",")
            if len(fields) != n_fields:
                raise ParseError(f"expected {n_fields} fields, got {len(fields)}", line=lineno)
            rows.append((lineno, fields))
    return name, rows


def _parse_int(text: str, what: str, lineno: int) -> int:
    try:
        value = int(text)
    except ValueError:
        raise ParseError(f"invalid {what}: {text!r}", line=lineno) from None
    if value < 0:
        raise ParseError(f"negative {what}: {value}", line=lineno)
    return value


def _parse_float(text: str, what: str, lineno: int, allow_nan: bool = False) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"invalid {what}: {text!r}", line=lineno) from None
    if math.isnan(value) and not allow_nan:
        raise ParseError(f"{what} may not be NaN", line=lineno)
    if math.isinf(value):
        raise ParseError(f"non-finite {what}: {text!r}", line=lineno)
    return value


def _first_missing(seen: np.ndarray, times: list[int]) -> str:
    t_idx, r, c = np.argwhere(~seen)[0][:3]
    return f"(t={times[t_idx]}, row={r}, col={c})"


def read_observations(path) -> GridSeries:
    """Parse an observations CSV into a `GridSeries`.

    Grid dims come from the distinct times and the maximum row/col
    indices; the file must cover that cross product exactly once per
    point. ``NaN`` values mark missing observations.
    """
    _, rows = _read_rows(path, (OBS_HEADER,))
    if not rows:
        raise ParseError("no data records", line=2)
    entries: dict[tuple[int, int, int], tuple[int, float]] = {}
    for lineno, fields in rows:
        t = _parse_int(fields[0], "time", lineno)
        r = _parse_int(fields[1], "row", lineno)
        c = _parse_int(fields[2], "col", lineno)
        v = _parse_float(fields[3], "value", lineno, allow_nan=True)
        key = (t, r, c)
        if key in entries:
            raise ParseError(f"duplicate entry for (t={t}, row={r}, col={c}), "
                             f"first seen on line {entries[key][0]}", line=lineno)
        entries[key] = (lineno, v)

    times = sorted({t for t, _, _ in entries})
    h = max(r for _, r, _ in entries) + 1
    w = max(c for _, _, c in entries) + 1
    t_index = {t: i for i, t in enumerate(times)}
    values = np.full((len(times), h, w), np.nan)
    seen = np.zeros((len(times), h, w), dtype=bool)
    for (t, r, c), (_, v) in entries.items():
        values[t_index[t], r, c] = v
        seen[t_index[t], r, c] = True
    if not seen.all():
        raise ParseError(f"non-rectangular grid: missing entry for {_first_missing(seen, times)}")
    return GridSeries(times=tuple(times), values=values)


def write_observations(gs: GridSeries, path) -> None:
    """Write a `GridSeries` in canonical order (time, then row, then col)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(OBS_HEADER + "\n")
        for ti, t in enumerate(gs.times):
            for r in range(gs.h):
                for c in range(gs.w):
                    fh.write(f"{t},{r},{c},{_fmt(gs.values[ti, r, c])}\n")


def read_forecasts(path) -> ForecastSeries:
    """Parse a forecast CSV, Gaussian or ensemble variant by header."""
    name, rows = _read_rows(path, (GAUSSIAN_HEADER, ENSEMBLE_HEADER))
    if not rows:
        raise ParseError("no data records", line=2)
    if name == GAUSSIAN_HEADER:
        return _read_gaussian_forecasts(rows)
    return _read_ensemble_forecasts(rows)


def _read_gaussian_forecasts(rows) -> ForecastSeries:
    entries: dict[tuple[int, int, int], tuple[int, float, float]] = {}
    for lineno, fields in rows:
        t = _parse_int(fields[0], "time", lineno)
        r = _parse_int(fields[1], "row", lineno)
        c = _parse_int(fields[2], "col", lineno)
        mean = _parse_float(fields[3], "mean", lineno)
        std = _parse_float(fields[4], "std", lineno)
        if std <= 0.0:
            raise ParseError(f"nonpositive std: {std}", line=lineno)
        key = (t, r, c)
        if key in entries:
            raise ParseError(f"duplicate entry for (t={t}, row={r}, col={c}), "
                             f"first seen on line {entries[key][0]}", line=lineno)
        entries[key] = (lineno, mean, std)

    times = sorted({t for t, _, _ in entries})
    h = max(r for _, r, _ in entries) + 1
    w = max(c for _, _, c in entries) + 1
    t_index = {t: i for i, t in enumerate(times)}
    means = np.full((len(times), h, w), np.nan)
    stds = np.full((len(times), h, w), np.nan)
    for (t, r, c), (_, mean, std) in entries.items():
        means[t_index[t], r, c] = mean
        stds[t_index[t], r, c] = std
    seen = np.isfinite(stds)
    if not seen.all():
        raise ParseError(f"non-rectangular grid: missing entry for {_first_missing(seen, times)}")
    return ForecastSeries(times=tuple(times), means=means, stds=stds)


def _read_ensemble_forecasts(rows) -> ForecastSeries:
    entries: dict[tuple[int, int, int, int], tuple[int, float]] = {}
    for lineno, fields in rows:
        t = _parse_int(fields[0], "time", lineno)
        r = _parse_int(fields[1], "row", lineno)
        c = _parse_int(fields[2], "col", lineno)
        s = _parse_int(fields[3], "sample_idx", lineno)
        v = _parse_float(fields[4], "value", lineno)
        key = (t, r, c, s)
        if key in entries:
            raise ParseError(f"duplicate entry for (t={t}, row={r}, col={c}, sample_idx={s}), "
                             f"first seen on line {entries[key][0]}", line=lineno)
        entries[key] = (lineno, v)

    times = sorted({t for t, _, _, _ in entries})
    h = max(r for _, r, _, _ in entries) + 1
    w = max(c for _, _, c, _ in entries) + 1
    k = max(s for _, _, _, s in entries) + 1
    if k < 2:
        raise ParseError("ensemble files need at least 2 members per cell")
    t_index = {t: i for i, t in enumerate(times)}
    samples = np.full((len(times), h, w, k), np.nan)
    for (t, r, c, s), (_, v) in entries.items():
        samples[t_index[t], r, c, s] = v
    seen = np.isfinite(samples)
    if not seen.all():
        ti, r, c, s = np.argwhere(~seen)[0]
        raise ParseError(f"non-rectangular grid: missing sample_idx {s} for "
                         f"(t={times[ti]}, row={r}, col={c}); members must be contiguous 0..{k - 1}")
    return ForecastSeries(times=tuple(times), samples=samples)


def write_forecasts(fs: ForecastSeries, path) -> None:
    """Write a `ForecastSeries` in canonical order, matching its variant."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if fs.kind == "gaussian":
            fh.write(GAUSSIAN_HEADER + "\n")
            for ti, t in enumerate(fs.times):
                for r in range(fs.h):
                    for c in range(fs.w):
                        fh.write(f"{t},{r},{c},{_fmt(fs.means[ti, r, c])},{_fmt(fs.stds[ti, r, c])}\n")
        else:
            fh.write(ENSEMBLE_HEADER + "\n")
            k = fs.samples.shape[3]
            for ti, t in enumerate(fs.times):
                for r in range(fs.h):
                    for c in range(fs.w):
                        for s in range(k):
                            fh.write(f"{t},{r},{c},{s},{_fmt(fs.samples[ti, r, c, s])}\n")
