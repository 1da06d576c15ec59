"""Command-line pipelines: synthesize, calibrate, evaluate, emit curves.

Exit codes: 0 success, 1 usage error, 2 input parse/IO error, 3
computation or validation error. Reports are machine-readable JSON by
default; ``evaluate --human`` prints a compact text table with signed
percent deltas instead.

Calibration must be fitted on data disjoint from the evaluation split;
the two invocations cannot see each other's inputs, so keeping the
files distinct is the caller's responsibility (output paths are checked
against input paths, which is the part that can be enforced here).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import gridio
from .gridio import ParseError, read_forecasts, read_observations
from .metrics import (
    ReliabilityCurve,
    calibration_error,
    mae_mid_quantile,
    reliability_curve,
    sharpness,
    write_reliability_csv,
)
from .recalibration import fit_calibrator, grid_points, load_model, save_model
from .synth import SynthConfig, generate_gridded

__all__ = ["main"]


class UsageError(Exception):
    """Bad flag combination or value, detected after argparse."""

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARSE = 2
EXIT_COMPUTE = 3

DEFAULT_LEVELS = "0.05:0.95:0.05"


class _Parser(argparse.ArgumentParser):
    """argparse subclass using exit code 1 for usage errors."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0.0:
        raise argparse.ArgumentTypeError(f"must be positive: {text}")
    return value


def _parse_levels(spec: str) -> np.ndarray:
    """Levels from ``start:stop:step`` or a comma-separated list."""
    try:
        if ":" in spec:
            start, stop, step = (float(x) for x in spec.split(":"))
            count = int(round((stop - start) / step)) + 1
            levels = [round(start + i * step, 10) for i in range(count)]
        else:
            levels = [round(float(x), 10) for x in spec.split(",")]
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"bad levels spec: {spec!r}") from None
    arr = np.asarray(levels, dtype=np.float64)
    if arr.size == 0 or np.any(arr <= 0.0) or np.any(arr >= 1.0) or np.any(np.diff(arr) <= 0.0):
        raise argparse.ArgumentTypeError(
            f"levels must be strictly increasing inside (0, 1): {spec!r}")
    return arr


def _parse_grid(spec: str) -> tuple[int, int, int]:
    try:
        h, w, t = (int(x) for x in spec.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid spec (want HxWxT): {spec!r}") from None
    if h < 1 or w < 1 or t < 1:
        raise argparse.ArgumentTypeError(f"grid dims must be positive: {spec!r}")
    return h, w, t


def _parse_cell(spec: str) -> tuple[int, int]:
    try:
        r, c = (int(x) for x in spec.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad cell spec (want ROW,COL): {spec!r}") from None
    if r < 0 or c < 0:
        raise argparse.ArgumentTypeError(f"cell indices must be nonnegative: {spec!r}")
    return r, c


def _level_key(p: float) -> str:
    return format(p, "g")


def _check_out_distinct(out_path, in_paths):
    resolved = {Path(p).resolve() for p in in_paths if p}
    if out_path and Path(out_path).resolve() in resolved:
        raise UsageError(f"output path {out_path!r} would overwrite an input file")


def _load_grids(args):
    fs = read_forecasts(args.forecasts)
    gs = read_observations(args.observations)
    cells = grid_points(fs, gs)
    return fs, gs, cells


def _flatten(cells):
    dists = [d for cell in cells for d in cell.forecasts]
    obs = np.concatenate([cell.observations for cell in cells])
    if obs.size == 0:
        raise ValueError("no valid forecast/observation pairs")
    return dists, obs


def _metric_block(groups, calibrator, levels, variant):
    """Metrics pooled over groups of (forecasts, observations, cell),
    weighting each group's curve by its point count."""
    total = 0
    emp = np.zeros_like(levels)
    mae_sum = 0.0
    sharp_sum = 0.0
    for dists, obs, cell in groups:
        n = len(obs)
        if n == 0:
            continue
        curve = reliability_curve(dists, obs, levels, calibrator, cell)
        emp += n * curve.empirical
        mae_sum += n * mae_mid_quantile(dists, obs, calibrator, cell)
        sharp_sum += n * sharpness(dists, calibrator, cell)
        total += n
    if total == 0:
        raise ValueError("no valid forecast/observation pairs")
    emp /= total
    ce = calibration_error(ReliabilityCurve(levels, emp, np.ones_like(levels)), variant)
    return {
        "ce": ce,
        "mae": mae_sum / total,
        "sharpness": sharp_sum / total,
        "coverage": {_level_key(p): float(e) for p, e in zip(levels, emp)},
    }


def _delta_pct(before: float, after: float) -> float | None:
    if before == 0.0:
        return None
    return round((after - before) / abs(before) * 100.0, 1)


def _human_delta(pct: float | None) -> str:
    if pct is None:
        return "(n/a)"
    arrow = "↓" if pct < 0 else "↑"
    return f"({arrow} {abs(pct):.1f}%)"


def cmd_calibrate(args) -> int:
    fs, gs, cells = _load_grids(args)
    scope = "per_cell" if args.scope == "per-cell" else "pooled"
    cf = fit_calibrator(fs, gs, scope=scope, interpolation=args.interpolation,
                        min_points_per_cell=args.min_points_per_cell)
    save_model(cf, args.out)
    total = sum(len(cell.observations) for cell in cells)
    incomplete = sum(1 for cell in cells if len(cell.observations) < len(gs.times))
    print(f"scope: {scope}")
    print(f"grid: {gs.h}x{gs.w}, {len(gs.times)} time steps")
    print(f"calibration points: {total}")
    print(f"cells with missing observations excluded from fitting: {incomplete}")
    print(f"model: {args.out}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    fs, gs, cells = _load_grids(args)
    model = load_model(args.model) if args.model else None
    if model is not None and model.scope == "per_cell" and (model.h, model.w) != (gs.h, gs.w):
        raise ValueError(f"grid dimension mismatch: model {model.h}x{model.w}, "
                         f"data {gs.h}x{gs.w}")
    levels = args.levels
    flat_group = [(*_flatten(cells), None)]
    report = {
        "levels": [_level_key(p) for p in levels],
        "ce_variant": args.ce_variant,
        "uncalibrated": _metric_block(flat_group, None, levels, args.ce_variant),
    }
    if model is not None:
        if model.scope == "per_cell":
            groups = [(cell.forecasts, cell.observations, (cell.row, cell.col)) for cell in cells]
        else:
            groups = flat_group
        report["calibrated"] = _metric_block(groups, model, levels, args.ce_variant)
        report["deltas_pct"] = {
            key: _delta_pct(report["uncalibrated"][key], report["calibrated"][key])
            for key in ("ce", "mae", "sharpness")
        }

    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    if args.human:
        _print_human(report, args.ce_variant)
    elif not args.out:
        sys.stdout.write(text)
    return EXIT_OK


def _print_human(report, variant):
    labels = {"ce": f"CE ({variant})", "mae": "MAE", "sharpness": "sharpness"}
    uncal = report["uncalibrated"]
    cal = report.get("calibrated")
    if cal is None:
        for key, label in labels.items():
            print(f"{label:<16}{uncal[key]:>12.6g}")
        return
    deltas = report["deltas_pct"]
    print(f"{'metric':<16}{'uncalibrated':>14}{'calibrated':>14}  delta")
    for key, label in labels.items():
        print(f"{label:<16}{uncal[key]:>14.6g}{cal[key]:>14.6g}  {_human_delta(deltas[key])}")


def cmd_reliability(args) -> int:
    fs, gs, cells = _load_grids(args)
    model = load_model(args.model) if args.model else None
    if model is not None and model.scope == "per_cell" and (model.h, model.w) != (gs.h, gs.w):
        raise ValueError(f"grid dimension mismatch: model {model.h}x{model.w}, "
                         f"data {gs.h}x{gs.w}")
    levels = args.levels

    if args.cell:
        by_pos = {(cell.row, cell.col): cell for cell in cells}
        out = Path(args.out)
        for r, c in args.cell:
            if (r, c) not in by_pos:
                raise ValueError(f"cell out of range: ({r}, {c}) for {gs.h}x{gs.w} grid")
            cell = by_pos[(r, c)]
            use_cell = (r, c) if model is not None and model.scope == "per_cell" else None
            curve = reliability_curve(cell.forecasts, cell.observations, levels, model, use_cell)
            path = out.with_name(f"{out.stem}_cell{r}-{c}{out.suffix}")
            write_reliability_csv(curve, path)
            print(f"curve: {path}")
        return EXIT_OK

    if model is not None and model.scope == "per_cell":
        total = 0
        emp = np.zeros_like(levels)
        for cell in cells:
            n = len(cell.observations)
            if n == 0:
                continue
            curve = reliability_curve(cell.forecasts, cell.observations, levels,
                                      model, (cell.row, cell.col))
            emp += n * curve.empirical
            total += n
        if total == 0:
            raise ValueError("no valid forecast/observation pairs")
        curve = ReliabilityCurve(levels, emp / total, np.ones_like(levels))
    else:
        dists, obs = _flatten(cells)
        curve = reliability_curve(dists, obs, levels, model, None)
    write_reliability_csv(curve, args.out)
    print(f"curve: {args.out}")
    return EXIT_OK


def cmd_synth(args) -> int:
    if (args.n is None) == (args.grid is None):
        raise UsageError("provide exactly one of --n and --grid")
    try:
        cfg = SynthConfig(n=args.n or 0, alpha=args.alpha, bias=args.bias, mode=args.mode,
                          k=args.k, seed=args.seed, grid=args.grid)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    fs, gs = generate_gridded(cfg)
    gridio.write_forecasts(fs, args.out_forecasts)
    gridio.write_observations(gs, args.out_observations)
    print(f"forecasts: {args.out_forecasts} ({fs.kind}, {cfg.n} points)")
    print(f"observations: {args.out_observations}")
    return EXIT_OK


def _build_parser() -> _Parser:
    parser = _Parser(prog="isocal", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    cal = sub.add_parser("calibrate", help="fit a recalibration model from forecast/observation files")
    cal.add_argument("--forecasts", required=True)
    cal.add_argument("--observations", required=True)
    cal.add_argument("--scope", choices=["pooled", "per-cell"], default="pooled")
    cal.add_argument("--interpolation", choices=["linear", "step"], default="linear")
    cal.add_argument("--min-points-per-cell", type=int, default=30)
    cal.add_argument("--out", required=True, help="model JSON path")
    cal.set_defaults(func=cmd_calibrate)

    ev = sub.add_parser("evaluate", help="metrics report, optionally with a fitted model")
    ev.add_argument("--forecasts", required=True)
    ev.add_argument("--observations", required=True)
    ev.add_argument("--model")
    ev.add_argument("--levels", type=_parse_levels, default=_parse_levels(DEFAULT_LEVELS))
    ev.add_argument("--ce-variant", choices=["signed", "absolute", "squared"], default="absolute")
    ev.add_argument("--human", action="store_true", help="text table instead of JSON on stdout")
    ev.add_argument("--out", help="write the JSON report here")
    ev.set_defaults(func=cmd_evaluate)

    rel = sub.add_parser("reliability", help="emit reliability curve CSV")
    rel.add_argument("--forecasts", required=True)
    rel.add_argument("--observations", required=True)
    rel.add_argument("--model")
    rel.add_argument("--levels", type=_parse_levels, default=_parse_levels(DEFAULT_LEVELS))
    rel.add_argument("--cell", type=_parse_cell, action="append",
                     help="ROW,COL; repeatable, one output file per cell")
    rel.add_argument("--out", required=True, help="curve CSV path")
    rel.set_defaults(func=cmd_reliability)

    sy = sub.add_parser("synth", help="generate synthetic forecast/observation files")
    sy.add_argument("--n", type=int)
    sy.add_argument("--grid", type=_parse_grid, help="HxWxT gridded output")
    sy.add_argument("--alpha", type=_positive_float, default=1.0,
                    help="dispersion ratio (reported std = alpha * true std)")
    sy.add_argument("--bias", type=float, default=0.0)
    sy.add_argument("--mode", choices=["gaussian_params", "sample_set"], default="gaussian_params")
    sy.add_argument("--k", type=int, default=10, help="ensemble members in sample_set mode")
    sy.add_argument("--seed", type=int, default=0)
    sy.add_argument("--out-forecasts", required=True)
    sy.add_argument("--out-observations", required=True)
    sy.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    try:
        out_paths = [getattr(args, name, None) for name in ("out", "out_forecasts", "out_observations")]
        in_paths = [getattr(args, name, None) for name in ("forecasts", "observations", "model")]
        for out in out_paths:
            if out:
                _check_out_distinct(out, in_paths)
        return args.func(args)
    except UsageError as exc:
        print(f"isocal: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ParseError as exc:
        print(f"isocal: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as exc:
        print(f"isocal: io error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValueError as exc:
        print(f"isocal: error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
