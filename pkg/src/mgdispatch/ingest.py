"""CSV ingestion, clock alignment, resampling, cleaning and load scaling."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping

import numpy as np

from .core import MicrogridConfig, MicrogridError, TimeSeries

MAX_FILL_GAP = 5  # missing samples; gaps of 6 or more are rejected


class MissingColumn(MicrogridError, KeyError):
    pass


class EmptyFile(MicrogridError, ValueError):
    pass


class IncompatibleResolution(MicrogridError, ValueError):
    pass


class ZeroPeak(MicrogridError, ValueError):
    pass


class GapTooLong(MicrogridError, ValueError):
    pass


@dataclass(frozen=True)
class CsvSchema:
    """Names the timestamp column and each value column with its unit."""

    timestamp: str = "timestamp"
    columns: Mapping[str, str] = field(default_factory=dict)


@dataclass
class RawColumn:
    timestamps: np.ndarray
    values: np.ndarray
    unit: str


@dataclass
class RawTable:
    columns: dict[str, RawColumn]
    dropped: int = 0

    def __len__(self) -> int:
        return max((c.values.size for c in self.columns.values()), default=0)


def parse_timestamp(text: str) -> int:
    """Epoch seconds or RFC-3339; naive times are taken as UTC."""
    s = text.strip()
    try:
        v = float(s)
    except ValueError:
        pass
    else:
        if not math.isfinite(v):
            raise ValueError(f"bad timestamp {text!r}")
        return int(round(v))
    if s.endswith("Z") or s.endswith("z"):
        s = s[:-1] + "+00:00"
    dt = datetime.fromisoformat(s)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(round(dt.timestamp()))


def _parse_value(text: str) -> float:
    v = float(text)
    if not math.isfinite(v):
        raise ValueError("non-finite")
    return v


def parse_csv(path, schema: CsvSchema) -> RawTable:
    """Read a header-first CSV. Rows with any unparseable field are dropped and counted."""
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EmptyFile(f"{path}: file is empty")
        header = [h.strip() for h in header]
        for name in (schema.timestamp, *schema.columns):
            if name not in header:
                raise MissingColumn(f"{path}: missing column {name!r}")
        ts_i = header.index(schema.timestamp)
        col_i = {name: header.index(name) for name in schema.columns}
        stamps, vals, dropped, n_rows = [], {n: [] for n in schema.columns}, 0, 0
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            n_rows += 1
            try:
                ts = parse_timestamp(row[ts_i])
                parsed = {n: _parse_value(row[i]) for n, i in col_i.items()}
            except (ValueError, IndexError):
                dropped += 1
                continue
            stamps.append(ts)
            for n, v in parsed.items():
                vals[n].append(v)
    if n_rows == 0:
        raise EmptyFile(f"{path}: no data rows")

    stamps = np.asarray(stamps, dtype=np.int64)
    order = np.argsort(stamps, kind="stable")
    stamps = stamps[order]
    keep = np.ones(stamps.size, dtype=bool)
    keep[1:] = np.diff(stamps) > 0
    dropped += int((~keep).sum())
    cols = {
        n: RawColumn(stamps[keep], np.asarray(v, dtype=float)[order][keep], schema.columns[n])
        for n, v in vals.items()
    }
    return RawTable(cols, dropped)


def to_series(table: RawTable, column: str, resolution: int | None = None) -> TimeSeries:
    """Place a column on a uniform clock, filling gaps of up to five samples linearly."""
    if column not in table.columns:
        raise MissingColumn(column)
    col = table.columns[column]
    if col.values.size == 0:
        raise EmptyFile(f"column {column!r} has no valid rows")
    ts = col.timestamps
    if resolution is None:
        if ts.size < 2:
            raise IncompatibleResolution("cannot infer resolution from a single row")
        resolution = int(np.median(np.diff(ts)))
    n = int(round((ts[-1] - ts[0]) / resolution)) + 1
    idx = np.rint((ts - ts[0]) / resolution).astype(np.int64)
    off = np.abs(ts - (ts[0] + idx * resolution))
    if np.any(off > resolution / 2):
        raise IncompatibleResolution(f"timestamps of {column!r} do not fit a {resolution}s grid")
    grid = np.full(n, np.nan)
    grid[idx] = col.values
    missing = np.isnan(grid)
    if missing.any():
        run = 0
        for m in missing:
            run = run + 1 if m else 0
            if run > MAX_FILL_GAP:
                raise GapTooLong(f"{column!r}: gap longer than {MAX_FILL_GAP} samples")
        k = np.arange(n)
        grid[missing] = np.interp(k[missing], k[~missing], grid[~missing])
    return TimeSeries(int(ts[0]), resolution, grid, col.unit)


def align(series: Mapping[str, TimeSeries]) -> dict[str, TimeSeries]:
    """Truncate equally-resolved series to their common window."""
    items = dict(series)
    res = {s.resolution for s in items.values()}
    if len(res) != 1:
        raise IncompatibleResolution(f"resample first; resolutions differ: {sorted(res)}")
    r = res.pop()
    start = max(s.start_epoch for s in items.values())
    stop = min(s.end_epoch for s in items.values())
    if stop < start:
        raise EmptyFile("series do not overlap")
    out = {}
    for k, s in items.items():
        if (s.start_epoch - start) % r:
            raise IncompatibleResolution(f"series {k!r} is offset from the common clock")
        i0 = (start - s.start_epoch) // r
        i1 = (stop - s.start_epoch) // r + 1
        out[k] = s.slice(i0, i1)
    return out


def resample(series: TimeSeries, target_resolution: int, mode: str = "aggregate_mean") -> TimeSeries:
    """Change resolution by an integer factor.

    ``aggregate_mean`` averages blocks when downsampling (a trailing partial
    block is dropped) and repeats values when upsampling, so the time
    integral is preserved. ``interpolate_linear`` samples the piecewise-linear
    curve through the points; endpoints are kept exactly.
    """
    if mode not in ("aggregate_mean", "interpolate_linear"):
        raise ValueError(f"unknown resample mode {mode!r}")
    src = series.resolution
    tgt = int(target_resolution)
    if tgt <= 0:
        raise IncompatibleResolution("target resolution must be positive")
    if tgt == src:
        return series
    v = series.values
    if tgt > src:
        if tgt % src:
            raise IncompatibleResolution(f"{tgt}s is not a multiple of {src}s")
        k = tgt // src
        if mode == "aggregate_mean":
            nb = v.size // k
            if nb == 0:
                raise IncompatibleResolution("series shorter than one target step")
            out = v[: nb * k].reshape(nb, k).mean(axis=1)
        else:
            out = v[::k]
        return TimeSeries(series.start_epoch, tgt, out, series.unit)
    if src % tgt:
        raise IncompatibleResolution(f"{tgt}s does not divide {src}s")
    k = src // tgt
    if mode == "aggregate_mean":
        out = np.repeat(v, k)
    else:
        x_new = np.arange((v.size - 1) * k + 1) / k
        out = np.interp(x_new, np.arange(v.size), v)
        out[0], out[-1] = v[0], v[-1]
    return TimeSeries(series.start_epoch, tgt, out, series.unit)


def clip_outliers(series: TimeSeries, lo_quantile: float, hi_quantile: float) -> TimeSeries:
    """Winsorise to the empirical quantiles (linear interpolation between order statistics)."""
    if not 0.0 <= lo_quantile < hi_quantile <= 1.0:
        raise ValueError("need 0 <= lo < hi <= 1")
    lo, hi = np.quantile(series.values, [lo_quantile, hi_quantile])
    return series.with_values(np.clip(series.values, lo, hi))


def scale_load_to_capacity(load: TimeSeries, config: MicrogridConfig, fraction: float = 0.8) -> TimeSeries:
    """Scale so peak demand equals ``fraction`` of total generation capacity."""
    peak = float(load.values.max())
    cap = config.generation_capacity_kw
    if peak <= 0:
        raise ZeroPeak("load has no positive peak")
    if cap <= 0:
        raise ZeroPeak("microgrid has no generation capacity")
    target = fraction * cap
    out = load.values * (target / peak)
    out[load.values == peak] = target  # exact peak despite rounding
    return load.with_values(out)


def rescale_test_to_train(test: TimeSeries, train: TimeSeries) -> TimeSeries:
    """Max-ratio rescaling of a test series onto the training series' peak."""
    tmax, rmax = float(test.values.max()), float(train.values.max())
    if tmax <= 0 or rmax <= 0:
        raise ZeroPeak("both series need a positive maximum")
    out = test.values * (rmax / tmax)
    out[test.values == tmax] = rmax
    return test.with_values(out)


def write_series_csv(path, columns: Mapping[str, TimeSeries], timestamp: str = "timestamp") -> None:
    """Write aligned series as ``timestamp,<name>...`` with epoch-second stamps."""
    cols = list(columns.items())
    ref = cols[0][1]
    for name, s in cols:
        if not s.same_clock(ref):
            raise IncompatibleResolution(f"column {name!r} is not aligned")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([timestamp] + [n for n, _ in cols])
        for i, ep in enumerate(ref.epochs):
            w.writerow([int(ep)] + [repr(float(s.values[i])) for _, s in cols])


def read_series_csv(path, units: Mapping[str, str], resolution: int | None = None,
                    timestamp: str = "timestamp") -> dict[str, TimeSeries]:
    table = parse_csv(path, CsvSchema(timestamp, dict(units)))
    return {name: to_series(table, name, resolution) for name in units}
