"""Monthly baselines, anomalies, regional averages and threshold shocks.

The baseline of a series is its per-calendar-month cellwise mean over a
reference window (default 1950-1980). Anomalies are deviations from that
baseline. A shock series keeps only the periods whose regional anomaly
clears a threshold and the sign/season/extreme filters; every other
period is an exact zero so regression designs keep a full time axis.
"""

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import months
from .errors import EmptyRegion, InsufficientHistory, NonConformable
from .grid import SurfaceSeries
from .ingest import format_float

DEFAULT_REFERENCE_WINDOW = (1950, 1980)
DEFAULT_THRESHOLD_WINDOW = (2001, 2021)

SIGNS = ("positive", "negative", "both")
SEASONS = ("all", "spring", "summer", "autumn", "winter")


@dataclass(frozen=True, eq=False)
class MonthlyBaseline:
    """Twelve cellwise month means over a reference window."""

    domain: object
    month_means: np.ndarray = field(repr=False)
    reference_window: tuple = DEFAULT_REFERENCE_WINDOW

    def __post_init__(self):
        means = np.asarray(self.month_means, dtype=float)
        if means.shape != (12,) + self.domain.shape:
            raise NonConformable(
                f"baseline shape {means.shape} does not match domain"
            )
        object.__setattr__(self, "month_means", means)

    def expand(self, times):
        """Series whose frame at t is the baseline of t's calendar month."""
        idx = months.month_numbers(times) - 1
        return SurfaceSeries(self.domain, times, self.month_means[idx], "baseline")


@dataclass(frozen=True, eq=False)
class ScalarSeries:
    """Plain monthly scalar series (regional means, anomaly averages)."""

    times: np.ndarray
    values: np.ndarray
    name: str = "value"

    def __post_init__(self):
        times = months.check_monthly(
            np.asarray(self.times, dtype="datetime64[M]"), self.name
        )
        values = np.asarray(self.values, dtype=float)
        if values.shape != (len(times),):
            raise NonConformable("scalar series shape mismatch")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return len(self.times)

    def slice_window(self, start, end):
        sel = (self.times >= start) & (self.times <= end)
        return type(self)(self.times[sel], self.values[sel], self.name)


@dataclass(frozen=True)
class ShockConditioning:
    """Sign/season/extreme filters applied on top of the base threshold."""

    sign: str = "positive"
    season: str = "all"
    extreme_multiplier: float = 1.0

    def __post_init__(self):
        if self.sign not in SIGNS:
            raise ValueError(f"sign must be one of {SIGNS}")
        if self.season not in SEASONS:
            raise ValueError(f"season must be one of {SEASONS}")
        if self.extreme_multiplier < 1.0:
            raise ValueError("extreme_multiplier must be >= 1")


@dataclass(frozen=True, eq=False)
class ShockSeries:
    """Thresholded anomaly series; filtered-out periods are exact zeros."""

    times: np.ndarray
    values: np.ndarray
    threshold: float
    conditioning: ShockConditioning
    name: str = "shock"

    def __post_init__(self):
        times = months.check_monthly(
            np.asarray(self.times, dtype="datetime64[M]"), "shock series"
        )
        values = np.asarray(self.values, dtype=float)
        if values.shape != (len(times),):
            raise NonConformable("shock series shape mismatch")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    def __len__(self):
        return len(self.times)

    @property
    def n_events(self):
        return int(np.count_nonzero(self.values))

    def slice_window(self, start, end):
        sel = (self.times >= start) & (self.times <= end)
        return ShockSeries(self.times[sel], self.values[sel], self.threshold,
                           self.conditioning, self.name)


# -- operations ----------------------------------------------------------


def compute_baseline(series, window=DEFAULT_REFERENCE_WINDOW):
    """Cellwise mean per calendar month over the reference window."""
    year = months.years(series.times)
    in_window = (year >= window[0]) & (year <= window[1])
    if not in_window.any():
        raise InsufficientHistory(
            f"no frames inside reference window {window[0]}-{window[1]}"
        )
    month = months.month_numbers(series.times)
    means = np.empty((12,) + series.domain.shape)
    for m in range(1, 13):
        sel = in_window & (month == m)
        if not sel.any():
            raise InsufficientHistory(
                f"reference window {window[0]}-{window[1]} has no month {m:02d}"
            )
        means[m - 1] = series.values[sel].mean(axis=0)
    return MonthlyBaseline(series.domain, means, tuple(window))


def anomaly(series, baseline):
    """Deviation of each frame from its calendar-month baseline."""
    if series.domain is not baseline.domain:
        raise NonConformable("series and baseline live on different domains")
    idx = months.month_numbers(series.times) - 1
    values = series.values - baseline.month_means[idx]
    return SurfaceSeries(series.domain, series.times, values,
                         f"{series.name}_anomaly")


def regional_mean(series, region_mask=None):
    """Weight-renormalized mean over a region, one value per period."""
    domain = series.domain
    if region_mask is None:
        combined = domain.mask
    else:
        region_mask = np.asarray(region_mask, dtype=bool)
        if region_mask.shape != domain.shape:
            raise NonConformable(
                f"region shape {region_mask.shape} does not match grid"
            )
        combined = region_mask & domain.mask
    w = domain.weights[combined]
    total = w.sum()
    if total <= 0:
        raise EmptyRegion("region has no overlap with valid cells")
    flat = series.values[:, combined]
    return ScalarSeries(series.times, flat @ (w / total),
                        f"{series.name}_regional_mean")


def default_threshold(anomaly_series, window=DEFAULT_THRESHOLD_WINDOW):
    """Mean anomaly over the window; this is the base shock threshold."""
    year = months.years(anomaly_series.times)
    sel = (year >= window[0]) & (year <= window[1])
    if not sel.any():
        raise InsufficientHistory(
            f"no observations inside threshold window {window[0]}-{window[1]}"
        )
    value = float(anomaly_series.values[sel].mean())
    if value <= 0.0:
        warnings.warn(
            f"degenerate threshold {value}: shock construction needs a "
            "strictly positive threshold",
            stacklevel=2,
        )
    return value


def make_shocks(anomaly_series, threshold, conditioning=None, name=None):
    """Zero out every period failing the threshold and conditioning filters.

    A period passes when its deviation strictly exceeds the threshold on
    the conditioned side, its calendar month lies in the requested season,
    and its magnitude reaches threshold * extreme_multiplier.
    """
    if conditioning is None:
        conditioning = ShockConditioning()
    if not threshold > 0:
        raise ValueError(f"threshold must be > 0, got {threshold}")
    dev = anomaly_series.values
    if conditioning.sign == "positive":
        keep = dev > threshold
    elif conditioning.sign == "negative":
        keep = dev < -threshold
    else:
        keep = np.abs(dev) > threshold
    keep &= np.abs(dev) >= threshold * conditioning.extreme_multiplier
    keep &= months.season_mask(anomaly_series.times, conditioning.season)
    values = np.where(keep, dev, 0.0)
    if name is None:
        bits = [conditioning.sign, conditioning.season]
        if conditioning.extreme_multiplier > 1.0:
            bits.append(f"x{conditioning.extreme_multiplier:g}")
        name = "_".join(bits)
    return ShockSeries(anomaly_series.times, values, float(threshold),
                       conditioning, name)


def shock_variants(anomaly_series, threshold, extreme_multiplier=1.5,
                   variants=("all", "spring", "summer", "autumn", "winter",
                             "positive", "negative", "extreme")):
    """Standard battery of conditioned shock series keyed by variant name.

    'all' and the four seasons use the positive sign; 'extreme' is the
    positive all-season filter with the magnitude multiplier applied.
    """
    table = {}
    for variant in variants:
        if variant in SEASONS:
            cond = ShockConditioning(sign="positive", season=variant)
        elif variant in ("positive", "negative"):
            cond = ShockConditioning(sign=variant, season="all")
        elif variant == "extreme":
            cond = ShockConditioning(sign="positive", season="all",
                                     extreme_multiplier=extreme_multiplier)
        else:
            raise ValueError(f"unknown shock variant {variant!r}")
        table[variant] = make_shocks(anomaly_series, threshold, cond,
                                     name=variant)
    return table


def write_shock_csv(shock, path):
    """Export a shock series as ``time,value`` for external inspection."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["time", "value"])
        for t, v in zip(shock.times, shock.values):
            writer.writerow([str(t), format_float(v)])
