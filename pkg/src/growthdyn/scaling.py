"""Volatility-size scaling from binned statistics.

Region-year growth rates are ranked by the previous year's relative GDP size,
split into equal-count bins, and the log standard deviation of each bin is
regressed on the bin's mean size: ``ln(sigma) = intercept + beta * y``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import TooFewObservations, ZeroVolatilityBin
from .panel import GrowthPanel, restrict

__all__ = ["BinStat", "ScalingFit", "binned_volatility", "fit_scaling", "MIN_BIN_COUNT"]

MIN_BIN_COUNT = 10
VARIABLES = {"emissions": "r", "gdp": "g"}


@dataclass(frozen=True)
class BinStat:
    bin_center: float
    sigma: float
    count: int


@dataclass(frozen=True)
class ScalingFit:
    beta: float
    intercept: float
    beta_se: float
    bins: tuple
    r_squared: float


def binned_volatility(
    panel: GrowthPanel,
    variable: str = "gdp",
    period=None,
    n_bins: int = 20,
    mode: str = "pooled",
) -> list:
    """Equal-count binned growth volatility against relative GDP size.

    ``mode="pooled"`` bins every region-year of the period; ``"per_region"``
    first reduces each region to (mean size, growth standard deviation) and
    bins regions, reporting the root-mean-square of member sigmas.
    Ties in size are broken by region order, then year.
    """
    if variable not in VARIABLES:
        raise ValueError(f"variable must be one of {sorted(VARIABLES)}, got {variable!r}")
    if n_bins < 3:
        raise ValueError("n_bins must be >= 3")
    if mode not in ("pooled", "per_region"):
        raise ValueError(f"unknown mode {mode!r}")
    view = panel if period is None else restrict(panel, period)
    n_growth = len(view.growth_years)
    if n_growth < 2:
        raise TooFewObservations(f"need at least 2 growth years, period has {n_growth}")
    if view.n_regions < n_bins:
        raise TooFewObservations(f"{view.n_regions} regions cannot fill {n_bins} size bins")

    growth = getattr(view, VARIABLES[variable])
    if mode == "pooled":
        obs = view.observations()
        size, values = obs.y_lag, growth.ravel()
        order = np.lexsort((obs.year, obs.region_index, size))
    else:
        size = view.y_lag.mean(axis=1)
        values = growth.std(axis=1, ddof=1)
        order = np.lexsort((np.arange(size.size), size))

    if values.size // n_bins < MIN_BIN_COUNT:
        raise TooFewObservations(
            f"{values.size} observations give fewer than {MIN_BIN_COUNT} per bin with {n_bins} bins"
        )

    bins = []
    for idx in np.array_split(order, n_bins):
        if mode == "pooled":
            sigma = float(np.std(values[idx], ddof=1))
        else:
            sigma = float(np.sqrt(np.mean(values[idx] ** 2)))
        bins.append(BinStat(float(np.mean(size[idx])), sigma, int(idx.size)))
    return bins


def fit_scaling(bins) -> ScalingFit:
    """OLS of ln(sigma) on bin centre; the slope is the scaling exponent."""
    bins = tuple(bins)
    if len(bins) < 3:
        raise TooFewObservations("need at least 3 bins")
    sigma = np.array([b.sigma for b in bins])
    if np.any(sigma <= 0):
        raise ZeroVolatilityBin("a bin has zero growth-rate volatility")
    x = np.array([b.bin_center for b in bins])
    res = stats.linregress(x, np.log(sigma))
    return ScalingFit(
        beta=float(res.slope),
        intercept=float(res.intercept),
        beta_se=float(res.stderr),
        bins=bins,
        r_squared=float(res.rvalue**2),
    )
