"""Balanced regional panel of relative sizes and centred growth rates.

For region ``i`` and year ``t``::

    s[i, t] = ln E[i, t] - mean_j ln E[j, t]        (relative emission size)
    y[i, t] = ln GDP[i, t] - mean_j ln GDP[j, t]    (relative GDP size)
    r[i, t] = s[i, t] - s[i, t-1]                   (centred emissions growth)
    g[i, t] = y[i, t] - y[i, t-1]                   (centred GDP growth)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping, Optional

import numpy as np

from .errors import DuplicateRecord, EmptyPeriod, NonPositiveValue, UnbalancedPanel

__all__ = [
    "RegionYearObservation",
    "PeriodDefinition",
    "CANONICAL_PERIODS",
    "GrowthPanel",
    "GrowthObservations",
    "build_panel",
    "restrict",
]


@dataclass(frozen=True)
class RegionYearObservation:
    region_id: Hashable
    year: int
    emissions: float
    gdp: float
    dev_class: Optional[str] = None


@dataclass(frozen=True)
class PeriodDefinition:
    name: str
    start_year: int
    end_year: int

    def __post_init__(self):
        if self.start_year > self.end_year:
            raise ValueError(f"period {self.name!r}: start {self.start_year} > end {self.end_year}")

    @property
    def label(self):
        return f"{self.name} ({self.start_year}-{self.end_year})"


CANONICAL_PERIODS = (
    PeriodDefinition("full", 1990, 2022),
    PeriodDefinition("pre-ETS", 1990, 2004),
    PeriodDefinition("ETS-1", 2005, 2007),
    PeriodDefinition("ETS-2", 2008, 2012),
    PeriodDefinition("ETS-3", 2013, 2020),
)


@dataclass(frozen=True)
class GrowthObservations:
    """Pooled growth observations, one row per region and growth year (region-major)."""

    region_index: np.ndarray
    year: np.ndarray
    r: np.ndarray
    g: np.ndarray
    s_lag: np.ndarray
    y_lag: np.ndarray

    def __len__(self):
        return self.r.size

    def take(self, idx):
        return GrowthObservations(*(getattr(self, f)[idx] for f in self.__dataclass_fields__))


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class GrowthPanel:
    """Relative sizes (``s``, ``y``: regions x years) and growth rates.

    Growth arrays (``r``, ``g``) are aligned with ``growth_years`` and carry the
    previous-year sizes ``s_lag``/``y_lag`` needed by the dynamic model. On a
    freshly built panel ``growth_years == years[1:]``; a restricted view keeps
    the first year's growth when the parent holds the year before it.
    """

    regions: tuple
    years: np.ndarray
    s: np.ndarray
    y: np.ndarray
    growth_years: np.ndarray
    r: np.ndarray
    g: np.ndarray
    s_lag: np.ndarray
    y_lag: np.ndarray
    dev_class: Mapping = None

    @property
    def n_regions(self):
        return len(self.regions)

    @property
    def n_years(self):
        return len(self.years)

    @property
    def first_year(self):
        return int(self.years[0])

    @property
    def last_year(self):
        return int(self.years[-1])

    def observations(self) -> GrowthObservations:
        n, k = self.r.shape
        return GrowthObservations(
            region_index=np.repeat(np.arange(n), k),
            year=np.tile(self.growth_years, n),
            r=self.r.ravel(),
            g=self.g.ravel(),
            s_lag=self.s_lag.ravel(),
            y_lag=self.y_lag.ravel(),
        )

    def year_index(self, year):
        return int(year) - self.first_year

    def __eq__(self, other):
        if not isinstance(other, GrowthPanel):
            return NotImplemented
        arrays = ("years", "s", "y", "growth_years", "r", "g", "s_lag", "y_lag")
        return self.regions == other.regions and all(
            np.array_equal(getattr(self, a), getattr(other, a)) for a in arrays
        )


def _validate(observations):
    seen = {}
    for obs in observations:
        key = (obs.region_id, int(obs.year))
        if key in seen:
            raise DuplicateRecord(f"duplicate record for region {obs.region_id!r}, year {obs.year}")
        for name in ("emissions", "gdp"):
            v = getattr(obs, name)
            if not (isinstance(v, (int, float, np.floating, np.integer)) and math.isfinite(v) and v > 0):
                raise NonPositiveValue(
                    f"{name} must be finite and > 0 for region {obs.region_id!r}, year {obs.year}: {v!r}",
                    region_id=obs.region_id,
                    year=obs.year,
                )
        seen[key] = obs
    return seen


def _region_order(ids):
    try:
        return tuple(sorted(ids))
    except TypeError:
        return tuple(sorted(ids, key=repr))


def build_panel(observations: Iterable[RegionYearObservation], year_range=None) -> GrowthPanel:
    """Build the centred panel; ``year_range`` is an inclusive ``(first, last)`` pair.

    Records outside ``year_range`` are ignored. Every region present must have a
    record for every year in the range.
    """
    records = _validate(observations)
    if not records:
        raise EmptyPeriod("no observations")
    all_years = sorted({y for _, y in records})
    first, last = (all_years[0], all_years[-1]) if year_range is None else map(int, year_range)
    if first > last:
        raise EmptyPeriod(f"empty year range {first}-{last}")
    years = np.arange(first, last + 1)
    records = {k: v for k, v in records.items() if first <= k[1] <= last}
    regions = _region_order({rid for rid, _ in records})
    if not regions:
        raise EmptyPeriod(f"no observations in {first}-{last}")

    missing = [(rid, int(t)) for rid in regions for t in years if (rid, int(t)) not in records]
    if missing:
        raise UnbalancedPanel(missing)

    log_e = np.empty((len(regions), len(years)))
    log_gdp = np.empty_like(log_e)
    dev = {}
    for i, rid in enumerate(regions):
        for j, t in enumerate(years):
            obs = records[(rid, int(t))]
            log_e[i, j] = math.log(obs.emissions)
            log_gdp[i, j] = math.log(obs.gdp)
            if obs.dev_class is not None:
                dev.setdefault(rid, obs.dev_class)

    s = log_e - log_e.mean(axis=0)
    y = log_gdp - log_gdp.mean(axis=0)
    return GrowthPanel(
        regions=regions,
        years=years,
        s=_frozen(s),
        y=_frozen(y),
        growth_years=years[1:].copy(),
        r=_frozen(s[:, 1:] - s[:, :-1]),
        g=_frozen(y[:, 1:] - y[:, :-1]),
        s_lag=_frozen(s[:, :-1]),
        y_lag=_frozen(y[:, :-1]),
        dev_class=dev,
    )


def restrict(panel: GrowthPanel, period) -> GrowthPanel:
    """View of ``panel`` over ``period`` (a PeriodDefinition or ``(start, end)``).

    Sizes are not re-centred. Growth for the first year of the slice is kept
    when the parent panel holds the preceding year.
    """
    start, end = (period.start_year, period.end_year) if isinstance(period, PeriodDefinition) else period
    start, end = int(start), int(end)
    if start > end or start < panel.first_year or end > panel.last_year:
        raise EmptyPeriod(
            f"period {start}-{end} is not inside the panel range {panel.first_year}-{panel.last_year}"
        )
    keep = (panel.years >= start) & (panel.years <= end)
    gkeep = (panel.growth_years >= start) & (panel.growth_years <= end)
    return GrowthPanel(
        regions=panel.regions,
        years=panel.years[keep],
        s=panel.s[:, keep],
        y=panel.y[:, keep],
        growth_years=panel.growth_years[gkeep],
        r=panel.r[:, gkeep],
        g=panel.g[:, gkeep],
        s_lag=panel.s_lag[:, gkeep],
        y_lag=panel.y_lag[:, gkeep],
        dev_class=panel.dev_class,
    )
