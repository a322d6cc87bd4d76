"""Moving-window estimation of the convergence model and residual distributions."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .convergence import ConvergenceFit, LadOptions, PeriodDefinition, fit_lad, rescaled_residuals
from .distributions import AepFit, fit_mle
from .errors import GrowthDynError, WindowTooLong
from .panel import GrowthPanel

__all__ = ["WindowEntry", "WindowSeries", "run_moving_windows", "window_seed", "PHASE_MARKERS"]

# first years of the trading-scheme phases (and of the period after the last)
PHASE_MARKERS = (2005, 2008, 2013, 2021)


@dataclass(frozen=True)
class WindowEntry:
    start_year: int
    end_year: int
    fit: Optional[ConvergenceFit]
    aep: Optional[AepFit]
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def label(self) -> str:
        return f"{self.start_year}-{self.end_year}"


@dataclass(frozen=True)
class WindowSeries:
    window_length: int
    entries: tuple
    phase_markers: tuple = PHASE_MARKERS
    seed: int = 0
    diagnostics: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.entries)

    @property
    def end_years(self) -> np.ndarray:
        return np.array([e.end_year for e in self.entries])

    @property
    def failures(self) -> list:
        return [e for e in self.entries if not e.ok]

    def estimates(self, name: str) -> np.ndarray:
        """Per-window value of ``alpha``, ``phi`` or ``beta`` (NaN where the fit failed)."""
        return np.array([getattr(e.fit, name) if e.fit is not None else np.nan for e in self.entries])

    def std_errors(self, name: str) -> np.ndarray:
        return np.array(
            [e.fit.std_errors[name] if e.fit is not None and e.fit.std_errors else np.nan for e in self.entries]
        )


def window_seed(seed: int, start_year: int) -> int:
    """Bootstrap seed of the window starting in ``start_year``; independent of run order."""
    return int(np.random.SeedSequence([int(seed), int(start_year)]).generate_state(1)[0])


def _run_window(panel, start, end, n_boot, seed, options, fit_residuals, aep_options):
    period = PeriodDefinition(f"{start}-{end}", start, end)
    try:
        fit = fit_lad(panel, period, options=options, n_boot=n_boot, seed=window_seed(seed, start))
    except GrowthDynError as exc:
        return WindowEntry(start, end, None, None, f"{type(exc).__name__}: {exc}")
    if not fit_residuals:
        return WindowEntry(start, end, fit, None)
    try:
        aep = fit_mle(rescaled_residuals(fit), **aep_options)
    except (GrowthDynError, ValueError) as exc:
        return WindowEntry(start, end, fit, None, f"{type(exc).__name__}: {exc}")
    error = None if aep.converged else "AEP fit of residuals did not converge"
    return WindowEntry(start, end, fit, aep, error)


def run_moving_windows(
    panel: GrowthPanel,
    window_length: int = 5,
    *,
    n_boot: int = 200,
    seed: int = 0,
    options: LadOptions = LadOptions(),
    fit_residuals: bool = True,
    aep_options: Optional[dict] = None,
) -> WindowSeries:
    """Fit every window of ``window_length`` years, sliding by one year.

    A panel of T years yields T - window_length windows, the first starting at
    the panel's first year. Each window is an ordinary period fit, so its
    growth years follow ``panel.restrict``. Failed windows are kept, with the
    error text, rather than dropped.
    """
    if window_length < 2:
        raise ValueError("window_length must be at least 2")
    if panel.n_years < window_length + 1:
        raise WindowTooLong(
            f"window of {window_length} years needs a panel of at least {window_length + 1} years, "
            f"got {panel.n_years}"
        )
    aep_options = dict(aep_options or {})
    entries = []
    for start in range(panel.first_year, panel.last_year - window_length + 1):
        end = start + window_length - 1
        entries.append(_run_window(panel, start, end, n_boot, seed, options, fit_residuals, aep_options))
    return WindowSeries(window_length, tuple(entries), PHASE_MARKERS, seed)
