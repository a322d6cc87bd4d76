"""Dynamic convergence model estimated by nonlinear least absolute deviations.

The model for centred emissions growth is::

    r[i,t] = alpha * s[i,t-1] + phi * g[i,t] + exp(beta * y[i,t-1]) * eps[i,t]

and the estimator minimises ``sum |r - alpha*s_lag - phi*g| / exp(beta*y_lag)``.
For fixed ``beta`` the problem is a weighted median regression in
``(alpha, phi)``; smoothed IRLS brings it near the optimum and vertex pivoting
finishes it exactly (plain IRLS to tolerance is the fallback). ``beta`` is
profiled out with a grid bracket, golden-section search on [-1, 1] and a
one-dimensional simplex polish.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy import optimize

from . import _lad_kernels as K
from .errors import GrowthDynError, NoConvergence, TooFewObservations
from .panel import GrowthObservations, GrowthPanel, PeriodDefinition, restrict

__all__ = [
    "LadOptions",
    "ConvergenceFit",
    "BootstrapResult",
    "PeriodDefinition",
    "fit_lad",
    "fit_lad_observations",
    "bootstrap_se",
    "rescaled_residuals",
    "residuals_at",
    "lad_objective",
    "fit_l1_fixed_beta",
    "PARAM_NAMES",
]

PARAM_NAMES = ("alpha", "phi", "beta")


@dataclass(frozen=True)
class LadOptions:
    delta: float = 1e-8
    inner_tol: float = 1e-10
    inner_max_iter: int = 10_000
    warm_irls_iter: int = 30
    max_pivots: int = 500
    beta_bounds: tuple = (-1.0, 1.0)
    beta_tol: float = 1e-6
    outer_max_iter: int = 200
    grid_points: int = 21
    use_scaling_start: bool = True


@dataclass(frozen=True)
class ConvergenceFit:
    alpha: float
    phi: float
    beta: float
    objective: float
    residuals: np.ndarray
    n_obs: int
    converged: bool
    period: Optional[PeriodDefinition] = None
    std_errors: Optional[dict] = None
    p_values: Optional[dict] = None
    residual_regions: Optional[np.ndarray] = None
    residual_years: Optional[np.ndarray] = None
    iterations: int = 0
    diagnostics: dict = field(default_factory=dict)

    @property
    def params(self):
        return np.array([self.alpha, self.phi, self.beta])

    def with_bootstrap(self, boot: "BootstrapResult") -> "ConvergenceFit":
        return replace(self, std_errors=boot.std_errors_dict(), p_values=boot.p_values())


@dataclass(frozen=True)
class BootstrapResult:
    std_errors: np.ndarray
    replicates: np.ndarray  # converged replicates x 3
    n_failed: int
    seed: int

    def std_errors_dict(self):
        return dict(zip(PARAM_NAMES, (float(v) for v in self.std_errors)))

    def p_values(self):
        """Two-sided percentile test of a zero coefficient."""
        reps = self.replicates
        lo = np.mean(reps <= 0, axis=0)
        hi = np.mean(reps >= 0, axis=0)
        p = np.minimum(1.0, 2 * np.minimum(lo, hi))
        return dict(zip(PARAM_NAMES, (float(v) for v in p)))


def lad_objective(r, s_lag, g, y_lag, alpha, phi, beta) -> float:
    return float(np.sum(np.abs(r - alpha * s_lag - phi * g) / np.exp(beta * y_lag)))


# --- inner problem -------------------------------------------------------------


def _solve_inner(r, s, g, w, start, opts, basis=(-1, -1)):
    alpha, phi, i, j, it, ok, exact = K.solve_l1(
        r, s, g, w, start[0], start[1], basis[0], basis[1],
        opts.delta, opts.inner_tol, opts.warm_irls_iter, opts.inner_max_iter, opts.max_pivots,
    )
    value = K.weighted_abs_sum(r, s, g, w, alpha, phi)
    return alpha, phi, value, it, ok, (i, j)


def fit_l1_fixed_beta(r, s_lag, g, y_lag=None, beta=0.0, options: LadOptions = LadOptions()):
    """Weighted median regression of ``r`` on ``(s_lag, g)`` with weights ``exp(-beta*y_lag)``."""
    r, s, g = (np.ascontiguousarray(a, dtype=float) for a in (r, s_lag, g))
    w = np.ones_like(r) if y_lag is None else np.exp(-beta * np.asarray(y_lag, dtype=float))
    alpha, phi, value, _, ok, _ = _solve_inner(r, s, g, w, (0.0, 0.0), options)
    if not ok:
        raise NoConvergence("inner L1 solver hit its iteration cap", partial=(alpha, phi))
    return alpha, phi, value


# --- outer problem -------------------------------------------------------------


class _Profile:
    """Profile objective in beta with warm-started inner solves."""

    def __init__(self, r, s, g, y, opts, counts=None):
        self.r, self.s, self.g, self.y = r, s, g, y
        self.counts = counts
        self.opts = opts
        self.cache = {}
        self.start = (0.0, 0.0)
        self.basis = (-1, -1)
        self.inner_iterations = 0
        self.inner_failures = 0

    def __call__(self, beta):
        beta = float(beta)
        if beta in self.cache:
            return self.cache[beta][2]
        w = np.exp(-beta * self.y)
        if self.counts is not None:
            w *= self.counts
        alpha, phi, value, it, ok, basis = _solve_inner(self.r, self.s, self.g, w, self.start, self.opts, self.basis)
        self.inner_iterations += it
        if not ok:
            self.inner_failures += 1
        self.start = (alpha, phi)
        self.basis = basis
        self.cache[beta] = (alpha, phi, value, ok, basis)
        return value

    def best(self):
        beta = min(self.cache, key=lambda b: (self.cache[b][2], b))
        return beta, self.cache[beta]


def _golden(f, lo, hi, tol, max_iter):
    inv = (math.sqrt(5) - 1) / 2
    c = hi - inv * (hi - lo)
    d = lo + inv * (hi - lo)
    fc, fd = f(c), f(d)
    it = 0
    while hi - lo > tol and it < max_iter:
        it += 1
        if fc <= fd:
            hi, d, fd = d, c, fc
            c = hi - inv * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + inv * (hi - lo)
            fd = f(d)
    return it, hi - lo <= tol


def _estimate(r, s, g, y, opts, beta_start=None, counts=None):
    lo, hi = opts.beta_bounds
    prof = _Profile(r, s, g, y, opts, counts)

    # (alpha, phi) start from the unweighted median regression
    prof(0.0)
    grid = np.linspace(lo, hi, opts.grid_points)
    candidates = sorted(set(grid.tolist()) | ({float(np.clip(beta_start, lo, hi))} if beta_start is not None else set()))
    for b in candidates:
        prof(b)
    b0, _ = prof.best()
    j = candidates.index(b0)
    left = candidates[max(j - 1, 0)]
    right = candidates[min(j + 1, len(candidates) - 1)]

    prof.start, prof.basis = prof.cache[b0][:2], prof.cache[b0][4]
    outer_it, outer_ok = _golden(prof, left, right, opts.beta_tol, opts.outer_max_iter)

    b1, _ = prof.best()
    prof.start, prof.basis = prof.cache[b1][:2], prof.cache[b1][4]
    res = optimize.minimize(
        lambda v: prof(min(max(v[0], lo), hi)),
        [b1],
        method="Nelder-Mead",
        options={"initial_simplex": [[b1], [min(b1 + 10 * opts.beta_tol, hi)]], "xatol": opts.beta_tol,
                 "fatol": 0.0, "maxiter": opts.outer_max_iter},
    )
    outer_it += int(res.nit)

    beta, (alpha, phi, value, inner_ok, _) = prof.best()
    converged = bool(outer_ok and inner_ok)
    diag = {
        "inner_iterations": prof.inner_iterations,
        "inner_failures": prof.inner_failures,
        "profile_evaluations": len(prof.cache),
        "beta_at_bound": bool(beta <= lo + opts.beta_tol or beta >= hi - opts.beta_tol),
    }
    return alpha, phi, beta, value, converged, outer_it, diag


def _check_size(obs: GrowthObservations, n_growth_years=None):
    if n_growth_years is not None and n_growth_years < 2:
        raise TooFewObservations(f"need at least 2 growth years, got {n_growth_years}")
    if len(obs) < 4:
        raise TooFewObservations(f"need at least 4 growth observations, got {len(obs)}")


def fit_lad_observations(
    obs: GrowthObservations,
    *,
    period: Optional[PeriodDefinition] = None,
    options: LadOptions = LadOptions(),
    beta_start: Optional[float] = None,
    regions=None,
    raise_on_failure: bool = True,
) -> ConvergenceFit:
    """Fit the model on pooled growth observations (no panel bookkeeping)."""
    _check_size(obs)
    r, s, g, y = (np.ascontiguousarray(getattr(obs, f), dtype=float) for f in ("r", "s_lag", "g", "y_lag"))
    alpha, phi, beta, value, converged, outer_it, diag = _estimate(r, s, g, y, options, beta_start)
    resid = residuals_at(obs, alpha, phi, beta)
    diag["beta_start"] = beta_start
    diag["alpha_sign"] = "convergent" if alpha < 0 else ("divergent" if alpha > 0 else "random walk")
    fit = ConvergenceFit(
        alpha=float(alpha),
        phi=float(phi),
        beta=float(beta),
        objective=float(np.sum(np.abs(resid))),
        residuals=resid,
        n_obs=int(r.size),
        converged=converged,
        period=period,
        residual_regions=None if regions is None else np.asarray(regions, dtype=object)[obs.region_index],
        residual_years=np.asarray(obs.year),
        iterations=outer_it,
        diagnostics=diag,
    )
    if not converged and raise_on_failure:
        raise NoConvergence("LAD estimation hit an iteration cap", partial=fit)
    return fit


def _scaling_start(view):
    from .scaling import binned_volatility, fit_scaling

    try:
        return fit_scaling(binned_volatility(view, "emissions", n_bins=min(20, view.n_regions))).beta
    except (GrowthDynError, ValueError):
        return None


def _as_period(panel, period):
    if period is None:
        return PeriodDefinition("all", panel.first_year, panel.last_year)
    if isinstance(period, PeriodDefinition):
        return period
    start, end = period
    return PeriodDefinition(f"{start}-{end}", int(start), int(end))


def fit_lad(
    panel: GrowthPanel,
    period=None,
    *,
    options: LadOptions = LadOptions(),
    n_boot: int = 0,
    seed: int = 0,
    raise_on_failure: bool = True,
) -> ConvergenceFit:
    """Estimate ``(alpha, phi, beta)`` over ``period``.

    With ``n_boot > 0`` the region-block bootstrap is run and its standard
    errors and percentile p-values are attached.
    """
    period = _as_period(panel, period)
    view = restrict(panel, period)
    obs = view.observations()
    _check_size(obs, len(view.growth_years))
    beta_start = _scaling_start(view) if options.use_scaling_start else None
    fit = fit_lad_observations(
        obs, period=period, options=options, beta_start=beta_start, regions=view.regions,
        raise_on_failure=raise_on_failure,
    )
    if n_boot:
        fit = fit.with_bootstrap(bootstrap_se(panel, period, fit, n_boot, seed, options=options))
    return fit


def bootstrap_se(
    panel: GrowthPanel,
    period,
    fit: ConvergenceFit,
    B: int = 500,
    seed: int = 0,
    *,
    options: LadOptions = LadOptions(),
) -> BootstrapResult:
    """Region-block bootstrap: resample whole regional paths with replacement and refit.

    Replicate ``b`` draws from its own child of ``SeedSequence(seed)``, so the
    result does not depend on the order replicates are run in.
    """
    if B < 100:
        raise ValueError(f"need at least 100 bootstrap replicates, got {B}")
    view = restrict(panel, _as_period(panel, period))
    n, k = view.n_regions, len(view.growth_years)
    arrays = [getattr(view, f) for f in ("r", "s_lag", "g", "y_lag")]
    reps, failed = [], 0
    for child in np.random.SeedSequence(seed).spawn(B):
        rng = np.random.default_rng(child)
        draws = np.bincount(rng.integers(0, n, size=n), minlength=n)
        drawn = np.flatnonzero(draws)
        counts = draws[drawn].astype(float)
        # re-centre each year over the drawn regions, as building a panel from
        # the resampled levels would; beta is only identified with centred sizes.
        # Repeated regions enter once with a multiplicity weight.
        r, s, g, y = (
            np.ascontiguousarray((a[drawn] - counts @ a[drawn] / n).ravel()) for a in arrays
        )
        w = np.repeat(counts, k)
        try:
            alpha, phi, beta, _, ok, _, _ = _estimate(r, s, g, y, options, fit.beta, counts=w)
        except (GrowthDynError, np.linalg.LinAlgError):
            ok = False
        if ok:
            reps.append((alpha, phi, beta))
        else:
            failed += 1
    if failed > 0.1 * B:
        raise NoConvergence(f"{failed} of {B} bootstrap replicates did not converge")
    reps = np.asarray(reps)
    return BootstrapResult(np.std(reps, axis=0, ddof=1), reps, failed, seed)


def rescaled_residuals(fit: ConvergenceFit) -> np.ndarray:
    """Flat sample of ``(r - alpha*s_lag - phi*g) / exp(beta*y_lag)`` at the optimum."""
    return np.array(fit.residuals, dtype=float)


def residuals_at(obs: GrowthObservations, alpha: float, phi: float, beta: float) -> np.ndarray:
    """Rescaled residuals of pooled observations at arbitrary parameters."""
    return (obs.r - alpha * obs.s_lag - phi * obs.g) / np.exp(beta * obs.y_lag)
