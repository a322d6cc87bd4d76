import itertools
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from growthdyn.convergence import (
    LadOptions,
    bootstrap_se,
    fit_l1_fixed_beta,
    fit_lad,
    fit_lad_observations,
    lad_objective,
    rescaled_residuals,
    residuals_at,
)
from growthdyn.distributions import fit_mle
from growthdyn.errors import NoConvergence, TooFewObservations
from growthdyn.panel import CANONICAL_PERIODS, build_panel
from growthdyn.synth import GeneratorSpec, ResidualLaw, generate_panel

TRUTH = (-0.004, 0.266, -0.085)


def make_panel(**kw):
    return build_panel(generate_panel(GeneratorSpec(**kw)))


def null_spec(seed, **kw):
    return dict(true_alpha=0.0, true_phi=0.0, true_beta=0.0, residual_law=ResidualLaw("laplace", 0.05), seed=seed, **kw)


def brute_force_l1(r, s, g, w=None):
    """Exhaustive search over vertices: some optimum of a 2-coefficient L1 fit passes through two rows."""
    w = np.ones_like(r) if w is None else w
    best = (np.inf, None)
    for i, j in itertools.combinations(range(r.size), 2):
        det = s[i] * g[j] - s[j] * g[i]
        if abs(det) < 1e-12:
            continue
        a = (r[i] * g[j] - r[j] * g[i]) / det
        p = (s[i] * r[j] - s[j] * r[i]) / det
        v = np.sum(w * np.abs(r - a * s - p * g))
        if v < best[0]:
            best = (v, (a, p))
    return best[1][0], best[1][1], best[0]


@pytest.fixture(scope="module")
def truth_panel():
    return make_panel(true_alpha=TRUTH[0], true_phi=TRUTH[1], true_beta=TRUTH[2], seed=3)


@pytest.fixture(scope="module")
def truth_fit(truth_panel):
    return fit_lad(truth_panel, n_boot=200, seed=1)


def test_recovers_truth_within_three_se(truth_fit):
    assert truth_fit.converged
    for name, true in zip(("alpha", "phi", "beta"), TRUTH):
        est = getattr(truth_fit, name)
        assert abs(est - true) <= 3 * truth_fit.std_errors[name], name


def test_fit_invariants(truth_panel, truth_fit):
    obs = truth_panel.observations()
    assert truth_fit.residuals.size == truth_fit.n_obs == len(obs)
    recomputed = lad_objective(obs.r, obs.s_lag, obs.g, obs.y_lag, truth_fit.alpha, truth_fit.phi, truth_fit.beta)
    assert recomputed == pytest.approx(truth_fit.objective, abs=1e-10)
    assert all(v >= 0 for v in truth_fit.std_errors.values())
    assert truth_fit.period.start_year == 1990 and truth_fit.period.end_year == 2022
    assert truth_fit.diagnostics["alpha_sign"] == "convergent"


def test_objective_optimal_under_perturbation(truth_panel, truth_fit):
    obs = truth_panel.observations()
    opts = LadOptions()
    base = np.array([truth_fit.alpha, truth_fit.phi, truth_fit.beta])
    f0 = lad_objective(obs.r, obs.s_lag, obs.g, obs.y_lag, *base)
    steps = (10 * opts.inner_tol, 10 * opts.inner_tol, 10 * opts.beta_tol)
    for k, h in enumerate(steps):
        for sign in (-1, 1):
            p = base.copy()
            p[k] += sign * h
            assert lad_objective(obs.r, obs.s_lag, obs.g, obs.y_lag, *p) >= f0 * (1 - 1e-14)


def test_null_model_within_two_se():
    fit = fit_lad(make_panel(**null_spec(seed=5)), n_boot=200, seed=2)
    for name in ("alpha", "phi", "beta"):
        assert abs(getattr(fit, name)) <= 2 * fit.std_errors[name], name


def test_residuals_at_zero_parameters_are_raw_growth(truth_panel):
    obs = truth_panel.observations()
    np.testing.assert_array_equal(residuals_at(obs, 0.0, 0.0, 0.0), obs.r)


def test_rescaled_residuals_match_fit(truth_panel, truth_fit):
    obs = truth_panel.observations()
    np.testing.assert_allclose(
        rescaled_residuals(truth_fit),
        residuals_at(obs, truth_fit.alpha, truth_fit.phi, truth_fit.beta),
        rtol=0, atol=1e-15,
    )


def test_residual_median_near_zero(truth_panel, truth_fit):
    res = rescaled_residuals(truth_fit).reshape(truth_panel.n_regions, -1)
    rng = np.random.default_rng(0)
    meds = [np.median(res[rng.integers(0, res.shape[0], res.shape[0])]) for _ in range(200)]
    assert abs(np.median(res)) <= 2 * np.std(meds, ddof=1)


def test_laplace_innovations_give_unit_shapes(truth_fit):
    aep = fit_mle(rescaled_residuals(truth_fit))
    assert abs(aep.params.b_l - 1) <= 3 * aep.std_errors["b_l"]
    assert abs(aep.params.b_r - 1) <= 3 * aep.std_errors["b_r"]


def test_scale_equivariance(truth_panel, truth_fit):
    c = 3.0
    obs = truth_panel.observations()
    scaled = fit_lad_observations(replace(obs, r=c * obs.r, g=c * obs.g), beta_start=truth_fit.beta)
    se = truth_fit.std_errors
    assert abs(scaled.beta - truth_fit.beta) <= 2 * se["beta"]
    assert abs(scaled.phi - truth_fit.phi) <= 2 * se["phi"]
    assert abs(scaled.alpha / c - truth_fit.alpha) <= 2 * se["alpha"]
    # the residual scale follows the data scale
    assert scaled.objective == pytest.approx(c * truth_fit.objective, rel=1e-6)


def test_bootstrap_deterministic():
    p = make_panel(n_regions=60, n_years=8, seed=1)
    fit = fit_lad(p)
    a = bootstrap_se(p, None, fit, B=100, seed=7)
    b = bootstrap_se(p, None, fit, B=100, seed=7)
    np.testing.assert_array_equal(a.std_errors, b.std_errors)
    assert not np.array_equal(a.std_errors, bootstrap_se(p, None, fit, B=100, seed=8).std_errors)


def test_bootstrap_needs_100_replicates():
    p = make_panel(n_regions=30, n_years=6)
    with pytest.raises(ValueError):
        bootstrap_se(p, None, fit_lad(p), B=50)


def test_bootstrap_matches_monte_carlo_spread():
    kw = dict(n_regions=242, n_years=10)
    est = np.array([fit_lad(make_panel(**null_spec(seed=100 + k, **kw))).params for k in range(50)])
    mc_sd = est.std(axis=0, ddof=1)
    p = make_panel(**null_spec(seed=100, **kw))
    boot = bootstrap_se(p, None, fit_lad(p), B=200, seed=0).std_errors
    np.testing.assert_array_less(np.abs(boot / mc_sd - 1), 0.30)


def test_period_fit_uses_restricted_years(truth_panel):
    pre = CANONICAL_PERIODS[1]
    fit = fit_lad(truth_panel, pre)
    assert fit.n_obs == truth_panel.n_regions * (pre.end_year - pre.start_year)
    assert set(np.unique(fit.residual_years)) == set(range(1990 + 1, 2005))
    assert fit.residual_regions[0] == truth_panel.regions[0]


def test_single_growth_year_rejected(truth_panel):
    with pytest.raises(TooFewObservations):
        fit_lad(truth_panel, (1990, 1991))


def test_iteration_cap_is_flagged(truth_panel):
    opts = LadOptions(outer_max_iter=1)
    with pytest.raises(NoConvergence) as info:
        fit_lad(truth_panel, options=opts)
    assert info.value.partial is not None and not info.value.partial.converged
    assert not fit_lad(truth_panel, options=opts, raise_on_failure=False).converged


@pytest.mark.parametrize("seed", range(10))
def test_l1_reduction_matches_vertex_enumeration(seed):
    rng = np.random.default_rng(seed)
    p = make_panel(n_regions=int(rng.integers(3, 11)), n_years=int(rng.integers(3, 6)), seed=seed)
    obs = p.observations()
    a, ph, v = fit_l1_fixed_beta(obs.r, obs.s_lag, obs.g)
    oa, oph, ov = brute_force_l1(obs.r, obs.s_lag, obs.g)
    assert a == pytest.approx(oa, abs=1e-6)
    assert ph == pytest.approx(oph, abs=1e-6)
    assert v == pytest.approx(ov, rel=1e-10)


@settings(max_examples=60, deadline=None)
@given(
    st.integers(4, 40),
    st.integers(0, 2**32 - 1),
    st.floats(-1.0, 1.0),
)
def test_weighted_l1_never_worse_than_vertex_search(n, seed, beta):
    rng = np.random.default_rng(seed)
    s, g, y = rng.normal(size=(3, n))
    r = rng.laplace(size=n) + 0.5 * s - 0.2 * g
    _, _, v = fit_l1_fixed_beta(r, s, g, y, beta=beta)
    _, _, ov = brute_force_l1(r, s, g, np.exp(-beta * y))
    assert v <= ov * (1 + 1e-10)
