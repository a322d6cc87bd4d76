import numpy as np
import pytest
from scipy import stats

from growthdyn.distributions import AepParams, cdf as aep_cdf, mean as aep_mean
from growthdyn.errors import InvalidSpec
from growthdyn.panel import build_panel
from growthdyn.synth import GdpProcess, GeneratorSpec, ResidualLaw, generate_panel, simulate, write_csv


def test_noiseless_null_has_zero_growth():
    spec = GeneratorSpec(
        n_regions=20, n_years=10, true_alpha=0.0, true_phi=0.0, true_beta=0.0,
        residual_law=ResidualLaw("laplace", 0.0), gdp_process=GdpProcess(shock_scale=0.0),
    )
    p = build_panel(generate_panel(spec))
    assert np.all(p.r == 0) and np.all(p.g == 0)


def test_deterministic():
    spec = GeneratorSpec(n_regions=10, n_years=5, seed=3)
    assert generate_panel(spec) == generate_panel(spec)
    assert generate_panel(spec) != generate_panel(GeneratorSpec(n_regions=10, n_years=5, seed=4))


@pytest.mark.parametrize("gdp", [GdpProcess(), GdpProcess("subunits", rho=0.3)])
def test_round_trip_through_panel(gdp):
    sim = simulate(GeneratorSpec(n_regions=50, n_years=12, gdp_process=gdp, common_trend=-0.02, seed=5))
    p = build_panel(sim.observations)
    np.testing.assert_allclose(p.s, sim.s, rtol=0, atol=1e-12)
    np.testing.assert_allclose(p.y, sim.y, rtol=0, atol=1e-12)
    np.testing.assert_allclose(p.r, np.diff(sim.s, axis=1), rtol=0, atol=1e-12)
    np.testing.assert_allclose(p.g, np.diff(sim.y, axis=1), rtol=0, atol=1e-12)


# innovations are only identified up to the yearly centring, so the AEP law is
# placed at zero mean
_skew = AepParams(0.06, 0.03, 1.2, 0.9, 0.0)
ZERO_MEAN_AEP = AepParams(0.06, 0.03, 1.2, 0.9, -aep_mean(_skew))


@pytest.mark.parametrize(
    "law,dist",
    [
        (ResidualLaw("laplace", 0.05), stats.laplace(scale=0.05).cdf),
        (ResidualLaw("normal", 0.05), stats.norm(scale=0.05).cdf),
        (ResidualLaw("aep", params=ZERO_MEAN_AEP), lambda x: aep_cdf(x, ZERO_MEAN_AEP)),
    ],
)
def test_true_parameter_residuals_follow_law(law, dist):
    spec = GeneratorSpec(n_regions=500, n_years=201, residual_law=law, seed=9)
    p = build_panel(generate_panel(spec))
    o = p.observations()
    resid = (o.r - spec.true_alpha * o.s_lag - spec.true_phi * o.g) / np.exp(spec.true_beta * o.y_lag)
    assert resid.size >= 10**5
    assert stats.kstest(resid, dist).statistic < 0.01


def test_phi_schedule_length_checked():
    with pytest.raises(InvalidSpec):
        GeneratorSpec(n_years=5, true_phi=[0.1, 0.2])


@pytest.mark.parametrize(
    "kw",
    [
        {"n_regions": 1},
        {"n_years": 2},
        {"residual_law": ResidualLaw("laplace", -1.0)},
        {"residual_law": ResidualLaw("cauchy", 1.0)},
        {"residual_law": ResidualLaw("aep")},
        {"gdp_process": GdpProcess(rho=1.5)},
        {"gdp_process": GdpProcess(kind="ar1")},
    ],
)
def test_invalid_specs(kw):
    with pytest.raises(InvalidSpec):
        GeneratorSpec(**kw)


def test_csv_writer(tmp_path):
    obs = generate_panel(GeneratorSpec(n_regions=3, n_years=4))
    write_csv(obs, tmp_path / "e.csv", tmp_path / "g.csv")
    lines = (tmp_path / "e.csv").read_text().splitlines()
    assert lines[0] == "region_id,year,emissions"
    assert len(lines) == 13
    assert (tmp_path / "g.csv").read_text().splitlines()[0] == "region_id,year,gdp"
