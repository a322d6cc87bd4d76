import math
import random

import numpy as np
import pytest

from growthdyn.errors import DuplicateRecord, EmptyPeriod, NonPositiveValue, UnbalancedPanel
from growthdyn.panel import PeriodDefinition, RegionYearObservation as Obs, build_panel, restrict
from growthdyn.synth import GeneratorSpec, generate_panel


@pytest.fixture(scope="module")
def big_obs():
    return generate_panel(GeneratorSpec(n_regions=242, n_years=33, seed=7))


@pytest.fixture(scope="module")
def big_panel(big_obs):
    return build_panel(big_obs)


def test_equal_emissions_give_zero_sizes():
    obs = [Obs(r, t, 5.0, 10.0 * (1 + (r == "b"))) for r in "ab" for t in (2000, 2001, 2002)]
    p = build_panel(obs)
    assert np.all(p.s == 0) and np.all(p.r == 0)


def test_hand_computed_two_regions():
    obs = [
        Obs("a", 1, 1.0, 1.0), Obs("b", 1, 1.0, 1.0),
        Obs("a", 2, math.e**2, 1.0), Obs("b", 2, 1.0, 1.0),
    ]
    p = build_panel(obs)
    np.testing.assert_allclose(p.s[:, 1], [1.0, -1.0], rtol=0, atol=1e-15)
    np.testing.assert_allclose(p.r[:, 0], [1.0, -1.0], rtol=0, atol=1e-15)
    assert list(p.growth_years) == [2]


def test_common_factor_removed(big_obs, big_panel):
    scaled = [Obs(o.region_id, o.year, o.emissions * (3.7 if o.year == 2001 else 1.0), o.gdp) for o in big_obs]
    q = build_panel(scaled)
    np.testing.assert_allclose(q.s, big_panel.s, atol=1e-12)
    np.testing.assert_allclose(q.r, big_panel.r, atol=1e-12)


def test_centring_and_differences(big_panel):
    p = big_panel
    assert p.s.shape == (242, 33) and p.r.shape == (242, 32)
    assert np.abs(p.s.mean(axis=0)).max() <= 1e-10
    assert np.abs(p.y.mean(axis=0)).max() <= 1e-10
    assert np.abs(p.r.mean(axis=0)).max() <= 1e-10
    assert np.abs(p.g.mean(axis=0)).max() <= 1e-10
    assert np.array_equal(p.r, p.s[:, 1:] - p.s[:, :-1])
    assert np.array_equal(p.g, p.y[:, 1:] - p.y[:, :-1])
    assert np.array_equal(p.s_lag, p.s[:, :-1])


def test_cumulative_growth_reconstructs_size(big_panel):
    p = big_panel
    np.testing.assert_allclose(p.r.sum(axis=1), p.s[:, -1] - p.s[:, 0], rtol=0, atol=1e-12)


def test_permutation_invariance(big_obs, big_panel):
    shuffled = list(big_obs)
    random.Random(3).shuffle(shuffled)
    q = build_panel(shuffled)
    assert q == big_panel


def test_single_region_rescaling_identity(big_obs, big_panel):
    factor, target = 5.0, big_panel.regions[10]
    q = build_panel([Obs(o.region_id, o.year, o.emissions * (factor if o.region_id == target else 1.0), o.gdp)
                     for o in big_obs])
    n = big_panel.n_regions
    shift = np.full(n, -math.log(factor) / n)
    shift[10] = math.log(factor) * (1 - 1 / n)
    np.testing.assert_allclose(q.s - big_panel.s, np.repeat(shift[:, None], 33, axis=1), atol=1e-12)
    np.testing.assert_allclose(q.r, big_panel.r, atol=1e-12)


def test_unbalanced_lists_gaps():
    obs = [Obs(r, t, 1.0, 1.0) for r in "abc" for t in (1, 2, 3) if not (r == "b" and t == 2)]
    with pytest.raises(UnbalancedPanel) as exc:
        build_panel(obs)
    assert exc.value.missing == [("b", 2)]


@pytest.mark.parametrize("field", ["emissions", "gdp"])
@pytest.mark.parametrize("bad", [0.0, -2.0, float("nan")])
def test_non_positive_rejected(field, bad):
    obs = [Obs(r, t, 1.0, 1.0) for r in "ab" for t in (1, 2)]
    obs[3] = Obs("b", 2, **{"emissions": 1.0, "gdp": 1.0, field: bad})
    with pytest.raises(NonPositiveValue) as exc:
        build_panel(obs)
    assert (exc.value.region_id, exc.value.year) == ("b", 2)


def test_duplicate_rejected():
    obs = [Obs("a", 1, 1.0, 1.0), Obs("b", 1, 1.0, 1.0), Obs("a", 1, 2.0, 1.0)]
    with pytest.raises(DuplicateRecord):
        build_panel(obs)


def test_year_range_filters(big_obs):
    p = build_panel(big_obs, (1995, 2000))
    assert list(p.years) == list(range(1995, 2001))
    assert np.abs(p.s.mean(axis=0)).max() <= 1e-10


def test_panel_is_read_only(big_panel):
    with pytest.raises(ValueError):
        big_panel.s[0, 0] = 1.0


class TestRestrict:
    def test_full_range_identity(self, big_panel):
        assert restrict(big_panel, (1990, 2022)) == big_panel

    def test_pre_ets_growth_years(self, big_panel):
        v = restrict(big_panel, PeriodDefinition("pre-ETS", 1990, 2004))
        assert list(v.growth_years) == list(range(1991, 2005))
        assert v.r.shape == (242, 14)

    def test_boundary_uses_parent_year(self, big_panel):
        v = restrict(big_panel, (2013, 2020))
        assert v.growth_years[0] == 2013
        j = big_panel.year_index(2013)
        np.testing.assert_array_equal(v.r[:, 0], big_panel.s[:, j] - big_panel.s[:, j - 1])
        np.testing.assert_array_equal(v.s_lag[:, 0], big_panel.s[:, j - 1])

    def test_sizes_not_recentred(self, big_panel):
        v = restrict(big_panel, (2000, 2005))
        np.testing.assert_array_equal(v.s, big_panel.s[:, 10:16])

    @pytest.mark.parametrize("period", [(1985, 1995), (2020, 2030), (2005, 2001)])
    def test_outside_range(self, big_panel, period):
        with pytest.raises(EmptyPeriod):
            restrict(big_panel, period)

    def test_observations_flatten_region_major(self, big_panel):
        v = restrict(big_panel, (2005, 2007))
        o = v.observations()
        assert len(o) == 242 * 3
        assert list(o.year[:3]) == [2005, 2006, 2007]
        assert o.region_index[3] == 1
        assert o.r[4] == v.r[1, 1]
