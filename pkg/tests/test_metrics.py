import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracle
from conftest import random_config, random_state
from taxkinetics import presets
from taxkinetics.dynamics import equilibrium
from taxkinetics.errors import ConfigurationError, DegenerateDistributionError
from taxkinetics.kinetic_core import EnforcementParams, ModelConfig, build_tensors
from taxkinetics.metrics import (gini, gini_mean_difference, lorenz, report, sector_mean_income,
                                 tax_revenue)

R9 = np.arange(1, 10) * 10.0


def test_lorenz_two_class():
    curve = lorenz([0.5, 0.0, 0.5], [10, 20, 30])
    assert curve.points == [(0.0, 0.0), (0.5, 0.25), (1.0, 1.0)]


def test_lorenz_single_class():
    x = np.zeros(9)
    x[4] = 1.0
    assert lorenz(x, R9).points == [(0.0, 0.0), (1.0, 1.0)]
    assert gini(x, R9) == 0.0


def test_lorenz_uniform_is_convex_below_diagonal():
    curve = lorenz(np.full(9, 1 / 9), R9)
    p, i = curve.population, curve.income
    assert p[-1] == 1.0 and i[-1] == 1.0
    assert np.all(np.diff(p) >= 0) and np.all(np.diff(i) >= 0)
    assert np.all(i <= p + 1e-15)
    slopes = np.diff(i) / np.diff(p)
    assert np.all(np.diff(slopes) > 0)


def test_lorenz_sorts_and_aggregates_sectors():
    x = np.array([[0.25, 0.25], [0.0, 0.5]])  # class incomes 30 then 10
    assert lorenz(x, [30, 10]).points == [(0.0, 0.0), (0.5, 0.25), (1.0, 1.0)]


def test_lorenz_zero_income():
    with pytest.raises(DegenerateDistributionError):
        lorenz(np.zeros(3), [10, 20, 30])


def test_lorenz_shape_mismatch():
    with pytest.raises(ConfigurationError):
        lorenz(np.full(4, 0.25), [10, 20, 30])


def test_gini_two_class():
    assert gini([0.5, 0.0, 0.5], [10, 20, 30]) == pytest.approx(0.25, abs=1e-12)


def test_sector_means():
    np.testing.assert_allclose(sector_mean_income(np.full(27, 1 / 27), R9), [50.0] * 3)
    x = np.zeros((9, 3))
    x[2, :2] = 0.5
    with pytest.raises(DegenerateDistributionError):
        sector_mean_income(x, R9)
    x[2, 2] = 0.0
    x[2] = [0.4, 0.4, 0.2]
    np.testing.assert_allclose(sector_mean_income(x, R9), [30.0] * 3)


def test_evaders_richer_at_equilibrium(scenario1_config):
    res = equilibrium(scenario1_config, presets.TABLE_MU, EnforcementParams())
    means = sector_mean_income(res.state.x, scenario1_config.incomes)
    assert means[1] > means[0] and means[2] > means[0]


def test_tax_revenue_zero_exchange():
    cfg = ModelConfig(presets.INCOMES, 0.0, presets.SCENARIO_1.config().tau, (1.0, 0.5, 0.25))
    x = random_state(np.random.default_rng(0), 9, 3)
    assert tax_revenue(x, build_tensors(cfg), EnforcementParams(0.3, 1.5)) == 0.0


@pytest.mark.parametrize("n,m", [(3, 1), (4, 2), (9, 3)])
def test_tax_revenue_matches_oracle(n, m):
    rng = np.random.default_rng(n + m)
    cfg = random_config(rng, n, m)
    enf = EnforcementParams(0.35, 1.7)
    x = random_state(rng, n, m)
    ref = oracle.tax_revenue(list(cfg.r), cfg.S, cfg.tau, cfg.theta_ev, enf.sigma, enf.xi, x)
    assert tax_revenue(x, build_tensors(cfg, enf), enf) == pytest.approx(ref, rel=1e-13)


def test_tax_revenue_compliant_ignores_enforcement():
    cfg = ModelConfig(presets.INCOMES, 0.1, presets.SCENARIO_1.config().tau, (1.0, 1.0, 1.0))
    t = build_tensors(cfg)
    x = random_state(np.random.default_rng(4), 9, 3)
    values = [tax_revenue(x, t, EnforcementParams(s, xi)) for s in (0, 0.5, 1) for xi in (1.2, 2.0)]
    np.testing.assert_allclose(values, values[0], rtol=1e-15)


def test_tax_revenue_shape_mismatch(scenario1_config):
    with pytest.raises(ConfigurationError):
        tax_revenue(np.full(9, 1 / 9), build_tensors(scenario1_config))


def test_report_fields(scenario1_config):
    x = random_state(np.random.default_rng(2), 9, 3)
    enf = EnforcementParams(0.1, 1.3)
    rep = report(x, build_tensors(scenario1_config, enf), enf)
    assert 0 <= rep.gini <= 1 and rep.tax_revenue > 0
    assert len(rep.sector_mean_income) == 3
    assert (rep.sigma, rep.xi) == (0.1, 1.3)


states = st.integers(0, 10_000).map(lambda s: random_state(np.random.default_rng(s), 9, 3))


@settings(max_examples=100, deadline=None)
@given(x=states, scale=st.floats(1e-3, 1e3))
def test_property_gini_scale_free(x, scale):
    assert gini(x, R9 * scale) == pytest.approx(gini(x, R9), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(x=states)
def test_property_gini_formulas_agree(x):
    g = gini(x, R9)
    assert 0.0 <= g <= 1.0
    assert g == pytest.approx(gini_mean_difference(x, R9), abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(x=states, s1=st.floats(0, 1), s2=st.floats(0, 1), xi1=st.floats(1.0001, 2), xi2=st.floats(1.0001, 2))
def test_property_revenue_monotone_in_enforcement(x, s1, s2, xi1, xi2):
    cfg = presets.SCENARIO_1.config()
    t = build_tensors(cfg)
    lo, hi = sorted((s1, s2))
    a, b = sorted((xi1, xi2))
    tr = lambda s, xi: tax_revenue(x, t, EnforcementParams(s, xi))
    assert tr(lo, a) >= 0
    assert tr(hi, a) >= tr(lo, a) - 1e-18
    assert tr(lo, b) >= tr(lo, a) - 1e-18
