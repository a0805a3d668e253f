import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracle
from conftest import random_config, random_state
from taxkinetics import presets
from taxkinetics.errors import ConfigurationError, ConstraintViolation
from taxkinetics.kinetic_core import (EnforcementParams, ModelConfig, PopulationState, audited_rates,
                                      build_payer_matrix, build_tensors, effective_rates, rhs_audit,
                                      rhs_base, taxation_functional, transition_coefficients)

R9 = tuple(10.0 * j for j in range(1, 10))


def small_config(n, m, seed=0):
    return random_config(np.random.default_rng(seed), n, m)


# payer matrix

def test_payer_first_row_is_zero():
    p = build_payer_matrix(R9)
    assert np.all(p[0] == 0.0)


def test_payer_base_rule_and_diagonal():
    p = build_payer_matrix(R9)
    assert p[1, 2] == pytest.approx(20 / 360, abs=1e-15)
    assert p[4, 4] == pytest.approx(50 / 180, abs=1e-15)


def test_payer_matches_oracle():
    p = build_payer_matrix(R9)
    ref = oracle.payer(list(R9))
    for (h, k), v in ref.items():
        assert p[h - 1, k - 1] == pytest.approx(v, abs=1e-15)


def test_payer_last_column_zero_and_corner():
    p = build_payer_matrix(R9)
    assert np.all(p[:, -1] == 0.0)
    assert p[-1, 0] == pytest.approx(10 / 180)


def test_payer_two_classes():
    # only the column-1 / row-n exception survives the zero row and column
    np.testing.assert_array_equal(build_payer_matrix((10.0, 20.0)), [[0.0, 0.0], [0.25, 0.0]])


@pytest.mark.parametrize("r", [(10, 20, 15), (0, 10, 20), (-5, 10), (10, 10, 20)])
def test_payer_rejects_bad_incomes(r):
    with pytest.raises(ConfigurationError):
        build_payer_matrix(r)


# rates

def test_effective_rates_compliant_is_tau(scenario1_config):
    theta = effective_rates(scenario1_config)
    assert np.array_equal(theta[:, 0], np.asarray(scenario1_config.tau))


def test_effective_rate_class9_sector3(scenario1_config):
    assert effective_rates(scenario1_config)[8, 2] == pytest.approx(0.1075, abs=1e-15)


def test_effective_rates_total_evasion():
    cfg = ModelConfig(r=(10, 20, 30), S=0.1, tau=(0.2, 0.3, 0.4), theta_ev=(0.0,))
    assert np.all(effective_rates(cfg) == 0.0)


def test_audited_rates_examples():
    assert audited_rates(np.array([[0.215]]), np.array([0.43]), 2.0)[0, 0] == pytest.approx(0.645, abs=1e-15)
    assert audited_rates(np.array([[0.0]]), np.array([0.5]), 2.0)[0, 0] == 1.0
    tau = np.array([0.2, 0.3])
    assert np.array_equal(audited_rates(tau[:, None], tau, 1.37), tau[:, None])


@pytest.mark.parametrize("xi", [1.0, 2.5, 0.5])
def test_audited_rates_rejects_xi(xi):
    with pytest.raises(ConstraintViolation, match="penalty"):
        audited_rates(np.zeros((1, 1)), np.array([0.3]), xi)


def test_audited_rates_rejects_high_tau():
    with pytest.raises(ConstraintViolation):
        audited_rates(np.zeros((1, 1)), np.array([0.6]), 1.5)


# configuration validation

def test_config_rejects_large_exchange():
    with pytest.raises(ConfigurationError):
        ModelConfig(r=(10, 20, 30), S=10.0, tau=(0.2, 0.3, 0.4), theta_ev=(1.0,))


def test_config_warns_on_moderate_exchange():
    with pytest.warns(RuntimeWarning):
        ModelConfig(r=(10, 20, 30), S=2.0, tau=(0.2, 0.3, 0.4), theta_ev=(1.0,))


def test_config_default_exchange_is_silent():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        presets.SCENARIO_1.config()


@pytest.mark.parametrize("kwargs", [
    dict(tau=(0.2, 0.3)),
    dict(tau=(0.3, 0.2, 0.4)),
    dict(theta_ev=(1.2,)),
    dict(sector_weights=(0.5,)),
    dict(theta_ev=(1.0, 0.5), sector_weights=(0.7, 0.7)),
    dict(r=(10,), tau=(0.2,)),
])
def test_config_rejects(kwargs):
    base = dict(r=(10, 20, 30), S=0.1, tau=(0.2, 0.3, 0.4), theta_ev=(1.0,))
    base.update(kwargs)
    with pytest.raises(ConfigurationError):
        ModelConfig(**base)


def test_enforcement_bounds():
    with pytest.raises(ConfigurationError):
        EnforcementParams(sigma=1.5)
    with pytest.raises(ConstraintViolation):
        EnforcementParams(sigma=0.1, xi=2.5)


def test_population_state_is_read_only(scenario1_config):
    x = PopulationState.validated(np.full(27, 1 / 27), scenario1_config)
    with pytest.raises(ValueError):
        x.x[0] = 1.0
    assert x.grid.shape == (9, 3)


def test_population_state_rejects_denormalized(scenario1_config):
    with pytest.raises(ConfigurationError):
        PopulationState.validated(np.full(27, 1 / 20), scenario1_config)
    with pytest.raises(ConfigurationError):
        PopulationState.validated(np.full(26, 1 / 26), scenario1_config)


# tensors

def test_C_matches_oracle_n3_single_sector():
    cfg = ModelConfig(r=(10, 20, 30), S=0.1, tau=(0.23, 0.33, 0.43), theta_ev=(1.0,))
    t = build_tensors(cfg)
    th = oracle.theta_table(cfg.tau, cfg.theta_ev)
    ref = oracle.C_dense(list(cfg.r), cfg.S, th, 1)
    np.testing.assert_allclose(transition_coefficients(t), ref, rtol=0, atol=1e-15)


@pytest.mark.parametrize("n,m", [(3, 1), (3, 2), (4, 2)])
def test_C_and_T_match_oracle(n, m):
    rng = np.random.default_rng(n * 10 + m)
    cfg = random_config(rng, n, m)
    enf = EnforcementParams(0.3, 1.6)
    t = build_tensors(cfg, enf)
    x = random_state(rng, n, m).reshape(n, m)
    for audited, xi in ((False, None), (True, enf.xi)):
        th = oracle.theta_table(cfg.tau, cfg.theta_ev, xi)
        np.testing.assert_allclose(transition_coefficients(t, audited),
                                   oracle.C_dense(list(cfg.r), cfg.S, th, m), rtol=0, atol=1e-15)
        np.testing.assert_allclose(taxation_functional(t, x, audited),
                                   oracle.T_dense(list(cfg.r), cfg.S, th, x), rtol=0, atol=1e-15)


def test_two_class_single_sector_is_frozen(backend):
    cfg = ModelConfig(r=(10, 20), S=0.1, tau=(0.2, 0.3), theta_ev=(0.6,))
    enf = EnforcementParams(0.4, 1.5)
    t = build_tensors(cfg, enf)
    x = np.array([0.3, 0.7])
    assert np.max(np.abs(rhs_base(t, x))) < 1e-18
    assert np.max(np.abs(rhs_audit(t, enf, x))) < 1e-18


def test_two_class_mixed_sectors_move():
    cfg = ModelConfig(r=(10, 20), S=0.1, tau=(0.2, 0.3), theta_ev=(1.0, 0.5))
    x = np.array([0.1, 0.4, 0.3, 0.2])
    out = rhs_base(build_tensors(cfg), x)
    ref = oracle.rhs_base(list(cfg.r), cfg.S, cfg.tau, cfg.theta_ev, x)
    np.testing.assert_allclose(out, ref, rtol=0, atol=1e-15)
    assert np.max(np.abs(out)) > 1e-6


def test_tensors_reject_xi_mismatch(scenario1_config):
    t = build_tensors(scenario1_config, EnforcementParams(0.1, 1.5))
    with pytest.raises(ConfigurationError):
        rhs_audit(t, EnforcementParams(0.1, 1.6), np.full(27, 1 / 27))


# right-hand sides

def test_rhs_base_matches_oracle_n3m2(backend):
    rng = np.random.default_rng(5)
    cfg = small_config(3, 2, seed=5)
    t = build_tensors(cfg)
    for _ in range(5):
        x = random_state(rng, 3, 2)
        ref = oracle.rhs_base(list(cfg.r), cfg.S, cfg.tau, cfg.theta_ev, x)
        np.testing.assert_allclose(rhs_base(t, x), ref, rtol=0, atol=1e-12)


def test_rhs_audit_matches_oracle_n3m2(backend):
    rng = np.random.default_rng(6)
    cfg = small_config(3, 2, seed=6)
    enf = EnforcementParams(0.25, 1.85)
    t = build_tensors(cfg, enf)
    for _ in range(5):
        x = random_state(rng, 3, 2)
        ref = oracle.rhs_audit(list(cfg.r), cfg.S, cfg.tau, cfg.theta_ev, enf.sigma, enf.xi, x)
        np.testing.assert_allclose(rhs_audit(t, enf, x), ref, rtol=0, atol=1e-12)


def test_rhs_dimension_mismatch(scenario1_config):
    t = build_tensors(scenario1_config)
    with pytest.raises(ConfigurationError):
        rhs_base(t, np.full(10, 0.1))


def test_rhs_audit_sigma_zero_is_base(scenario1_config, backend):
    x = random_state(np.random.default_rng(1), 9, 3)
    t = build_tensors(scenario1_config, EnforcementParams(0.0, 1.7))
    assert np.array_equal(rhs_audit(t, EnforcementParams(0.0, 1.7), x), rhs_base(t, x))


def test_rhs_literal_denominators():
    # states that do not sum to one still conserve both totals
    cfg = small_config(4, 2, seed=3)
    t = build_tensors(cfg, EnforcementParams(0.4, 1.9))
    x = 1.3 * random_state(np.random.default_rng(3), 4, 2)
    w = np.repeat(cfg.incomes, 2)
    for out in (rhs_base(t, x), rhs_audit(t, None, x)):
        assert abs(out.sum()) < 1e-12
        assert abs(w @ out) < 1e-12


# invariants

configs = st.builds(
    lambda seed, n, m: small_config(n, m, seed),
    st.integers(0, 10_000), st.integers(2, 6), st.integers(1, 3))


@settings(max_examples=60, deadline=None)
@given(cfg=configs, seed=st.integers(0, 10_000), sigma=st.floats(0, 1), xi=st.floats(1.0001, 2.0))
def test_property_conservation(cfg, seed, sigma, xi):
    enf = EnforcementParams(sigma, xi)
    t = build_tensors(cfg, enf)
    x = random_state(np.random.default_rng(seed), cfg.n, cfg.m)
    w = np.repeat(cfg.incomes, cfg.m)
    for out in (rhs_base(t, x), rhs_audit(t, enf, x)):
        assert abs(out.sum()) <= 1e-12
        assert abs(w @ out) <= 1e-12 * max(1.0, w.max())


@settings(max_examples=40, deadline=None)
@given(cfg=configs, seed=st.integers(0, 10_000), xi=st.floats(1.0001, 2.0))
def test_property_stochasticity(cfg, seed, xi):
    t = build_tensors(cfg, EnforcementParams(0.5, xi))
    x = random_state(np.random.default_rng(seed), cfg.n, cfg.m)
    for audited in (False, True):
        C = transition_coefficients(t, audited)
        T = taxation_functional(t, x, audited)
        np.testing.assert_allclose(C.sum(axis=(0, 1)), 1.0, rtol=0, atol=1e-12)
        np.testing.assert_allclose(T.sum(axis=(0, 1)), 0.0, rtol=0, atol=1e-12)
        assert C.min() >= 0.0


@settings(max_examples=40, deadline=None)
@given(cfg=configs, seed=st.integers(0, 10_000), xi=st.floats(1.0001, 2.0))
def test_property_affine_in_sigma(cfg, seed, xi):
    t = build_tensors(cfg, EnforcementParams(0.0, xi))
    x = random_state(np.random.default_rng(seed), cfg.n, cfg.m)
    f = [rhs_audit(t, EnforcementParams(s, xi), x) for s in (0.0, 0.5, 1.0)]
    np.testing.assert_allclose(f[1], (f[0] + f[2]) / 2, rtol=0, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), n=st.integers(2, 6), m=st.integers(1, 3),
       sigma=st.floats(0, 1), xi=st.floats(1.0001, 2.0))
def test_property_compliant_ignores_enforcement(seed, n, m, sigma, xi):
    cfg = small_config(n, m, seed)
    cfg = ModelConfig(cfg.r, cfg.S, cfg.tau, (1.0,) * m)
    x = random_state(np.random.default_rng(seed), n, m)
    a = rhs_audit(build_tensors(cfg, EnforcementParams(sigma, xi)), None, x)
    b = rhs_audit(build_tensors(cfg, EnforcementParams(0.0, 2.0)), None, x)
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-15)


@settings(max_examples=40, deadline=None)
@given(tau=st.floats(0, 0.5), frac=st.floats(0, 1), xi=st.floats(1.0001, 2.0))
def test_property_audited_rate_at_most_one(tau, frac, xi):
    theta = np.array([[frac * tau]])
    out = audited_rates(theta, np.array([tau]), xi)[0, 0]
    assert theta[0, 0] - 1e-15 <= out <= 1.0 + 1e-15
