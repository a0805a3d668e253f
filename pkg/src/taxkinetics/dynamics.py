"""Time integration to the stationary distribution.

The integrator is classical fixed-step RK4.  Conservation of population and
total income is an exact property of the flow, so states are never
renormalized: drift beyond the bounds below is reported as a failure.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import kernels
from .errors import ConfigurationError, IntegrationError, NegativityError
from .kinetic_core import (EnforcementParams, ModelConfig, PopulationState,
                           TransitionTensors, build_tensors, rhs_audit)

NORM_DRIFT_TOL = 1e-9
MU_DRIFT_TOL = 1e-8
NEGATIVE_TOL = 1e-9
MAX_SAMPLES = 200_000


@dataclass(frozen=True)
class IntegratorSettings:
    dt: float = 1.0
    tol: float = 1e-11
    max_time: float = 1e7
    record_every: int = 1000

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigurationError(f"dt must be positive, got {self.dt}")
        if not self.tol > 0:
            raise ConfigurationError(f"tol must be positive, got {self.tol}")
        if not self.max_time >= self.dt:
            raise ConfigurationError(f"max_time ({self.max_time}) must be at least dt ({self.dt})")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ConfigurationError(f"record_every must be a positive integer, got {self.record_every}")
        object.__setattr__(self, "record_every", int(self.record_every))

    @property
    def n_steps(self) -> int:
        return int(math.floor(self.max_time / self.dt + 1e-9))


@dataclass(frozen=True)
class Drift:
    normalization: float  # max |sum(x) - 1|
    mu_relative: float  # max |mu(x) / mu(x0) - 1|

    def within_bounds(self) -> bool:
        return self.normalization <= NORM_DRIFT_TOL and self.mu_relative <= MU_DRIFT_TOL


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # shape (samples, n*m)
    drift: Drift


@dataclass(frozen=True)
class EquilibriumResult:
    state: PopulationState
    t_final: float
    residual: float
    converged: bool
    drift: Drift
    trajectory: Trajectory | None = None


class KineticRates:
    """Callable right-hand side ``x -> dx/dt`` of the audit dynamics.

    Integrators recognise this type and run the whole time loop inside the
    compiled kernel; any other callable falls back to a Python loop.
    """

    def __init__(self, tensors: TransitionTensors, enforcement: EnforcementParams | None = None):
        self.tensors = tensors
        self.enforcement = enforcement or tensors.enforcement

    @classmethod
    def from_config(cls, config: ModelConfig, enforcement: EnforcementParams | None = None):
        enforcement = enforcement or EnforcementParams()
        return cls(build_tensors(config, enforcement), enforcement)

    @property
    def config(self) -> ModelConfig:
        return self.tensors.config

    def __call__(self, x) -> np.ndarray:
        return rhs_audit(self.tensors, self.enforcement, x)


def make_initial_condition(config: ModelConfig, mu: float) -> PopulationState:
    """Admissible state with total income ``mu``.

    The class profile mixes the uniform profile with a point mass on the
    richest class (``mu`` above the mean income) or the poorest class
    (below it); every class is split across sectors by ``sector_weights``.
    """
    r = config.incomes
    lo, hi = r[0], r[-1]
    if not lo <= mu <= hi:
        raise ConfigurationError(f"total income mu={mu} outside [{lo}, {hi}]")
    mean = r.mean()
    q = np.full(config.n, 1.0 / config.n)
    if mu >= mean:
        lam = (mu - mean) / (hi - mean)
        q *= 1.0 - lam
        q[-1] += lam
    else:
        lam = (mean - mu) / (mean - lo)
        q *= 1.0 - lam
        q[0] += lam
    x = np.outer(q, config.sector_weights)
    return PopulationState.validated(x, config)


def _incomes_for(rhs, incomes):
    if incomes is not None:
        return np.asarray(incomes, dtype=np.float64)
    if isinstance(rhs, KineticRates):
        return rhs.config.incomes
    return None


def _check_samples(states, x0, r, m):
    worst = states.min()
    if worst < -NEGATIVE_TOL:
        raise NegativityError(f"state component reached {worst:.3e}")
    norm = float(np.max(np.abs(states.sum(axis=1) - 1.0)))
    mu_rel = 0.0
    if r is not None:
        weights = np.repeat(r, m)
        mu0 = float(weights @ x0)
        mu_rel = float(np.max(np.abs(states @ weights / mu0 - 1.0)))
    drift = Drift(norm, mu_rel)
    if not drift.within_bounds():
        raise IntegrationError(
            f"conservation drift beyond bounds: sum(x) off by {norm:.3e}, "
            f"relative income off by {mu_rel:.3e}")
    return drift


def _run(rhs, x0, settings, stop_at_tol, m):
    n_steps = settings.n_steps
    if n_steps // settings.record_every + 2 > MAX_SAMPLES:
        raise ConfigurationError("record_every too small for the requested horizon")
    if isinstance(rhs, KineticRates):
        t = rhs.tensors
        x, steps, residual, samples, sample_steps = kernels.rk4(
            x0.reshape(t.n, t.m), rhs.enforcement.sigma, *t._kernel_args,
            settings.dt, settings.tol, n_steps, settings.record_every, stop_at_tol)
        return x.reshape(-1), steps, residual, samples.reshape(len(samples), -1), sample_steps
    return _rk4_python(rhs, x0, settings, n_steps, stop_at_tol)


def _rk4_python(rhs, x0, settings, n_steps, stop_at_tol):
    dt = settings.dt
    x = x0.copy()
    samples, sample_steps = [x.copy()], [0]
    step = 0
    while True:
        k1 = np.asarray(rhs(x), dtype=np.float64)
        residual = float(np.max(np.abs(k1)))
        if (stop_at_tol and residual <= settings.tol) or step >= n_steps:
            break
        k2 = rhs(x + 0.5 * dt * k1)
        k3 = rhs(x + 0.5 * dt * k2)
        k4 = rhs(x + dt * k3)
        x = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        step += 1
        if step % settings.record_every == 0:
            samples.append(x.copy())
            sample_steps.append(step)
    if sample_steps[-1] != step:
        samples.append(x.copy())
        sample_steps.append(step)
    return x, step, residual, np.array(samples), np.array(sample_steps)


def _prepare(x0):
    x0 = np.array(np.asarray(x0), dtype=np.float64).reshape(-1)
    if np.any(x0 < 0) or abs(x0.sum() - 1.0) > NORM_DRIFT_TOL:
        raise ConfigurationError("initial state must be nonnegative and sum to 1")
    return x0


def integrate(rhs: Callable, x0, settings: IntegratorSettings | None = None,
              *, incomes=None) -> Trajectory:
    """Integrate over the whole horizon ``settings.max_time``.

    ``incomes`` (class incomes) enables the total-income drift check; it is
    taken from the rates object when ``rhs`` is a :class:`KineticRates`.
    """
    settings = settings or IntegratorSettings()
    x0 = _prepare(x0)
    r = _incomes_for(rhs, incomes)
    m = x0.size // r.size if r is not None else 1
    _, _, _, samples, steps = _run(rhs, x0, settings, False, m)
    drift = _check_samples(samples, x0, r, m)
    return Trajectory(steps * settings.dt, samples, drift)


def find_steady_state(rhs: Callable, x0, settings: IntegratorSettings | None = None,
                      *, incomes=None) -> EquilibriumResult:
    """Integrate until the inf-norm of the rates falls to ``settings.tol``.

    Hitting ``max_time`` first yields ``converged=False``; conservation or
    sign failures raise.
    """
    settings = settings or IntegratorSettings()
    x0_arr = _prepare(x0)
    r = _incomes_for(rhs, incomes)
    if isinstance(x0, PopulationState):
        n, m = x0.n, x0.m
    elif isinstance(rhs, KineticRates):
        n, m = rhs.tensors.n, rhs.tensors.m
    else:
        n, m = x0_arr.size, 1
    x, steps, residual, samples, sample_steps = _run(rhs, x0_arr, settings, True, m)
    drift = _check_samples(samples, x0_arr, r, m)
    x = np.where(x < 0, 0.0, x)  # only (-1e-9, 0) can remain here
    return EquilibriumResult(
        state=PopulationState(x, n, m),
        t_final=steps * settings.dt,
        residual=float(residual),
        converged=bool(residual <= settings.tol),
        drift=drift,
        trajectory=Trajectory(sample_steps * settings.dt, samples, drift),
    )


def equilibrium(config: ModelConfig, mu: float, enforcement: EnforcementParams | None = None,
                settings: IntegratorSettings | None = None) -> EquilibriumResult:
    """Steady state reached from the standard initial condition."""
    rates = KineticRates.from_config(config, enforcement)
    return find_steady_state(rates, make_initial_condition(config, mu), settings)
