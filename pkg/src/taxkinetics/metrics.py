"""Aggregate observables of a population state."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DegenerateDistributionError
from .kinetic_core import EnforcementParams, TransitionTensors


@dataclass(frozen=True)
class LorenzCurve:
    population: np.ndarray  # cumulative population share, starts at 0
    income: np.ndarray  # cumulative income share, starts at 0

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.population.tolist(), self.income.tolist()))

    def area(self) -> float:
        """Exact area under the polyline (trapezoid rule)."""
        return float(np.sum(np.diff(self.population) * (self.income[1:] + self.income[:-1])) / 2.0)


@dataclass(frozen=True)
class MetricsReport:
    gini: float
    tax_revenue: float
    sector_mean_income: tuple[float, ...]
    sigma: float
    xi: float


def _class_totals(x, r):
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    r = np.asarray(r, dtype=np.float64)
    if x.size % r.size:
        raise ConfigurationError(f"state of size {x.size} does not match {r.size} classes")
    return x.reshape(r.size, -1).sum(axis=1), r


def lorenz(x, r) -> LorenzCurve:
    """Lorenz curve over income classes (sectors share the class income).

    Empty classes contribute no vertex.
    """
    pop, r = _class_totals(x, r)
    order = np.argsort(r, kind="stable")
    pop, r = pop[order], r[order]
    keep = pop > 0
    pop, r = pop[keep], r[keep]
    income = pop * r
    total_pop, total_inc = pop.sum(), income.sum()
    if total_inc <= 0 or total_pop <= 0:
        raise DegenerateDistributionError("distribution has zero total income")
    cp = np.concatenate(([0.0], np.cumsum(pop) / total_pop))
    ci = np.concatenate(([0.0], np.cumsum(income) / total_inc))
    cp[-1] = ci[-1] = 1.0
    return LorenzCurve(cp, ci)


def gini(x, r) -> float:
    """One minus twice the area under the Lorenz curve."""
    return float(min(max(1.0 - 2.0 * lorenz(x, r).area(), 0.0), 1.0))


def gini_mean_difference(x, r) -> float:
    """Same index through the mean absolute difference, for cross-checking."""
    pop, r = _class_totals(x, r)
    pop = pop / pop.sum()
    mean = pop @ r
    if mean <= 0:
        raise DegenerateDistributionError("distribution has zero total income")
    return float(np.sum(np.outer(pop, pop) * np.abs(np.subtract.outer(r, r))) / (2.0 * mean))


def tax_revenue(x, tensors: TransitionTensors, enforcement: EnforcementParams | None = None) -> float:
    """Government intake per unit time at state ``x``.

    Sum over payer h, receiver (k, g) of ``S p[h,k] (theta + sigma xi (tau - theta))``
    weighted by the populations, times the mass outside the top class.
    """
    enforcement = enforcement or tensors.enforcement
    n, m = tensors.n, tensors.m
    xg = np.asarray(x, dtype=np.float64).reshape(-1)
    if xg.size != n * m:
        raise ConfigurationError(f"state has {xg.size} entries, expected {n * m}")
    xg = xg.reshape(n, m)
    tau = np.asarray(tensors.config.tau)
    theta = tensors.theta
    rate = theta + enforcement.sigma * enforcement.xi * (tau[:, None] - theta)
    class_tot = xg.sum(axis=1)
    collected = np.einsum("hk,h,kg->", tensors.p, class_tot, rate * xg)
    return float(tensors.config.S * class_tot[:-1].sum() * collected)


def sector_mean_income(x, r) -> list[float]:
    r = np.asarray(r, dtype=np.float64)
    xg = np.asarray(x, dtype=np.float64).reshape(r.size, -1)
    mass = xg.sum(axis=0)
    if np.any(mass <= 0):
        raise DegenerateDistributionError(f"empty sector(s): {np.flatnonzero(mass <= 0).tolist()}")
    return (r @ xg / mass).tolist()


def report(x, tensors: TransitionTensors, enforcement: EnforcementParams | None = None) -> MetricsReport:
    enforcement = enforcement or tensors.enforcement
    r = tensors.config.incomes
    return MetricsReport(
        gini=gini(x, r),
        tax_revenue=tax_revenue(x, tensors, enforcement),
        sector_mean_income=tuple(sector_mean_income(x, r)),
        sigma=enforcement.sigma,
        xi=enforcement.xi,
    )
