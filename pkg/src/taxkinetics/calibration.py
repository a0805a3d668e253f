"""Enforcement sweeps, bilinear response surfaces and their inversion.

The response surface is ``f(xi, sigma) = a0 + a10*xi + a01*sigma + a11*xi*sigma``
fitted by ordinary least squares over a (sigma, xi) grid.
"""
from __future__ import annotations

import itertools
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

from .dynamics import IntegratorSettings, KineticRates, find_steady_state, make_initial_condition
from .errors import ConfigurationError, FitError, SingularInversionError
from .kinetic_core import XI_MAX, XI_MIN, EnforcementParams, ModelConfig
from .metrics import gini, tax_revenue

METRICS = ("gini", "tax_revenue")
SINGULAR_TOL = 1e-12


@dataclass(frozen=True)
class SweepRow:
    sigma: float
    xi: float
    gini: float
    tax_revenue: float
    converged: bool
    residual: float


@dataclass(frozen=True)
class SweepTable:
    rows: tuple[SweepRow, ...]
    sigmas: tuple[float, ...]
    xis: tuple[float, ...]
    scenario: str = ""

    @property
    def fit_eligible(self) -> bool:
        return bool(self.rows) and all(row.converged for row in self.rows)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(row, name) for row in self.rows], dtype=np.float64)

    def grid(self, metric: str) -> np.ndarray:
        """Values as a ``(len(sigmas), len(xis))`` array, sigma along rows."""
        lookup = {(row.sigma, row.xi): getattr(row, metric) for row in self.rows}
        return np.array([[lookup[(s, x)] for x in self.xis] for s in self.sigmas])

    @classmethod
    def from_rows(cls, rows: Iterable[SweepRow], scenario: str = "") -> "SweepTable":
        rows = tuple(rows)
        sigmas = tuple(sorted({row.sigma for row in rows}))
        xis = tuple(sorted({row.xi for row in rows}))
        return cls(rows, sigmas, xis, scenario)


@dataclass(frozen=True)
class FitCoefficients:
    metric: str
    a0: float
    a10: float
    a01: float
    a11: float
    fit_residual_max: float

    def __call__(self, xi, sigma):
        return self.a0 + self.a10 * xi + self.a01 * sigma + self.a11 * xi * sigma

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Inversion:
    value: float
    within_constraint: bool
    form: str
    warning: str | None = None


def _cell(config, mu, sigma, xi, settings):
    enforcement = EnforcementParams(sigma, xi)
    rates = KineticRates.from_config(config, enforcement)
    result = find_steady_state(rates, make_initial_condition(config, mu), settings)
    x = result.state.x
    return SweepRow(
        sigma=float(sigma),
        xi=float(xi),
        gini=gini(x, config.incomes),
        tax_revenue=tax_revenue(x, rates.tensors, enforcement),
        converged=result.converged,
        residual=result.residual,
    )


def sweep(config: ModelConfig, mu: float, sigma_list: Sequence[float], xi_list: Sequence[float],
          settings: IntegratorSettings | None = None, *, workers: int = 1,
          scenario: str = "") -> SweepTable:
    """Steady-state metrics on every (sigma, xi) cell, sigma outer, xi inner.

    Cells are independent; with ``workers > 1`` they run on a thread pool
    (the compiled kernels release the GIL).  Row order never depends on
    completion order.
    """
    sigma_list = [float(s) for s in sigma_list]
    xi_list = [float(x) for x in xi_list]
    if not sigma_list or not xi_list:
        raise ConfigurationError("sweep needs at least one sigma and one xi value")
    for s, x in itertools.product(sigma_list, xi_list):
        EnforcementParams(s, x)
    settings = settings or IntegratorSettings()
    cells = list(itertools.product(sigma_list, xi_list))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda c: _cell(config, mu, c[0], c[1], settings), cells))
    else:
        rows = [_cell(config, mu, s, x, settings) for s, x in cells]
    return SweepTable(tuple(rows), tuple(sorted(set(sigma_list))), tuple(sorted(set(xi_list))), scenario)


def _solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Gaussian elimination with partial pivoting; raises on a singular system."""
    a = np.array(a, dtype=np.float64)
    b = np.array(b, dtype=np.float64)
    size = b.size
    scale = np.abs(a).max()
    for col in range(size):
        piv = col + int(np.argmax(np.abs(a[col:, col])))
        if abs(a[piv, col]) <= SINGULAR_TOL * scale:
            raise FitError("design matrix is rank deficient (grid does not span both axes)")
        if piv != col:
            a[[col, piv]] = a[[piv, col]]
            b[[col, piv]] = b[[piv, col]]
        for row in range(col + 1, size):
            factor = a[row, col] / a[col, col]
            a[row, col:] -= factor * a[col, col:]
            b[row] -= factor * b[col]
    out = np.zeros(size)
    for row in range(size - 1, -1, -1):
        out[row] = (b[row] - a[row, row + 1:] @ out[row + 1:]) / a[row, row]
    return out


def _points(data, metric):
    if isinstance(data, SweepTable):
        if not data.fit_eligible:
            raise FitError("sweep table has non-converged cells")
        return data.column("sigma"), data.column("xi"), data.column(metric)
    sigma, xi, values = (np.asarray(v, dtype=np.float64) for v in data)
    return sigma, xi, values


def _least_squares(design, values):
    # normal equations, no centering
    return _solve(design.T @ design, design.T @ values)


def bilinear_fit(data, metric: str = "tax_revenue") -> FitCoefficients:
    """Least-squares bilinear surface through the grid values of ``metric``.

    ``data`` is a :class:`SweepTable` or a ``(sigma, xi, values)`` triple of
    equal-length arrays (e.g. values transcribed from a reference table).
    """
    if metric not in METRICS:
        raise FitError(f"unknown metric {metric!r}; expected one of {METRICS}")
    sigma, xi, values = _points(data, metric)
    if len({(s, x) for s, x in zip(sigma, xi)}) < 4 or len(set(sigma)) < 2 or len(set(xi)) < 2:
        raise FitError("need at least 4 distinct cells spanning both sigma and xi")
    design = np.column_stack([np.ones_like(xi), xi, sigma, xi * sigma])
    coef = _least_squares(design, values)
    resid = float(np.max(np.abs(design @ coef - values)))
    return FitCoefficients(metric, *map(float, coef), fit_residual_max=resid)


def objective(fit: FitCoefficients, data) -> float:
    sigma, xi, values = _points(data, fit.metric)
    return float(np.sum((fit(xi, sigma) - values) ** 2))


def quadratic_fit(data, metric: str = "tax_revenue") -> dict[str, float]:
    """Diagnostic fit with extra ``xi**2`` and ``sigma**2`` terms."""
    sigma, xi, values = _points(data, metric)
    design = np.column_stack([np.ones_like(xi), xi, sigma, xi * sigma, xi ** 2, sigma ** 2])
    coef = _least_squares(design, values)
    return dict(zip(("a0", "a10", "a01", "a11", "a20", "a02"), map(float, coef)))


def transposed_fit(table: SweepTable, metric: str = "tax_revenue") -> FitCoefficients:
    """Fit after swapping the grid axes: the value at grid position
    (sigma_i, xi_k) is attached to (sigma_k, xi_i).

    Only meaningful for square grids; used to test whether reference
    coefficients were computed with the axes exchanged.
    """
    values = table.grid(metric)
    if values.shape[0] != values.shape[1]:
        raise FitError("transposed fit needs a square grid")
    s, x = np.meshgrid(table.sigmas, table.xis, indexing="ij")
    return bilinear_fit((s.ravel(), x.ravel(), values.T.ravel()), metric)


def xi_for_target(fit: FitCoefficients, target: float, sigma: float) -> Inversion:
    """Penalty multiplier reaching ``target`` at audit fraction ``sigma``."""
    denom = fit.a10 + fit.a11 * sigma
    if abs(denom) <= SINGULAR_TOL:
        raise SingularInversionError(f"a10 + a11*sigma = {denom:.3e} is too close to zero")
    value = (target - fit.a0 - fit.a01 * sigma) / denom
    ok = XI_MIN < value <= XI_MAX
    msg = None if ok else f"xi={value:.6g} outside ({XI_MIN}, {XI_MAX}], the admissible penalty range"
    if msg:
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return Inversion(float(value), ok, "xi = (C - a0 - a01*sigma) / (a10 + a11*sigma)", msg)


def sigma_for_target(fit: FitCoefficients, target: float, xi: float) -> Inversion:
    """Audit fraction reaching ``target`` at penalty multiplier ``xi``."""
    denom = fit.a01 + fit.a11 * xi
    if abs(denom) <= SINGULAR_TOL:
        raise SingularInversionError(f"a01 + a11*xi = {denom:.3e} is too close to zero")
    value = (target - fit.a0 - fit.a10 * xi) / denom
    ok = 0.0 <= value <= 1.0
    msg = None if ok else f"sigma={value:.6g} outside [0, 1]"
    if msg:
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return Inversion(float(value), ok, "sigma = (C - a0 - a10*xi) / (a01 + a11*xi)", msg)
