"""Model coefficients and right-hand sides of the kinetic taxation model.

A society is split into ``n`` income classes (average incomes ``r``) and
``m`` behavioral sectors (evasion retention ``theta_ev``).  State vectors are
flattened class-major: ``index = j * m + a`` for class ``j`` and sector ``a``
(0-based).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import kernels
from .errors import ConfigurationError, ConstraintViolation

TAU_MAX = 0.5
XI_MIN, XI_MAX = 1.0, 2.0
S_WARN_FRACTION = 0.1
WEIGHT_TOL = 1e-12
NORMALIZATION_TOL = 1e-9


def _as_tuple(values, name) -> tuple[float, ...]:
    try:
        out = tuple(float(v) for v in values)
    except TypeError as exc:
        raise ConfigurationError(f"{name} must be a sequence of numbers") from exc
    if not all(np.isfinite(out)):
        raise ConfigurationError(f"{name} contains non-finite values")
    return out


def check_penalty_bounds(tau_max: float, xi: float) -> None:
    if tau_max > TAU_MAX:
        raise ConstraintViolation(
            f"top tax rate {tau_max} exceeds {TAU_MAX}; the penalty constraint "
            f"requires tau_n <= {TAU_MAX} and {XI_MIN} < xi <= {XI_MAX}")
    if not XI_MIN < xi <= XI_MAX:
        raise ConstraintViolation(
            f"penalty multiplier xi={xi} outside ({XI_MIN}, {XI_MAX}]; the penalty "
            f"constraint requires tau_n <= {TAU_MAX} and {XI_MIN} < xi <= {XI_MAX}")


@dataclass(frozen=True)
class ModelConfig:
    """Static parameters of the model.

    ``r`` are class incomes, ``S`` the amount exchanged per transaction,
    ``tau`` the per-class tax rates, ``theta_ev`` the fraction of due tax
    each sector actually declares (1 = compliant, 0 = total evasion) and
    ``sector_weights`` the population share of each sector.
    """

    r: tuple[float, ...]
    S: float
    tau: tuple[float, ...]
    theta_ev: tuple[float, ...]
    sector_weights: tuple[float, ...] | None = None

    def __post_init__(self):
        r = _as_tuple(self.r, "r")
        tau = _as_tuple(self.tau, "tau")
        theta_ev = _as_tuple(self.theta_ev, "theta_ev")
        m = len(theta_ev)
        weights = self.sector_weights
        weights = (1.0 / m,) * m if weights is None else _as_tuple(weights, "sector_weights")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "theta_ev", theta_ev)
        object.__setattr__(self, "sector_weights", weights)
        object.__setattr__(self, "S", float(self.S))
        self._validate()

    def _validate(self):
        n, m = self.n, self.m
        if n < 2:
            raise ConfigurationError(f"need at least 2 income classes, got {n}")
        if m < 1:
            raise ConfigurationError("need at least one behavioral sector")
        if len(self.tau) != n:
            raise ConfigurationError(f"tau has {len(self.tau)} entries, expected {n}")
        if len(self.sector_weights) != m:
            raise ConfigurationError(
                f"sector_weights has {len(self.sector_weights)} entries, expected {m}")
        r = np.asarray(self.r)
        if r[0] <= 0 or np.any(np.diff(r) <= 0):
            raise ConfigurationError(f"class incomes must be positive and strictly increasing: {self.r}")
        tau = np.asarray(self.tau)
        if tau[0] < 0 or np.any(np.diff(tau) < 0):
            raise ConfigurationError(f"tax rates must be nonnegative and nondecreasing: {self.tau}")
        if tau[-1] > TAU_MAX:
            check_penalty_bounds(tau[-1], XI_MAX)
        if any(not 0.0 <= t <= 1.0 for t in self.theta_ev):
            raise ConfigurationError(f"theta_ev entries must lie in [0, 1]: {self.theta_ev}")
        w = np.asarray(self.sector_weights)
        if np.any(w < 0) or abs(w.sum() - 1.0) > WEIGHT_TOL:
            raise ConfigurationError(f"sector_weights must be nonnegative and sum to 1: {self.sector_weights}")
        min_gap = float(np.diff(r).min())
        if self.S < 0:
            raise ConfigurationError("exchanged amount S must be nonnegative")
        if self.S >= min_gap:
            raise ConfigurationError(
                f"exchanged amount S={self.S} must be smaller than the smallest class gap {min_gap}")
        if self.S > S_WARN_FRACTION * min_gap:
            warnings.warn(
                f"S={self.S} is more than {S_WARN_FRACTION:g} of the smallest class gap {min_gap}; "
                "the model assumes S is much smaller than the gaps", RuntimeWarning, stacklevel=3)

    @property
    def n(self) -> int:
        return len(self.r)

    @property
    def m(self) -> int:
        return len(self.theta_ev)

    @property
    def incomes(self) -> np.ndarray:
        return np.asarray(self.r)

    @property
    def size(self) -> int:
        return self.n * self.m


@dataclass(frozen=True)
class EnforcementParams:
    """Audit fraction ``sigma`` and penalty multiplier ``xi``.

    With ``sigma == 0`` the value of ``xi`` has no effect; 2.0 is the
    conventional placeholder.
    """

    sigma: float = 0.0
    xi: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "sigma", float(self.sigma))
        object.__setattr__(self, "xi", float(self.xi))
        if not 0.0 <= self.sigma <= 1.0:
            raise ConfigurationError(f"audit fraction sigma={self.sigma} outside [0, 1]")
        check_penalty_bounds(0.0, self.xi)


@dataclass(frozen=True, eq=False)
class PopulationState:
    """Flattened distribution ``x`` over (class, sector) groups."""

    x: np.ndarray
    n: int
    m: int

    def __post_init__(self):
        x = np.array(self.x, dtype=np.float64).reshape(-1)
        if x.size != self.n * self.m:
            raise ConfigurationError(f"state has {x.size} entries, expected {self.n}x{self.m}")
        x.setflags(write=False)
        object.__setattr__(self, "x", x)

    @classmethod
    def validated(cls, x, config: ModelConfig) -> "PopulationState":
        state = cls(x, config.n, config.m)
        if np.any(state.x < 0):
            raise ConfigurationError("state has negative components")
        if abs(state.x.sum() - 1.0) > NORMALIZATION_TOL:
            raise ConfigurationError(f"state sums to {state.x.sum()!r}, expected 1")
        return state

    @property
    def grid(self) -> np.ndarray:
        return self.x.reshape(self.n, self.m)

    @property
    def class_totals(self) -> np.ndarray:
        return self.grid.sum(axis=1)

    def mu(self, r) -> float:
        return float(np.asarray(r) @ self.class_totals)

    def __array__(self, dtype=None, copy=None):
        return self.x if dtype is None else self.x.astype(dtype)


class TaxCoefficients(NamedTuple):
    """State-independent pieces of the taxation/redistribution functional.

    ``flux[h, k, g] = p[h, k] * S * theta[k, g]``; ``inv_gap[j]`` is the
    reciprocal of ``r[j + 1] - r[j]``.  The payer of class ``h`` drops a class
    at rate proportional to ``inv_gap[h - 1]``; redistribution lifts class
    ``j`` at rate proportional to ``inv_gap[j]``.
    """

    flux: np.ndarray
    inv_gap: np.ndarray


@dataclass(frozen=True, eq=False)
class TransitionTensors:
    """Precomputed coefficients for one (config, enforcement) pair.

    ``C_bands[d, h, b, k, g]`` is the probability that an ``(h, b)``
    individual meeting a ``(k, g)`` one ends in class ``h - 1`` (d=0),
    stays (d=1) or reaches ``h + 1`` (d=2); the sector never changes.
    ``C_xi_bands`` is the same with audited rates.
    """

    config: ModelConfig
    enforcement: EnforcementParams
    p: np.ndarray
    theta: np.ndarray
    theta_audited: np.ndarray
    C_bands: np.ndarray
    C_xi_bands: np.ndarray
    T_coeffs: TaxCoefficients
    T_xi_coeffs: TaxCoefficients
    _kernel_args: tuple = field(repr=False, default=())

    @property
    def n(self) -> int:
        return self.config.n

    @property
    def m(self) -> int:
        return self.config.m


def build_payer_matrix(r: Sequence[float]) -> np.ndarray:
    """Probability ``p[h, k]`` that in an (h, k) encounter the h-individual pays.

    Base rule ``min(r_h, r_k) / (4 r_n)`` with the exception families applied
    in order: doubled diagonal for inner classes, doubled column of the
    poorest class, doubled row of the richest class, the poorest class never
    pays and nobody pays the richest class.
    """
    r = np.asarray(r, dtype=np.float64)
    if r.ndim != 1 or r.size < 2:
        raise ConfigurationError("need at least two class incomes")
    if r[0] <= 0 or np.any(np.diff(r) <= 0):
        raise ConfigurationError(f"class incomes must be positive and strictly increasing: {r}")
    n = r.size
    top = r[-1]
    p = np.minimum.outer(r, r) / (4.0 * top)

    assigned: dict[tuple[int, int], float] = {}

    def put(h, k, value):
        if (h, k) in assigned and assigned[(h, k)] != value:
            raise AssertionError(f"inconsistent payer exceptions at ({h + 1}, {k + 1})")
        assigned[(h, k)] = value
        p[h, k] = value

    for j in range(1, n - 1):
        put(j, j, r[j] / (2.0 * top))
    for h in range(1, n):
        put(h, 0, r[0] / (2.0 * top))
    for k in range(0, n - 1):
        put(n - 1, k, r[k] / (2.0 * top))
    for k in range(n):
        put(0, k, 0.0)
    for h in range(n):
        put(h, n - 1, 0.0)
    return p


def effective_rates(config: ModelConfig) -> np.ndarray:
    """Declared tax rate per (class, sector): ``theta_ev[a] * tau[k]``."""
    return np.outer(config.tau, config.theta_ev)


def audited_rates(theta, tau, xi: float) -> np.ndarray:
    """Rate extracted from an audited individual, tax plus fine.

    ``theta + xi * (tau - theta)``; equals ``tau`` for compliant groups.
    """
    theta = np.asarray(theta, dtype=np.float64)
    tau = np.asarray(tau, dtype=np.float64)
    check_penalty_bounds(float(tau.max()), float(xi))
    return theta + xi * (tau[:, None] - theta)


def _bands(p, theta, r, S):
    n, m = theta.shape
    gaps = np.diff(r)
    bands = np.zeros((3, n, m, n, m))
    keep = S * (1.0 - theta)  # amount passed to the receiver, per receiver group
    # payer (h, b) drops to h-1 after paying (k, g)
    bands[0, 1:] = (p[1:, :, None] * keep[None, :, :] / gaps[:, None, None])[:, None, :, :]
    # receiver (h, b) climbs to h+1 after being paid by k (k >= 2 only)
    up = p[1:, :-1].T[:, None, :] * keep[:-1, :, None] / gaps[:, None, None]
    bands[2, :-1, :, 1:, :] = up[:, :, :, None]
    bands[1] = 1.0 - bands[0] - bands[2]
    return bands


def build_tensors(config: ModelConfig, enforcement: EnforcementParams | None = None) -> TransitionTensors:
    """Assemble every coefficient needed to evaluate both dynamics brackets."""
    enforcement = enforcement or EnforcementParams()
    r = config.incomes
    tau = np.asarray(config.tau)
    p = build_payer_matrix(r)
    theta = effective_rates(config)
    theta_a = audited_rates(theta, tau, enforcement.xi)
    inv_gap = 1.0 / np.diff(r)

    C = _bands(p, theta, r, config.S)
    C_xi = _bands(p, theta_a, r, config.S)
    T = TaxCoefficients(p[:, :, None] * config.S * theta[None, :, :], inv_gap)
    T_xi = TaxCoefficients(p[:, :, None] * config.S * theta_a[None, :, :], inv_gap)
    for arr in (p, theta, theta_a, C, C_xi, *T, *T_xi):
        arr.setflags(write=False)
    kernel_args = tuple(np.ascontiguousarray(a) for a in
                        (C[0], C[2], T.flux, C_xi[0], C_xi[2], T_xi.flux, inv_gap))
    return TransitionTensors(config, enforcement, p, theta, theta_a, C, C_xi, T, T_xi, kernel_args)


def _grid(tensors: TransitionTensors, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.size != tensors.n * tensors.m:
        raise ConfigurationError(
            f"state has {x.size} entries, expected {tensors.n * tensors.m}")
    return np.ascontiguousarray(x.reshape(tensors.n, tensors.m))


def rhs_base(tensors: TransitionTensors, x) -> np.ndarray:
    """Rates of change without audits, flattened class-major."""
    down, up, flux = tensors._kernel_args[:3]
    out = kernels.bracket(_grid(tensors, x), down, up, flux, tensors._kernel_args[-1])
    return out.reshape(-1)


def rhs_audit(tensors: TransitionTensors, enforcement: EnforcementParams | None, x) -> np.ndarray:
    """Rates of change when a fraction ``sigma`` of interactions is audited.

    Evaluated as ``b + sigma * (b_audit - b)`` so that ``sigma = 0`` returns
    the unaudited rates exactly.  The ``xi`` used is the one the tensors were
    built with.
    """
    enforcement = enforcement or tensors.enforcement
    if enforcement.xi != tensors.enforcement.xi:
        raise ConfigurationError(
            f"tensors were built for xi={tensors.enforcement.xi}, got xi={enforcement.xi}")
    out = kernels.audit_rhs(_grid(tensors, x), enforcement.sigma, *tensors._kernel_args)
    return out.reshape(-1)


def transition_coefficients(tensors: TransitionTensors, audited: bool = False) -> np.ndarray:
    """Dense ``C[j, a, h, b, k, g]`` (target first) expanded from the bands."""
    bands = tensors.C_xi_bands if audited else tensors.C_bands
    n, m = tensors.n, tensors.m
    C = np.zeros((n, m, n, m, n, m))
    for a in range(m):
        for h in range(n):
            C[h, a, h, a] = bands[1, h, a]
            if h >= 1:
                C[h - 1, a, h, a] = bands[0, h, a]
            if h <= n - 2:
                C[h + 1, a, h, a] = bands[2, h, a]
    return C


def taxation_functional(tensors: TransitionTensors, x, audited: bool = False) -> np.ndarray:
    """Dense ``T[j, a, h, b, k, g](x)``; mostly useful for diagnostics."""
    coeffs = tensors.T_xi_coeffs if audited else tensors.T_coeffs
    xg = _grid(tensors, x)
    n, m = tensors.n, tensors.m
    total = xg.sum()
    eligible = total - xg[-1].sum()
    inv_gap = coeffs.inv_gap

    lift = np.zeros((n, m))  # redistribution profile per unit tax
    lift[1:] += xg[:-1] * inv_gap[:, None]
    lift[:-1] -= xg[:-1] * inv_gap[:, None]
    lift /= total

    T = np.broadcast_to(coeffs.flux[None, None, :, None, :, :] * lift[:, :, None, None, None, None],
                        (n, m, n, m, n, m)).copy()
    ratio = eligible / total
    for h in range(1, n):
        for a in range(m):
            drop = coeffs.flux[h] * inv_gap[h - 1] * ratio
            T[h - 1, a, h, a] += drop
            T[h, a, h, a] -= drop
    return T
