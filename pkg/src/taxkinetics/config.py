"""Run configuration files (TOML) and built-in presets.

Schema, version 1::

    schema_version = 1

    [model]
    r = [10, 20, 30]              # or: r = { base = 10, step = 10 } plus n = 9
    S = 0.1
    tau = [0.2, 0.3, 0.4]         # or: tau = { first = 0.23, last = 0.43 } (linear)
    theta_ev = [1.0, 0.5]
    sector_weights = [0.5, 0.5]   # optional, equal weights when omitted

    [initial]
    mu = 25.0                     # total income, within [r_1, r_n]

    [enforcement]
    sigma = 0.0                   # audited fraction in [0, 1]
    xi = 2.0                      # penalty multiplier in (1, 2]

    [integrator]                  # optional; every key has a default
    dt = 1.0
    tol = 1e-11
    max_time = 1e7
    record_every = 1000

    [output]
    directory = "out"
    formats = ["csv", "json"]

Unknown keys are rejected.  Presets are addressed by name instead of a
path: ``paper.default`` (scenario 1 evasion profile, no audit),
``paper.scenario1``, ``paper.scenario2`` and ``paper.compliant``.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, replace
from pathlib import Path

import tomli
import tomli_w

from .dynamics import IntegratorSettings
from .errors import ConfigurationError, ConstraintViolation
from .kinetic_core import EnforcementParams, ModelConfig
from . import presets

SCHEMA_VERSION = 1
FORMATS = ("csv", "json")

_SECTIONS = {
    "model": {"n", "r", "S", "tau", "theta_ev", "sector_weights"},
    "initial": {"mu"},
    "enforcement": {"sigma", "xi"},
    "integrator": {"dt", "tol", "max_time", "record_every"},
    "output": {"directory", "formats"},
}
_REQUIRED = {
    "model": {"r", "S", "tau", "theta_ev"},
    "initial": {"mu"},
    "enforcement": {"sigma", "xi"},
    "integrator": set(),
    "output": {"directory", "formats"},
}


@dataclass(frozen=True)
class RunConfig:
    model: ModelConfig
    mu: float
    enforcement: EnforcementParams
    integrator: IntegratorSettings
    output_dir: str = "out"
    formats: tuple[str, ...] = FORMATS

    def with_overrides(self, sigma=None, xi=None, mu=None) -> "RunConfig":
        enf = self.enforcement
        try:
            enf = EnforcementParams(enf.sigma if sigma is None else sigma, enf.xi if xi is None else xi)
        except ConfigurationError as exc:
            raise type(exc)(f"enforcement: {exc}") from None
        out = replace(self, enforcement=enf, mu=self.mu if mu is None else float(mu))
        _check_mu(out.model, out.mu)
        return out


def _check_mu(model: ModelConfig, mu: float):
    if not model.r[0] <= mu <= model.r[-1]:
        raise ConfigurationError(f"initial.mu: {mu} outside [{model.r[0]}, {model.r[-1]}]")


def _number_list(value, path):
    if not isinstance(value, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool)
                                              for v in value):
        raise ConfigurationError(f"{path}: expected a list of numbers")
    return [float(v) for v in value]


def _number(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigurationError(f"{path}: expected a number, got {value!r}")
    return float(value)


def _incomes(model):
    r = model["r"]
    if isinstance(r, dict):
        extra = set(r) - {"base", "step"}
        if extra or set(r) != {"base", "step"}:
            raise ConfigurationError("model.r: generator form needs exactly 'base' and 'step'")
        if "n" not in model:
            raise ConfigurationError("model.n: required with the generator form of model.r")
        n = model["n"]
        if isinstance(n, bool) or not isinstance(n, int):
            raise ConfigurationError("model.n: expected an integer")
        base, step = _number(r["base"], "model.r.base"), _number(r["step"], "model.r.step")
        return [base + step * j for j in range(n)]
    values = _number_list(r, "model.r")
    if "n" in model and model["n"] != len(values):
        raise ConfigurationError(f"model.n: {model['n']} does not match {len(values)} incomes in model.r")
    return values


def _taxes(model, n):
    tau = model["tau"]
    if isinstance(tau, dict):
        if set(tau) != {"first", "last"}:
            raise ConfigurationError("model.tau: schedule form needs exactly 'first' and 'last'")
        return list(presets.linear_tax_schedule(
            _number(tau["first"], "model.tau.first"), _number(tau["last"], "model.tau.last"), n))
    return _number_list(tau, "model.tau")


def from_dict(data: dict) -> RunConfig:
    """Validate a parsed document and build a :class:`RunConfig`."""
    if "schema_version" not in data:
        raise ConfigurationError("schema_version: required")
    if data["schema_version"] != SCHEMA_VERSION:
        raise ConfigurationError(
            f"schema_version: unsupported version {data['schema_version']!r} (expected {SCHEMA_VERSION})")
    unknown = set(data) - set(_SECTIONS) - {"schema_version"}
    if unknown:
        raise ConfigurationError(f"{sorted(unknown)[0]}: unknown key")
    for section, allowed in _SECTIONS.items():
        body = data.get(section)
        if body is None:
            if _REQUIRED[section]:
                raise ConfigurationError(f"{section}: missing section")
            continue
        if not isinstance(body, dict):
            raise ConfigurationError(f"{section}: expected a table")
        for key in body:
            if key not in allowed:
                raise ConfigurationError(f"{section}.{key}: unknown key")
        for key in _REQUIRED[section] - set(body):
            raise ConfigurationError(f"{section}.{key}: required")

    m = data["model"]
    r = _incomes(m)
    fields = dict(
        r=r,
        S=_number(m["S"], "model.S"),
        tau=_taxes(m, len(r)),
        theta_ev=_number_list(m["theta_ev"], "model.theta_ev"),
        sector_weights=(None if "sector_weights" not in m
                        else _number_list(m["sector_weights"], "model.sector_weights")),
    )
    try:
        model = ModelConfig(**fields)
    except ConstraintViolation as exc:
        raise ConstraintViolation(f"model.tau: {exc}") from None
    except ConfigurationError as exc:
        raise ConfigurationError(f"model: {exc}") from None

    e = data["enforcement"]
    try:
        enforcement = EnforcementParams(_number(e["sigma"], "enforcement.sigma"),
                                        _number(e["xi"], "enforcement.xi"))
    except ConstraintViolation as exc:
        raise ConstraintViolation(f"enforcement.xi: {exc}") from None
    except ConfigurationError as exc:
        raise ConfigurationError(f"enforcement: {exc}") from None

    i = data.get("integrator", {})
    try:
        integrator = IntegratorSettings(**{k: (int(v) if k == "record_every" else _number(v, f"integrator.{k}"))
                                           for k, v in i.items()})
    except ConfigurationError as exc:
        raise ConfigurationError(f"integrator: {exc}") from None

    o = data["output"]
    formats = o["formats"]
    if not isinstance(formats, list) or not all(f in FORMATS for f in formats):
        raise ConfigurationError(f"output.formats: expected a subset of {list(FORMATS)}")
    if not isinstance(o["directory"], str):
        raise ConfigurationError("output.directory: expected a string")

    mu = _number(data["initial"]["mu"], "initial.mu")
    _check_mu(model, mu)
    return RunConfig(model, mu, enforcement, integrator, o["directory"], tuple(formats))


def to_dict(cfg: RunConfig) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "model": {
            "n": cfg.model.n,
            "r": list(cfg.model.r),
            "S": cfg.model.S,
            "tau": list(cfg.model.tau),
            "theta_ev": list(cfg.model.theta_ev),
            "sector_weights": list(cfg.model.sector_weights),
        },
        "initial": {"mu": cfg.mu},
        "enforcement": {"sigma": cfg.enforcement.sigma, "xi": cfg.enforcement.xi},
        "integrator": {
            "dt": cfg.integrator.dt,
            "tol": cfg.integrator.tol,
            "max_time": cfg.integrator.max_time,
            "record_every": cfg.integrator.record_every,
        },
        "output": {"directory": cfg.output_dir, "formats": list(cfg.formats)},
    }


def dumps(cfg: RunConfig) -> str:
    return tomli_w.dumps(to_dict(cfg))


def loads(text: str) -> RunConfig:
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigurationError(f"<document>: {exc}") from None
    return from_dict(data)


def _reference_document(theta_ev) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "model": {
            "n": presets.N_CLASSES,
            "r": {"base": 10.0, "step": 10.0},
            "S": presets.EXCHANGE,
            "tau": {"first": presets.TAU_FIRST, "last": presets.TAU_LAST},
            "theta_ev": list(theta_ev),
            "sector_weights": [1 / 3, 1 / 3, 1 / 3],
        },
        "initial": {"mu": presets.TABLE_MU},
        "enforcement": {"sigma": 0.0, "xi": 2.0},
        "output": {"directory": "out", "formats": list(FORMATS)},
    }


PRESETS = {
    "paper.default": _reference_document(presets.SCENARIO_1.theta_ev),
    "paper.scenario1": _reference_document(presets.SCENARIO_1.theta_ev),
    "paper.scenario2": _reference_document(presets.SCENARIO_2.theta_ev),
    "paper.compliant": _reference_document((1.0, 1.0, 1.0)),
}


def load_config(source: str | Path = "paper.default") -> RunConfig:
    """Load a preset by name or a TOML file by path."""
    if str(source) in PRESETS:
        return from_dict(copy.deepcopy(PRESETS[str(source)]))
    path = Path(source)
    if not path.is_file():
        raise ConfigurationError(f"{source}: not a preset name and not a readable file")
    return loads(path.read_text(encoding="utf-8"))
