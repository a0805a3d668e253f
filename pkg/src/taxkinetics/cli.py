"""Command-line workbench: ``taxkinetics {simulate,sweep,fit,invert,paper-tables}``.

Exit status is 0 only when every run converged and, for ``paper-tables``,
every comparison is within tolerance.  Configuration and usage errors exit
with status 2.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import calibration, metrics, presets
from .config import RunConfig, load_config
from .dynamics import KineticRates, find_steady_state, make_initial_condition
from .errors import TaxKineticsError
from .kinetic_core import EnforcementParams, ModelConfig

SWEEP_HEADER = ("sigma", "xi", "gini", "tax_revenue", "converged", "residual")
FIT_KEYS = ("metric", "a0", "a10", "a01", "a11", "fit_residual_max")
METRIC_ALIASES = {"gini": "gini", "tr": "tax_revenue", "tax_revenue": "tax_revenue"}


def fmt(value) -> str:
    """Fixed numeric formatting for every file we write (9 significant digits)."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.9g}"


def _round(value):
    if isinstance(value, (bool, np.bool_, str)) or value is None:
        return bool(value) if isinstance(value, np.bool_) else value
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float(fmt(value))
    if isinstance(value, dict):
        return {k: _round(v) for k, v in value.items()}
    return [_round(v) for v in value]


def write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_round(payload), indent=2) + "\n", encoding="utf-8")


def write_csv(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([v if isinstance(v, str) else fmt(v) for v in row])


def state_header(n: int, m: int) -> list[str]:
    return [f"x_{j}_{a}" for j in range(1, n + 1) for a in range(1, m + 1)]


def write_sweep_csv(path: Path, table: calibration.SweepTable) -> None:
    write_csv(path, SWEEP_HEADER,
              ((r.sigma, r.xi, r.gini, r.tax_revenue, r.converged, r.residual) for r in table.rows))


def read_sweep_csv(path: Path) -> calibration.SweepTable:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = set(SWEEP_HEADER[:4]) - set(reader.fieldnames or ())
        if missing:
            raise TaxKineticsError(f"{path}: missing columns {sorted(missing)}")
        rows = []
        for rec in reader:
            converged = rec.get("converged", "true").strip().lower() in ("true", "1", "yes")
            residual = float(rec["residual"]) if rec.get("residual") not in (None, "") else 0.0
            rows.append(calibration.SweepRow(float(rec["sigma"]), float(rec["xi"]), float(rec["gini"]),
                                             float(rec["tax_revenue"]), converged, residual))
    return calibration.SweepTable.from_rows(rows)


def read_fit_json(path: Path) -> calibration.FitCoefficients:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    missing = set(FIT_KEYS) - set(data)
    if missing:
        raise TaxKineticsError(f"{path}: missing keys {sorted(missing)}")
    return calibration.FitCoefficients(data["metric"], *(float(data[k]) for k in FIT_KEYS[1:]))


def _float_list(text: str) -> list[float]:
    values = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "/" in part:
            num, den = part.split("/", 1)
            values.append(float(num) / float(den))
        else:
            values.append(float(part))
    if not values:
        raise argparse.ArgumentTypeError("expected a non-empty comma-separated list")
    return values


def _out_dir(args, cfg: RunConfig | None = None) -> Path:
    if args.out:
        return Path(args.out)
    return Path(cfg.output_dir if cfg else "out")


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    cfg = load_config(args.config).with_overrides(args.sigma, args.xi, args.mu)
    out = _out_dir(args, cfg)
    model, enf = cfg.model, cfg.enforcement
    rates = KineticRates.from_config(model, enf)
    result = find_steady_state(rates, make_initial_condition(model, cfg.mu), cfg.integrator)
    x = result.state.x
    rep = metrics.report(x, rates.tensors, enf)

    if "csv" in cfg.formats:
        traj = result.trajectory
        write_csv(out / "trajectory.csv", ["t", *state_header(model.n, model.m)],
                  ([t, *s] for t, s in zip(traj.times, traj.states)))
        curve = metrics.lorenz(x, model.incomes)
        write_csv(out / "lorenz.csv", ["population_share", "income_share"],
                  zip(curve.population, curve.income))
    if "json" in cfg.formats:
        write_json(out / "equilibrium.json", {
            "mu": cfg.mu,
            "sigma": enf.sigma,
            "xi": enf.xi,
            "converged": result.converged,
            "t_final": result.t_final,
            "residual": result.residual,
            "state": x.tolist(),
            "gini": rep.gini,
            "tax_revenue": rep.tax_revenue,
            "sector_mean_income": list(rep.sector_mean_income),
        })
    status = "converged" if result.converged else "NOT converged"
    print(f"{status} at t={fmt(result.t_final)} residual={fmt(result.residual)} "
          f"gini={fmt(rep.gini)} tax_revenue={fmt(rep.tax_revenue)}")
    return 0 if result.converged else 1


def cmd_sweep(args) -> int:
    cfg = load_config(args.config).with_overrides(mu=args.mu)
    sigmas = args.sigma_list if args.sigma_list is not None else list(presets.SIGMAS)
    xis = args.xi_list if args.xi_list is not None else list(presets.XIS)
    table = calibration.sweep(cfg.model, cfg.mu, sigmas, xis, cfg.integrator, workers=args.workers)
    out = _out_dir(args, cfg)
    write_sweep_csv(out / "sweep.csv", table)
    print(f"{len(table.rows)} cells written to {out / 'sweep.csv'}")
    if not table.fit_eligible:
        print("warning: some cells did not converge; table is not fit-eligible", file=sys.stderr)
        return 1
    return 0


def cmd_fit(args) -> int:
    metric = METRIC_ALIASES[args.metric]
    table = read_sweep_csv(args.table)
    fit = calibration.bilinear_fit(table, metric)
    out = _out_dir(args)
    write_json(out / "fit.json", {k: getattr(fit, k) for k in FIT_KEYS})
    if args.diagnostics:
        diag = {"quadratic": calibration.quadratic_fit(table, metric)}
        if len(table.sigmas) == len(table.xis):
            t = calibration.transposed_fit(table, metric)
            diag["transposed"] = {k: getattr(t, k) for k in FIT_KEYS}
        write_json(out / "fit_diagnostics.json", diag)
    print(f"f(xi, sigma) = {fmt(fit.a0)} + {fmt(fit.a10)} xi + {fmt(fit.a01)} sigma "
          f"+ {fmt(fit.a11)} xi sigma   (max residual {fmt(fit.fit_residual_max)})")
    return 0


def cmd_invert(args) -> int:
    fit = read_fit_json(args.fit)
    if (args.sigma is None) == (args.xi is None):
        raise TaxKineticsError("invert needs exactly one of --sigma or --xi")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        if args.sigma is not None:
            inv = calibration.xi_for_target(fit, args.target, args.sigma)
            free, fixed = "xi", {"sigma": args.sigma}
        else:
            inv = calibration.sigma_for_target(fit, args.target, args.xi)
            free, fixed = "sigma", {"xi": args.xi}
    payload = {"target": args.target, **fixed, free: inv.value, "form": inv.form,
               "within_constraint": inv.within_constraint, "warning": inv.warning}
    print(json.dumps(_round(payload), indent=2))
    if inv.warning:
        print(f"warning: {inv.warning}", file=sys.stderr)
    if args.out:
        write_json(Path(args.out) / "inversion.json", payload)
    return 0


def _baseline(model: ModelConfig, mu, settings):
    enf = EnforcementParams(0.0, 2.0)
    rates = KineticRates.from_config(model, enf)
    res = find_steady_state(rates, make_initial_condition(model, mu), settings)
    return (metrics.gini(res.state.x, model.incomes),
            metrics.tax_revenue(res.state.x, rates.tensors, enf), res.converged)


def reference_table_rows(scenario: int, mu: float = presets.TABLE_MU, settings=None, workers: int = 1):
    """Run one reference scenario and compare with its tabulated values.

    Returns ``(rows, table)``; each row is a dict with the comparison for a
    single quantity, including a ``passed`` flag.
    """
    preset = presets.SCENARIOS[scenario]
    model = preset.config()
    table = calibration.sweep(model, mu, presets.SIGMAS, presets.XIS, settings,
                              workers=workers, scenario=preset.name)
    rows = []

    def add(quantity, sigma, xi, computed, reference, kind, converged=True):
        abs_dev = computed - reference
        rel_dev = abs_dev / reference
        tol = presets.GINI_ABS_TOL if kind == "abs" else presets.TR_REL_TOL
        dev = abs(abs_dev) if kind == "abs" else abs(rel_dev)
        rows.append({"quantity": quantity, "sigma": sigma, "xi": xi, "computed": computed,
                     "reference": reference, "abs_dev": abs_dev, "rel_dev": rel_dev,
                     "tolerance": f"{tol:g} {kind}", "passed": bool(converged and dev <= tol)})

    g_ref, t_ref = preset.gini, preset.tax_revenue
    for i, s in enumerate(presets.SIGMAS):
        for k, x in enumerate(presets.XIS):
            cell = table.rows[i * len(presets.XIS) + k]
            add("gini", s, x, cell.gini, g_ref[i, k], "abs", cell.converged)
            add("tax_revenue", s, x, cell.tax_revenue, t_ref[i, k], "rel", cell.converged)

    compliant = replace(model, theta_ev=(1.0,) * model.m)
    g_c, t_c, ok_c = _baseline(compliant, mu, settings)
    g_n, t_n, ok_n = _baseline(model, mu, settings)
    add("gini_no_evasion", 0.0, "", g_c, preset.baseline_compliant[0], "abs", ok_c)
    add("tax_revenue_no_evasion", 0.0, "", t_c, preset.baseline_compliant[1], "rel", ok_c)
    add("gini_no_audit", 0.0, "", g_n, preset.baseline_no_audit[0], "abs", ok_n)
    add("tax_revenue_no_audit", 0.0, "", t_n, preset.baseline_no_audit[1], "rel", ok_n)

    top = table.rows[-1].tax_revenue  # sigma = 14/56, xi = 1.85
    gain = top / t_n - 1.0
    lo, hi = presets.REVENUE_GAIN_RANGE
    rows.append({"quantity": "revenue_gain_max_audit", "sigma": presets.SIGMAS[-1], "xi": presets.XIS[-1],
                 "computed": gain, "reference": "", "abs_dev": "", "rel_dev": "",
                 "tolerance": f"[{lo:g}, {hi:g}]" if scenario == 1 else "reported only",
                 "passed": bool(lo <= gain <= hi) if scenario == 1 else True})
    return rows, table


def cmd_paper_tables(args) -> int:
    out = _out_dir(args)
    rows, table = reference_table_rows(args.scenario, mu=args.mu or presets.TABLE_MU, workers=args.workers)
    header = ["quantity", "sigma", "xi", "computed", "reference", "abs_dev", "rel_dev", "tolerance", "passed"]
    name = f"paper_tables_scenario{args.scenario}"
    write_csv(out / f"{name}.csv", header, ([row[h] for h in header] for row in rows))
    write_sweep_csv(out / f"{name}_sweep.csv", table)
    failed = [row for row in rows if not row["passed"]]
    write_json(out / f"{name}.json", {
        "scenario": args.scenario,
        "mu": args.mu or presets.TABLE_MU,
        "checks": len(rows),
        "failed": len(failed),
        "max_gini_abs_dev": max(abs(r["abs_dev"]) for r in rows if r["quantity"].startswith("gini")),
        "max_tax_revenue_rel_dev": max(abs(r["rel_dev"]) for r in rows
                                       if r["quantity"].startswith("tax_revenue")),
    })
    for row in rows:
        mark = "ok  " if row["passed"] else "FAIL"
        ref = row["reference"] if isinstance(row["reference"], str) else fmt(row["reference"])
        sigma = fmt(row["sigma"])
        xi = row["xi"] if isinstance(row["xi"], str) else fmt(row["xi"])
        print(f"{mark} {row['quantity']:<24} sigma={sigma:<11} xi={xi:<5} "
              f"computed={fmt(row['computed']):<12} reference={ref}")
    print(f"{len(rows) - len(failed)}/{len(rows)} checks passed; report in {out / (name + '.csv')}")
    return 0 if not failed else 1


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="taxkinetics", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", default="paper.default",
                           help="TOML config path or preset name (default: paper.default)")
            p.add_argument("--mu", type=float, help="override the total income")
        p.add_argument("--out", help="output directory")

    p = sub.add_parser("simulate", help="integrate one configuration to equilibrium")
    common(p)
    p.add_argument("--sigma", type=float)
    p.add_argument("--xi", type=float)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="equilibrium metrics over a (sigma, xi) grid")
    common(p)
    p.add_argument("--sigma-list", type=_float_list, help="comma-separated, fractions like 2/56 allowed")
    p.add_argument("--xi-list", type=_float_list)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fit", help="bilinear least-squares fit of a sweep CSV")
    common(p, config=False)
    p.add_argument("--table", required=True, help="sweep CSV")
    p.add_argument("--metric", choices=("gini", "tr"), default="tr")
    p.add_argument("--diagnostics", action="store_true",
                   help="also write quadratic and axis-transposed diagnostic fits")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("invert", help="solve the fitted surface for sigma or xi")
    common(p, config=False)
    p.add_argument("--fit", required=True, help="fit JSON")
    p.add_argument("--target", type=float, required=True)
    p.add_argument("--sigma", type=float, help="fixed audit fraction; solves for xi")
    p.add_argument("--xi", type=float, help="fixed penalty multiplier; solves for sigma")
    p.set_defaults(func=cmd_invert)

    p = sub.add_parser("paper-tables", help="rerun a reference scenario and compare with its tables")
    common(p, config=False)
    p.add_argument("--scenario", type=int, choices=(1, 2), required=True)
    p.add_argument("--mu", type=float, help=f"total income (default {presets.TABLE_MU})")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_paper_tables)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (TaxKineticsError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
