"""Compare the numba and numpy backends on the hot kernels.

    python benchmarks/bench_kernels.py [--repeat 5] [--steps 2000]

Reports the best-of-``repeat`` wall time per call for a single right-hand
side evaluation and for a fixed-length RK4 run, on the 9x3 reference model
and on a larger synthetic model.  Outputs of the two backends are checked
against each other before timing.
"""
import argparse
import timeit

import numpy as np

from taxkinetics import kernels, presets
from taxkinetics._backend import HAVE_NUMBA
from taxkinetics.dynamics import make_initial_condition
from taxkinetics.kinetic_core import EnforcementParams, ModelConfig, build_tensors


def synthetic_config(n, m):
    return ModelConfig(r=10.0 * np.arange(1, n + 1), S=0.1, tau=np.linspace(0.2, 0.45, n),
                       theta_ev=np.linspace(1.0, 0.3, m))


def cases():
    yield "reference 9x3", presets.SCENARIO_1.config()
    yield "synthetic 40x4", synthetic_config(40, 4)


def best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def run_case(name, cfg, repeat, steps):
    enf = EnforcementParams(0.2, 1.7)
    t = build_tensors(cfg, enf)
    x = make_initial_condition(cfg, float(np.mean(cfg.incomes)) * 0.8).grid.copy()
    args = t._kernel_args

    def rhs():
        return kernels.audit_rhs(x, enf.sigma, *args)

    def rk4():
        return kernels.rk4(x, enf.sigma, *args, 1.0, 1e-30, steps, steps, False)[0]

    results = {}
    for backend in ("numba", "numpy"):
        if backend == "numba" and not HAVE_NUMBA:
            continue
        kernels.use_numba(backend == "numba")
        out_rhs, out_rk4 = rhs(), rk4()  # also triggers compilation
        results[backend] = (best(rhs, repeat * 20), best(rk4, repeat), out_rhs, out_rk4)

    if len(results) == 2:
        d_rhs = np.max(np.abs(results["numba"][2] - results["numpy"][2]))
        d_rk4 = np.max(np.abs(results["numba"][3] - results["numpy"][3]))
        print(f"{name}: backends differ by {d_rhs:.1e} (rhs), {d_rk4:.1e} (after {steps} steps)")
    for backend, (t_rhs, t_rk4, _, _) in results.items():
        print(f"  {backend:<6} rhs {t_rhs * 1e6:10.1f} us   rk4 x{steps} {t_rk4 * 1e3:10.2f} ms")
    if len(results) == 2:
        print(f"  speedup rhs {results['numpy'][0] / results['numba'][0]:6.1f}x   "
              f"rk4 {results['numpy'][1] / results['numba'][1]:6.1f}x")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--steps", type=int, default=2000)
    args = parser.parse_args()
    previous = kernels.USE_NUMBA
    try:
        for name, cfg in cases():
            run_case(name, cfg, args.repeat, args.steps)
    finally:
        kernels.use_numba(previous)


if __name__ == "__main__":
    main()
