import numpy as np
import pytest

from taxkinetics import kernels, presets
from taxkinetics.cli import reference_table_rows
from taxkinetics.kinetic_core import ModelConfig

ACCEPTANCE_MODULE = "test_acceptance.py"
ACCEPTANCE_NOTES = {}


@pytest.fixture
def note(request):
    """Attach a one-line measurement to the acceptance summary."""
    def add(text):
        ACCEPTANCE_NOTES[request.node.name] = text
    return add


@pytest.fixture(params=["numba", "numpy"])
def backend(request):
    previous = kernels.use_numba(request.param == "numba")
    yield request.param
    kernels.use_numba(previous)


@pytest.fixture(scope="session")
def scenario1_config():
    return presets.SCENARIO_1.config()


@pytest.fixture(scope="session")
def scenario2_config():
    return presets.SCENARIO_2.config()


def random_config(rng, n, m):
    r = np.cumsum(rng.uniform(5.0, 15.0, n))
    tau = np.sort(rng.uniform(0.0, 0.5, n))
    theta_ev = rng.uniform(0.0, 1.0, m)
    theta_ev[0] = 1.0
    w = rng.dirichlet(np.ones(m))
    w[-1] = 1.0 - w[:-1].sum()
    return ModelConfig(r=r, S=0.1 * rng.uniform(0.1, 1.0) * np.diff(r).min() * 0.5,
                       tau=tau, theta_ev=theta_ev, sector_weights=w)


def random_state(rng, n, m):
    x = rng.dirichlet(np.ones(n * m))
    return x / x.sum()


_reports = {}


def reference_report(scenario, mu=presets.TABLE_MU):
    """Reference-grid sweep plus baselines, computed once per session."""
    if (scenario, mu) not in _reports:
        _reports[scenario, mu] = reference_table_rows(scenario, mu)
    return _reports[scenario, mu]


def reference_sweep(scenario):
    return reference_report(scenario)[1]


def pytest_terminal_summary(terminalreporter):
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when != "call" or ACCEPTANCE_MODULE not in rep.nodeid:
                continue
            name = rep.nodeid.split("::")[-1]
            lines.append((name, outcome))
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in sorted(lines):
        status = "PASS" if outcome == "passed" else "FAIL"
        detail = ACCEPTANCE_NOTES.get(name, "")
        terminalreporter.write_line(f"{status}  {name}" + (f"  [{detail}]" if detail else ""))
