"""Shared fixtures and the acceptance-criteria summary hook.

The heavy Monte Carlo fixtures are session-scoped so the trend tests and the
acceptance tests share one run. The terminal summary prints one PASS/FAIL
line per acceptance criterion, keyed off test names matching
``test_criterion_<n>``.
"""

import re
import time

import numpy as np
import pytest

from scnpower.experiments import SweepSpec, generate_topology, run_sweep
from scnpower.joint import solve_instance
from scnpower.scenario import sample_channels

CRITERIA = {
    1: "duality power conservation, 1000 instances, 1e-9 relative, < 10 s",
    2: "rate fidelity 1e-9 and closed-form precoder agreement 1e-8",
    3: "backhaul recursion vs 2-D grid oracle, 50 instances, 0.1%, < 60 s",
    4: "power-control solve vs grid minimizer, 50 instances, 0.1%",
    5: "per-trial DPC <= ZFBF backhaul power and outage ordering, 1e4 trials",
    6: "sweep trends: monotone outage, interior power peak, DPC below ZFBF, < 10 min",
    7: "bit-identical CSV across reruns and thread counts",
}

_criterion_status = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    match = re.match(r"test_criterion_(\d+)", item.name)
    if not match:
        return
    key = int(match.group(1))
    if report.when == "call":
        _criterion_status[key] = _criterion_status.get(key, True) and report.passed
    elif report.failed:
        # setup/teardown failure (e.g. a broken fixture) also fails the criterion
        _criterion_status[key] = False


def pytest_terminal_summary(terminalreporter):
    if not _criterion_status:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(CRITERIA):
        if key in _criterion_status:
            status = "PASS" if _criterion_status[key] else "FAIL"
        else:
            status = "NOT RUN"
        terminalreporter.write_line(f"criterion {key}: {status:<7} {CRITERIA[key]}")


@pytest.fixture(scope="session")
def acceptance_sweep():
    """Full-scale distance sweep at the default radio parameters.

    11 points from 100 m to 600 m, 1e4 trials per point, both schemes on
    shared realizations. Returns (statistics, wall seconds).
    """
    spec = SweepSpec(
        distances_m=tuple(float(d) for d in range(100, 601, 50)),
        trials=10_000,
        seed=0,
    )
    start = time.perf_counter()
    stats = run_sweep(spec, workers=1)
    return stats, time.perf_counter() - start


@pytest.fixture(scope="session")
def dominance_trials():
    """Per-trial paired scheme comparison around the outage knee.

    2500 trials at each of four distances; every trial solves both schemes
    on the same realization and keeps only scalars. Returns (spec, records)
    where each record is (point_index, dpc_bh_total, zf_bh_total,
    dpc_bh_feasible, zf_bh_feasible, dpc_outage, zf_outage).
    """
    spec = SweepSpec(
        distances_m=(250.0, 300.0, 350.0, 400.0),
        trials=2500,
        seed=11,
    )
    records = []
    for point, distance in enumerate(spec.distances_m):
        for trial in range(spec.trials):
            rng = np.random.default_rng(np.random.SeedSequence([spec.seed, point, trial]))
            scenario = generate_topology(spec, distance, rng)
            channels = sample_channels(scenario, rng)
            dpc = solve_instance(scenario, channels, scheme="dpc")
            zf = solve_instance(scenario, channels, scheme="zfbf")
            records.append(
                (
                    point,
                    float(dpc.backhaul.total_power_w),
                    float(zf.backhaul.total_power_w),
                    bool(dpc.backhaul.feasible),
                    bool(zf.backhaul.feasible),
                    bool(dpc.system_outage),
                    bool(zf.system_outage),
                )
            )
    return spec, records
