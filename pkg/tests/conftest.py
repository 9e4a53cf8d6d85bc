from __future__ import annotations

import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def calibrated_experiment(tmp_path_factory):
    """The full calibrated matrix at 300 s, seed 42, run once and reported."""
    from dualwatt.orchestrator import default_plan, report_experiment, run_experiment

    out = tmp_path_factory.mktemp("experiments")
    plan = default_plan(output_dir=out)
    directory = run_experiment(plan)
    report = report_experiment(directory)
    return directory, report


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
