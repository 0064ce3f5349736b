import numpy as np
import pytest

import udnsim as u


def pytest_configure(config):
    config._acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def record_criterion(request):
    """Collects one PASS/FAIL line per acceptance criterion for the run summary."""

    def _record(number: int, name: str, passed: bool, detail: str = ""):
        verdict = "PASS" if passed else "FAIL"
        suffix = f"  [{detail}]" if detail else ""
        line = f"criterion {number} ({name}): {verdict}{suffix}"
        request.config._acceptance_lines.append(line)
        print(line)

    return _record


@pytest.fixture
def small_topology():
    """3 APs, 4 users in a 20 m square so every pair is plausibly in range."""
    return u.generate_topology(3, 4, 20.0, 15.0, seed=7)


@pytest.fixture
def small_net_cfg():
    return u.NetworkConfig(num_subcarriers=2, k_max=2, f_max=2)


def random_topology(rng, num_aps, num_users, area_side_m=18.0):
    """Small random drop; the tight area keeps candidate sets non-empty."""
    return u.generate_topology(
        num_aps, num_users, area_side_m, 15.0, seed=int(rng.integers(2**31))
    )
