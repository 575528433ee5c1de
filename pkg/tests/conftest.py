import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("todalab", deadline=None, max_examples=30, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("todalab")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = []


@pytest.fixture
def acceptance(request):
    """``acceptance(n, title, checks, seconds)`` records and prints one line
    per criterion; ``checks`` is a list of ``(label, value, tolerance)``."""

    def record(n, title, checks, seconds):
        ok = all(v < tol for _, v, tol in checks) and seconds <= 60.0
        detail = "; ".join(f"{label} {v:.3g} (< {tol:g})" for label, v, tol in checks)
        line = f"{'PASS' if ok else 'FAIL'} criterion {n:2d} {title}: {detail}; {seconds:.1f}s"
        request.config.stash[_ACCEPTANCE].append((n, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = sorted(config.stash.get(_ACCEPTANCE, []))
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in lines:
            terminalreporter.write_line(line)
