import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

FS = 2000.0


def tone(f, n=500, fs=FS, phase=0.0):
    return np.cos(2 * np.pi * f * np.arange(n) / fs + phase)


def linear_chirp(f0, f1, n=500, fs=FS):
    t = np.arange(n) / fs
    rate = (f1 - f0) / (n / fs)
    return np.cos(2 * np.pi * (f0 * t + 0.5 * rate * t * t)), f0 + rate * t


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_collection_modifyitems(config, items):
    if os.environ.get("MSSTEMG_RUN_SLOW") == "1":
        return
    skip = pytest.mark.skip(reason="slow; set MSSTEMG_RUN_SLOW=1 to run")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    lines = []
    for key in ("passed", "failed"):
        for rep in terminalreporter.stats.get(key, []):
            lines += [v for k, v in getattr(rep, "user_properties", []) if k == "acceptance"]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
