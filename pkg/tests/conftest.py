import time

import pytest

from eitsplit.config import load_preset
from eitsplit.scenario import run_config


class PresetRuns:
    """Runs each preset once per session (with the convergence rerun) and records wall time."""

    def __init__(self, root):
        self.root = root
        self._cache = {}
        self.seconds = {}

    def __call__(self, name):
        if name not in self._cache:
            cfg = load_preset(name)
            t0 = time.perf_counter()
            outcome = run_config(cfg, self.root, plot=False)
            self.seconds[name] = time.perf_counter() - t0
            self._cache[name] = outcome
        return self._cache[name]


@pytest.fixture(scope="session")
def preset_run(tmp_path_factory):
    return PresetRuns(tmp_path_factory.mktemp("presets"))


ACCEPTANCE_LINES = []


def acceptance_report(tag, ok, detail):
    """Record one acceptance line; printed live and again in the terminal summary."""
    line = f"[{'PASS' if ok else 'FAIL'}] {tag}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
