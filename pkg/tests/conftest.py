"""Shared test configuration.

Sets plugin discovery to the fixture directory (the package's built-in
plugins remain discoverable as the fallback), seeds the tabular handle
table for reproducibility, and prints one pass/fail line per acceptance
criterion at the end of the run together with the allocator balance.
"""

from __future__ import annotations

import os
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"

os.environ.setdefault("METAFFI_HOME", str(FIXTURES / "plugins"))
os.environ.setdefault("METAFFI_TABULAR_SEED", "20240915")

_acceptance_results: list[tuple[str, str]] = []


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    _acceptance_results.append((name, "PASS" if report.passed else "FAIL"))


def pytest_terminal_summary(terminalreporter):
    from metaffi.allocator import default_allocator

    if _acceptance_results:
        terminalreporter.write_sep("-", "acceptance criteria")
        for name, outcome in _acceptance_results:
            terminalreporter.write_line(f"ACCEPTANCE {name}: {outcome}")
    alloc, free = default_allocator.snapshot()
    terminalreporter.write_line(
        f"allocator counters: alloc={alloc} free={free} "
        f"({'balanced' if alloc == free else 'LEAK'})"
    )


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES
