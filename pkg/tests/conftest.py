import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}
# one-time JIT compilation, kept out of the criteria's timed regions
WARMUP: dict[str, float] = {}


@pytest.fixture
def record():
    def _record(k: int, passed: bool, detail: str):
        ACCEPTANCE[k] = (bool(passed), detail)
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    if "seconds" in WARMUP:
        terminalreporter.write_line(f"JIT warm-up before timing: {WARMUP['seconds']:.1f}s")
    for k in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if passed else 'FAIL'}  {detail}")
