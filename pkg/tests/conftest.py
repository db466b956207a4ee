import numpy as np
import pytest

from crystalflow.forcing import ForcingField


@pytest.fixture
def unit_field():
    return ForcingField(-1.0, 1.0, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE: dict = {}


@pytest.fixture
def criterion():
    """record(n, title, ok, detail) stores one line for the acceptance summary
    and then asserts ok."""
    def record(n: int, title: str, ok: bool, detail: str = "") -> None:
        ACCEPTANCE[n] = (title, bool(ok), detail)
        print(f"criterion {n:2d} {'PASS' if ok else 'FAIL'}: {title} | {detail}")
        assert ok, f"criterion {n} failed: {detail}"
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {n:2d}. {title}: {detail}")
