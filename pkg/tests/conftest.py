from __future__ import annotations

import pytest

from privcache.gf import FieldSpec

# acceptance criteria append (label, passed, detail) here; printed at the end of the run
ACCEPTANCE_LINES: list[tuple[str, bool, str]] = []


@pytest.fixture(scope="session")
def gf2():
    return FieldSpec.of_width(2)


@pytest.fixture(scope="session")
def gf4():
    return FieldSpec.of_width(4)


@pytest.fixture(scope="session")
def gf8():
    return FieldSpec.of_width(8)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail in ACCEPTANCE_LINES:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {label}: {detail}")
