import pytest

from pfwb.problems import K3_DEG12, RODLAND, run_monodromy

ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def k3_run():
    return run_monodromy(K3_DEG12, 115)


@pytest.fixture(scope="session")
def rodland_run():
    return run_monodromy(RODLAND, 115)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, label = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {label}")
