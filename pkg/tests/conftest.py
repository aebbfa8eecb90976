import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

LOGIN = Path(__file__).parents[1] / "src" / "taskalg" / "models" / "login.tfm"
GOLDEN = Path(__file__).parent / "golden"


@pytest.fixture
def login_text():
    return LOGIN.read_text(encoding="utf-8")


@pytest.fixture
def login_path():
    return LOGIN


ACCEPTANCE_RESULTS: dict[str, str] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call":
        return
    label = marker.args[0]
    ACCEPTANCE_RESULTS[label] = "PASS" if report.passed else "FAIL"


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label, result in sorted(ACCEPTANCE_RESULTS.items(), key=lambda kv: int(kv[0].split(".")[0])):
        terminalreporter.write_line(f"[{result}] {label}")
