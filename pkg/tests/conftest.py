import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ncwigner.symplectic import build_omega, planar

settings.register_profile(
    "default",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def params():
    return planar(1.0, 0.5, 0.5)


@pytest.fixture
def form(params):
    return build_omega(params)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


# -- acceptance report -----------------------------------------------------------

_ACCEPTANCE: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(n, title): test belongs to acceptance criterion n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or not (rep.when == "call" or rep.failed or rep.skipped):
        return
    n, title = mark.args
    entry = _ACCEPTANCE.setdefault(n, {"title": title, "failed": [], "ran": 0})
    if rep.when == "call":
        entry["ran"] += 1
    if rep.failed:
        entry["failed"].append(item.name)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        e = _ACCEPTANCE[n]
        status = "FAIL" if e["failed"] or not e["ran"] else "PASS"
        line = f"[{status}] {n:2d}. {e['title']}"
        if e["failed"]:
            line += f"  (failed: {', '.join(e['failed'])})"
        terminalreporter.write_line(line)
