import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    # setup time counts too: the long simulations live in module fixtures
    total, verdict, title = {}, {}, {}
    for reports in terminalreporter.stats.values():
        for rep in reports:
            if not hasattr(rep, "nodeid") or not hasattr(rep, "when"):
                continue
            total[rep.nodeid] = total.get(rep.nodeid, 0.0) + rep.duration
            props = dict(getattr(rep, "user_properties", []))
            if "criterion" in props and rep.when == "call":
                title[rep.nodeid] = props["criterion"]
                verdict[rep.nodeid] = "PASS" if rep.passed else "FAIL"
    if title:
        terminalreporter.section("acceptance criteria")
        for node in sorted(title, key=title.get):
            terminalreporter.write_line(
                f"{verdict[node]} criterion {title[node].strip()} ({total[node]:.2f} s)")
