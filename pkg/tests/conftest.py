import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from skit import entropy, make_problem, nonconvex_test, quadratic

settings.register_profile(
    "skit", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("skit")

# criterion id -> [description, all tests passed so far]
ACCEPTANCE: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, text): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and not rep.failed):
        return
    n, text = mark.args
    entry = ACCEPTANCE.setdefault(n, [text, True])
    entry[1] = entry[1] and rep.passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(ACCEPTANCE):
        text, ok = ACCEPTANCE[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {n:>2}  {text}")

P22 = np.array([[0.4, 0.1], [0.1, 0.4]])
MU22 = np.array([0.6, 0.4])
NU22 = np.array([0.5, 0.5])

# closed-form quadratic optimizer of the 2x2 instance
Q_QUAD = np.array([[0.45, 0.15], [0.05, 0.35]])


@pytest.fixture
def entropy22():
    return make_problem(MU22, NU22, P22, entropy())


@pytest.fixture
def quadratic22():
    return make_problem(MU22, NU22, P22, quadratic())


@pytest.fixture
def nonconvex22():
    return make_problem(MU22, NU22, P22, nonconvex_test(2.0))


@pytest.fixture
def trivial22():
    """P already has marginals (0.5, 0.5): the optimizer is P itself."""
    return make_problem([0.5, 0.5], [0.5, 0.5], P22, entropy())
