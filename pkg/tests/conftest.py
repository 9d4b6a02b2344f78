import numpy as np
import pytest
from hypothesis import settings

from lpvoronoi import NormSpec, make_basis

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

L2 = NormSpec(2)
L1 = NormSpec(1)
L3 = NormSpec(3)


@pytest.fixture
def z2():
    return make_basis(np.eye(2))


@pytest.fixture
def hex_basis():
    # columns (1,1) and (0,3)
    return make_basis(np.array([[1.0, 0.0], [1.0, 3.0]]))


def random_integer_bases(seed: int, count: int, dims=(2, 3), low=-2, high=2):
    """Seeded nonsingular integer bases, alternating through ``dims``."""
    from lpvoronoi import SingularBasis

    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        n = dims[len(out) % len(dims)]
        try:
            out.append(make_basis(rng.integers(low, high + 1, size=(n, n))))
        except SingularBasis:
            continue
    return out


# criterion number -> list of outcomes, filled during the run
_CRITERIA: dict[int, list[bool]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion the test checks")


def pytest_runtest_logreport(report):
    crit = getattr(report, "criterion", None)
    if crit is not None and (report.when == "call" or report.failed):
        _CRITERIA.setdefault(crit, []).append(report.passed)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        outcome.get_result().criterion = mark.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        ok = _CRITERIA[n]
        status = "PASS" if all(ok) else "FAIL"
        terminalreporter.write_line(f"criterion {n}: {status} ({sum(ok)}/{len(ok)} tests)")
