import warnings

import pytest

from rmtgap.anchored import IllConditionedAnchorWarning

_ACCEPTANCE_KEY = pytest.StashKey[list]()


@pytest.fixture(autouse=True)
def _quiet_anchor_warnings():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IllConditionedAnchorWarning)
        yield


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []


@pytest.fixture
def acceptance(request):
    """Record one PASS/FAIL line for an acceptance criterion and echo it."""
    lines = request.config.stash[_ACCEPTANCE_KEY]

    def report(number, ok, detail):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append(line)
        print(line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
