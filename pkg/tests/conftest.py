import numpy as np
import pytest

from focklab import make_model, make_weight

_ACCEPTANCE = {}


@pytest.fixture(scope="session")
def classical():
    cache = {}

    def get(n, alpha=1.0):
        key = (n, alpha)
        if key not in cache:
            cache[key] = make_model(make_weight("classical", alpha), n)
        return cache[key]

    return get


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line for an acceptance criterion."""

    def record(criterion, ok, detail=""):
        _ACCEPTANCE.setdefault(criterion, []).append((bool(ok), detail))
        line = f"ACCEPTANCE {criterion:>4}  {'PASS' if ok else 'FAIL'}  {detail}"
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(_ACCEPTANCE, key=lambda c: (int("".join(ch for ch in c if ch.isdigit())), c)):
        for ok, detail in _ACCEPTANCE[crit]:
            terminalreporter.write_line(f"criterion {crit:>4}: {'PASS' if ok else 'FAIL'}  {detail}")
