import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("hamlin", deadline=None, max_examples=40)
settings.load_profile("hamlin")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_configure(config):
    config.acceptance_results = {}


@pytest.fixture
def acceptance(request):
    """record(n, ok, detail): store one criterion outcome for the summary, then assert it."""
    results = request.config.acceptance_results

    def record(n, ok, detail):
        results[n] = (bool(ok), detail)
        assert ok, f"criterion {n}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter, config):
    results = getattr(config, "acceptance_results", {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        ok, detail = results[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
