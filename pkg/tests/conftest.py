import sys

import pytest

from phavtomo import _backend


@pytest.fixture(params=sorted(_backend.BACKENDS))
def backend(request, monkeypatch):
    """Run the test once per importable kernel backend."""
    impl = _backend.BACKENDS[request.param]
    monkeypatch.setattr(_backend, "fock_density_matrix", impl.fock_density_matrix)
    monkeypatch.setattr(_backend, "mle_iterate", impl.mle_iterate)
    return request.param


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for line in results:
            terminalreporter.write_line(line)
