import pytest

from ladder_budget import kernels

ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


@pytest.fixture(params=kernels.BACKENDS if kernels.numba is not None else ("numpy",))
def backend(request):
    previous = kernels.get_backend()
    kernels.set_backend(request.param)
    yield request.param
    kernels.set_backend(previous)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
