import pytest

from ddcoherence.config import parse_config


@pytest.fixture(scope="session")
def calibrated_model():
    """Noise model from the checked-in calibration file."""
    return parse_config("").noise.build()


ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def record(request):
    """Store one acceptance verdict; the terminal summary lists them all."""
    results = request.config.stash.setdefault(ACCEPTANCE, {})

    def _record(number: int, ok: bool, detail: str) -> bool:
        results[number] = (bool(ok), detail)
        print(f"criterion {number}: {'PASS' if ok else 'FAIL'} {detail}")
        return bool(ok)

    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(ACCEPTANCE, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        ok, detail = results[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
