import time
from contextlib import contextmanager

import pytest

_RESULTS = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_RESULTS] = {}


@pytest.fixture
def criterion(request):
    """Context manager recording one pass/fail line per acceptance criterion."""
    results = request.config.stash[_RESULTS]

    @contextmanager
    def run(number: int, title: str):
        notes: list[str] = []
        t0 = time.perf_counter()
        try:
            yield notes
        except BaseException as exc:
            msg = str(exc).splitlines()[0] if str(exc) else ""
            results[number] = ("FAIL", title, f"{type(exc).__name__}: {msg}"[:160])
            raise
        else:
            notes.append(f"{time.perf_counter() - t0:.1f}s")
            results[number] = ("PASS", title, "; ".join(notes))

    return run


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(_RESULTS, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(results):
        status, title, detail = results[k]
        terminalreporter.write_line(f"[{status}] criterion {k:2d}: {title} ({detail})")
