import contextlib
import time

import pytest

_CRITERIA: dict[int, str] = {}


class Criterion:
    """Collects named checks for one acceptance criterion."""

    def __init__(self, number: int, title: str):
        self.number, self.title = number, title
        self.failures: list[str] = []
        self.details: list[str] = []
        self.start = time.perf_counter()

    def check(self, ok: bool, detail: str) -> bool:
        (self.details if ok else self.failures).append(detail)
        return ok

    @property
    def elapsed(self) -> float:
        return time.perf_counter() - self.start


@pytest.fixture
def criterion():
    """Context manager factory that records a PASS/FAIL line and asserts at exit."""

    @contextlib.contextmanager
    def run(number: int, title: str):
        c = Criterion(number, title)
        try:
            yield c
        except Exception as exc:
            c.failures.append(f"raised {type(exc).__name__}: {exc}")
            raise
        finally:
            status = "FAIL" if c.failures else "PASS"
            note = "; ".join(c.failures) if c.failures else f"{len(c.details)} checks"
            line = f"criterion {number:2d} {status}  {title} ({c.elapsed:.1f} s): {note}"
            _CRITERIA[number] = line
            print(line)
        assert not c.failures, "; ".join(c.failures)

    return run


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        terminalreporter.write_line(_CRITERIA[n])
