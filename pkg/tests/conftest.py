import time
import traceback

import pytest


def pytest_configure(config):
    config._acceptance_lines = []


def pytest_terminal_summary(terminalreporter, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def verdict(request):
    """Run a criterion check ``fn() -> (ok, detail)``, record one PASS/FAIL line, assert ok."""
    def run(number: int, title: str, fn):
        t0 = time.perf_counter()
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failed criterion, reported like the others
            ok, detail = False, f"{type(exc).__name__}: {exc}"
            traceback.print_exc()
        line = (f"{'PASS' if ok else 'FAIL'} {number}: {title} | {detail} "
                f"[{time.perf_counter() - t0:.1f} s]")
        print(line)
        request.config._acceptance_lines.append(line)
        assert ok, line
    return run
