"""Shared fixtures plus the acceptance verdict summary.

Acceptance tests register one line per criterion through the
``acceptance`` decorator; the terminal-summary hook prints them in a
dedicated section after the normal pytest output, so the pass/fail
verdict per criterion is visible without -s.
"""

import functools

import numpy as np

from wardwatt.series import HOUR, TimeSeries

ACCEPTANCE_LINES: list[str] = []


def acceptance(number: int, label: str):
    """Record `criterion NN PASS/FAIL label` for the summary section."""

    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                detail = fn(*args, **kwargs)
            except BaseException as exc:
                note = " ".join(str(exc).split()) or type(exc).__name__
                ACCEPTANCE_LINES.append(
                    f"criterion {number:02d} FAIL {label}: {note}"
                )
                raise
            suffix = f" ({detail})" if detail else ""
            ACCEPTANCE_LINES.append(f"criterion {number:02d} PASS {label}{suffix}")

        return wrapper

    return deco


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def hourly(values, start="2024-01-01T00:00") -> TimeSeries:
    """Series on the hourly grid starting at ``start``."""
    vals = np.asarray(values, dtype=np.float64)
    t0 = np.datetime64(start, "s")
    return TimeSeries(t0 + np.arange(len(vals)) * HOUR, vals)
