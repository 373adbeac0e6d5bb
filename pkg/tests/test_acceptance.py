"""One test per acceptance criterion, with wall-clock limits.

Each result line is printed in the pytest terminal summary; running this
file directly prints the same lines.
"""

from __future__ import annotations

import sys
import time

import pytest
from acceptance import CRITERIA, canonical_outputs

from opsets.logfile import dumps

RESULTS: dict[str, str] = {}


def record(key: str, ok: bool, elapsed: float, limit: float, detail: str = "") -> None:
    title = CRITERIA[key][0] if key in CRITERIA else "determinism of reports and canonical outputs"
    status = "PASS" if ok else "FAIL"
    RESULTS[key] = (
        f"criterion {key:<3} {status}  {title} ({elapsed:.2f}s, limit {limit:.0f}s){' ' + detail if detail else ''}"
    )


def evaluate(key: str) -> tuple[dict, float]:
    _, fn, _ = CRITERIA[key]
    t0 = time.perf_counter()
    report = fn()
    return report, time.perf_counter() - t0


@pytest.mark.parametrize("key", list(CRITERIA))
def test_criterion(key):
    limit = CRITERIA[key][2]
    report, elapsed = evaluate(key)
    ok = report["ok"] and elapsed < limit
    detail = "" if report["ok"] else dumps({k: v for k, v in report.items() if k != "ok"})
    record(key, ok, elapsed, limit, detail)
    assert report["ok"], report
    assert elapsed < limit, f"took {elapsed:.2f}s"


def test_criterion_11_determinism():
    t0 = time.perf_counter()
    first = [dumps(fn(0.05)) for _, fn, _ in CRITERIA.values()] + [canonical_outputs()]
    second = [dumps(fn(0.05)) for _, fn, _ in CRITERIA.values()] + [canonical_outputs()]
    elapsed = time.perf_counter() - t0
    record("11", first == second, elapsed, 120.0)
    assert first == second
    assert elapsed < 120.0


def summary_lines() -> list[str]:
    order = list(CRITERIA) + ["11"]
    return [RESULTS[k] for k in order if k in RESULTS]


if __name__ == "__main__":
    for key in CRITERIA:
        try:
            test_criterion(key)
        except AssertionError:
            pass
    try:
        test_criterion_11_determinism()
    except AssertionError:
        pass
    lines = summary_lines()
    print("\n".join(lines))
    sys.exit(0 if all(" PASS " in line for line in lines) else 1)
