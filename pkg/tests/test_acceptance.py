"""Acceptance criteria 1-7, one test each.

Each test prints a single PASS/FAIL line with the measured numbers; run with
``pytest tests/test_acceptance.py -s`` to see them.
"""

from __future__ import annotations

import pytest

from propertime.validation import CHECKS, Tolerances

CRITERIA = [(i + 1, name, fn) for i, (name, fn) in enumerate(CHECKS)]


@pytest.mark.parametrize("number,name,check", CRITERIA, ids=[f"criterion_{n}_{name}" for n, name, _ in CRITERIA])
def test_acceptance_criterion(number, name, check):
    result = check(Tolerances())
    print(f"\ncriterion {number}: {result.line()}")
    assert result.passed, result.line()


if __name__ == "__main__":
    import sys

    failed = 0
    for number, name, check in CRITERIA:
        result = check(Tolerances())
        failed += not result.passed
        print(f"criterion {number}: {result.line()}")
    sys.exit(1 if failed else 0)
