"""Acceptance criteria 1-10 at their stated tolerances, full settings, default grid.

Each test prints one ``[PASS]``/``[FAIL]`` line; the lines are also collected
into an "acceptance criteria" section of the pytest summary.  Run this file
directly (``python3 tests/test_acceptance.py``) to print the table without pytest.
"""
import sys

import pytest

from kp2backlund.acceptance import CHECKS, run_one
from kp2backlund.grid import default_grid

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # run as a script from another directory
    ACCEPTANCE_LINES = []


@pytest.mark.slow
@pytest.mark.parametrize("fn", CHECKS, ids=[f"{i + 1:02d}_{fn.__name__[6:]}" for i, fn in enumerate(CHECKS)])
def test_criterion(fn, grid):
    c = run_one(fn, grid, quick=False)
    line = c.line()
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert c.passed, line


def main() -> int:
    g = default_grid()
    failed = 0
    for fn in CHECKS:
        c = run_one(fn, g, quick=False)
        print(c.line(), flush=True)
        failed += not c.passed
    print(f"{len(CHECKS) - failed}/{len(CHECKS)} criteria passed")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
