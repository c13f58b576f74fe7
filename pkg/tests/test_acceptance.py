"""Acceptance criteria 1-10 at their stated tolerances.

Each test prints one PASS/FAIL line; the lines are also collected into the
"acceptance criteria" section of the pytest summary.  Run directly with
``python tests/test_acceptance.py`` to print only the lines.
"""

import pytest

from qpgreen import checks

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # pragma: no cover
    ACCEPTANCE_LINES = {}


def _run(n):
    res = checks.CRITERIA[n]()
    line = res.line()
    ACCEPTANCE_LINES[n] = line
    print(line)
    return res


@pytest.mark.parametrize("n", sorted(checks.CRITERIA))
def test_criterion(n):
    res = _run(n)
    assert res.passed, res.line()


if __name__ == "__main__":
    for n in sorted(checks.CRITERIA):
        _run(n)
