"""One test per acceptance criterion, each printing a single PASS/FAIL line.

The checks themselves live in :mod:`cosetlab.acceptance` so that
``cosetlab reproduce`` and this suite run the same code at the same tolerances.
"""

import json

import pytest

from cosetlab.acceptance import CRITERIA, DEFAULT_SEED

# wall-clock budgets in seconds, where one is stated for the criterion
BUDGET = {1: 1.0, 2: 60.0, 4: 60.0, 7: 60.0, 15: 120.0, 16: 600.0}


def _summary(details: dict) -> str:
    keep = {k: v for k, v in details.items() if not isinstance(v, (list, dict))}
    text = json.dumps(keep, default=str)
    return text if len(text) <= 220 else text[:217] + "..."


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    result = CRITERIA[number](seed=DEFAULT_SEED)
    budget = BUDGET.get(number)
    in_time = budget is None or result["seconds"] < budget
    ok = result["passed"] and in_time
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {result['title']}  ({result['seconds']:.2f} s)"
    with capsys.disabled():
        print("\n" + line)
        print("    " + _summary(result["details"]))
    assert in_time, f"criterion {number} took {result['seconds']} s, budget {budget} s"
    assert result["passed"], json.dumps(result["details"], default=str)[:2000]
