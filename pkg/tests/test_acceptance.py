"""Acceptance gate: every numbered criterion at its pinned tolerance.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
detail lines, or `mfprop validate-all` for the same checks via the CLI.
"""

import pytest

from mfprop import acceptance


@pytest.mark.parametrize("number", sorted(acceptance._CRITERIA))
def test_criterion(number):
    result = acceptance._CRITERIA[number]()
    print()
    print(acceptance.format_result(result))
    assert result.passed, acceptance.format_result(result)
