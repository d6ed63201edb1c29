"""One test per acceptance criterion, each at its stated tolerance and time budget."""

from __future__ import annotations

import pytest

from ptwell import acceptance

from conftest import ACCEPTANCE_LINES


@pytest.mark.parametrize("check", acceptance.CRITERIA, ids=lambda c: c.__name__)
def test_criterion(check):
    result = check()
    ACCEPTANCE_LINES.append(result.line())
    print(result.line())
    assert result.passed, result.detail
