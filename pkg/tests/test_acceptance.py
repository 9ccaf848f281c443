"""Full verification battery: every numbered criterion at its stated
tolerance, one pass/fail line each (the battery itself prints them)."""

import sys

import pytest

from ellipsax import acceptance

_EXPECTED_IDS = list(range(1, 15))


@pytest.fixture(scope="module")
def suite_results():
    results = acceptance.run_suite(stream=sys.stdout)
    return {r.cid: r for r in results}


def test_all_criteria_ran(suite_results):
    assert sorted(suite_results) == _EXPECTED_IDS


@pytest.mark.parametrize("cid,name", [
    (cid, name) for cid, (name, _fn) in sorted(acceptance.CRITERIA.items())
] + [(14, "suite-audit")], ids=lambda v: str(v))
def test_criterion(suite_results, cid, name):
    res = suite_results[cid]
    assert res.name == name
    assert res.passed, (f"criterion {cid} ({name}): measured {res.measured}, "
                        f"threshold {res.threshold}")


def test_wall_clock_budget(suite_results):
    audit = suite_results[14]
    assert audit.details["wall_clock"] < acceptance.SUITE_BUDGET_SECONDS
    assert audit.details["deterministic"] is True
