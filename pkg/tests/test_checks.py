import pytest

from gmmax.checks import SUITES, run_suite


@pytest.mark.parametrize("suite", sorted(SUITES))
def test_suite_passes(suite):
    out = run_suite(suite)
    assert out["failed"] == 0, out["failures"]
    assert out["passed"] == out["total"] > 0


def test_unknown_suite_rejected():
    with pytest.raises(ValueError):
        run_suite("nope")
