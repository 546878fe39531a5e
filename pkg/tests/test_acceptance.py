"""Exit criteria 1-12 at their stated tolerances, one PASS/FAIL line each."""
import pytest

from matedcrt.acceptance import RUN_ORDER, Context, run_one

pytestmark = [pytest.mark.acceptance, pytest.mark.slow]


@pytest.fixture(scope="module")
def ctx():
    return Context()


@pytest.mark.parametrize("number", RUN_ORDER, ids=[f"criterion_{k:02d}" for k in RUN_ORDER])
def test_criterion(number, ctx, capsys):
    res = run_one(number, ctx)
    with capsys.disabled():
        print("\n" + res.line())
    assert res.passed, res.line()
