import numpy as np
import pytest

from sgsov import suites
from sgsov.errors import ConsistencyError, DegeneracyError
from sgsov.model import sample_params


def test_check_semantics():
    assert suites.Check("s", "n", 1e-12, 1e-10).passed
    assert not suites.Check("s", "n", 1e-9, 1e-10).passed
    assert suites.Check("s", "n", 1.0, 1e-4, "above").passed
    assert not suites.Check("s", "n", np.inf, 1e-4, "above").passed
    assert not suites.Check("s", "n", np.nan, 1.0).passed


def test_guard_turns_errors_into_failures():
    def boom():
        raise ConsistencyError("bad")
    c = suites._guard("s", "n", boom, 1.0)
    assert not c.passed and "ConsistencyError" in c.note


def test_guard_propagates_degeneracy():
    def degenerate():
        raise DegeneracyError("resample")
    with pytest.raises(DegeneracyError):
        suites._guard("s", "n", degenerate, 1.0)


def test_resolve():
    assert suites.resolve("all") == list(suites.ORDER)
    assert suites.resolve(["tau2", "algebra"]) == ["algebra", "tau2"]
    with pytest.raises(ValueError):
        suites.resolve(["nope"])


@pytest.mark.parametrize("l, N", [(1, 1), (1, 3), (2, 2)])
def test_non_baxter_suites_pass(l, N):
    checks, _ = suites.run(sample_params(l, N, 7), ["algebra", "averages", "sov", "spectrum", "tau2"])
    bad = [(c.suite, c.name, c.value) for c in checks if not c.passed]
    assert not bad


def test_untwisted_run_skips_baxter(p3n2_untwisted):
    checks, ctx = suites.run(p3n2_untwisted)
    assert all(c.passed for c in checks)
    assert not any(c.suite == "baxter" for c in checks)
    assert "not applicable" in ctx.extras["baxter"]
