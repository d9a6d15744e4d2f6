import pytest

from harness.verification import DEFAULT_CASES, SUITES, run_suite
from utils.error_handler import ValidationError


@pytest.mark.parametrize("name,seeds", [
    ("lattice", 8),
    ("tjoin", 10),
    ("duality", 6),
    ("lemma1", 4),
    ("obs1", 4),
    ("decomposition", 6),
])
def test_suite_passes(name, seeds):
    result = run_suite(name, seeds=seeds, master_seed=3)
    assert result.passed, result.failures
    assert result.cases == seeds
    assert result.stats == {"cases": seeds, "failures": 0}


def test_every_suite_has_a_default():
    assert set(SUITES) == set(DEFAULT_CASES)


def test_lattice_suite_is_capped():
    assert run_suite("lattice", seeds=100).cases == DEFAULT_CASES["lattice"]


def test_unknown_suite():
    with pytest.raises(ValidationError):
        run_suite("everything")


def test_needs_a_case():
    with pytest.raises(ValidationError):
        run_suite("tjoin", seeds=0)


def test_case_exceptions_become_failures(monkeypatch):
    def broken(case, seed):
        raise ValueError("broken case")

    monkeypatch.setitem(SUITES, "tjoin", broken)
    result = run_suite("tjoin", seeds=2)
    assert not result.passed
    assert len(result.failures) == 2
    assert "broken case" in result.failures[0]
