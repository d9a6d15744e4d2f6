import pytest

from core.events import EventParams
from harness.experiment import TrialSpec, trial_seed
from harness.trials import run_trial

PARAMS = EventParams(radius=2.0, enumeration_cap=1000)


def spec(kind, k=2, n=4, index=0, conditioning="none", method="affine", c=0, params=PARAMS):
    return TrialSpec(kind=kind, k=k, n=n, index=index, seed=trial_seed(7, kind, k, index), params=params,
                     conditioning=conditioning, method=method, c=c)


def test_results_are_deterministic():
    assert run_trial(spec("g")) == run_trial(spec("g"))
    assert run_trial(spec("g", index=0))["seed"] != run_trial(spec("g", index=1))["seed"]


@pytest.mark.parametrize("index", range(4))
def test_dual_trial_unconditioned(index):
    result = run_trial(spec("g", index=index))
    assert result["error"] is None
    assert result["conditioned"] is True
    assert result["events"]["D"] in (True, False)
    assert result["implication_ok"]
    assert result["events"]["BD"] is False or result["events"]["D"] is True


def test_dual_trial_planted():
    result = run_trial(spec("g", conditioning="planted"))
    assert result["error"] is None
    assert result["events"]["dually_isolated"] is True
    assert result["conditioned"] is True


@pytest.mark.parametrize("index", range(4))
def test_dual_trial_rejection_conditions_on_isolation(index):
    result = run_trial(spec("g", index=index, conditioning="rejection"))
    assert result["conditioned"] == bool(result["events"]["dually_isolated"])


@pytest.mark.parametrize("index", range(3))
def test_pinning_trial_planted(index):
    result = run_trial(spec("pinning", k=2, n=3, index=index, conditioning="planted"))
    assert result["error"] is None
    assert result["events"]["regular"] is True
    assert result["events"]["isolated"] is True
    assert result["lemma1"] is True
    assert result["obs1"] == "holds"
    assert result["conditioned"] is True
    if result["events"]["A"]:
        assert result["witness"] is not None


def test_pinning_trial_rejection_method():
    result = run_trial(spec("pinning", k=1, n=2, conditioning="none", method="rejection"))
    assert result["error"] is None
    assert result["events"]["regular"] is True
    assert result["lemma1"] is True


def test_conj2_without_conditioning():
    result = run_trial(spec("conj2", k=2, n=4))
    assert result["conditioned"] is True
    assert result["events"]["regular"] is True


@pytest.mark.parametrize("kind", ["conj2", "conj_b2"])
def test_conj2_rejection_records_reason(kind):
    result = run_trial(spec(kind, k=3, n=4, conditioning="rejection"))
    assert result["error"] is None
    assert result["conditioned"] or result["note"]


@pytest.mark.parametrize("kind", ["conj3", "conj_b3"])
def test_conj3_rejection_records_reason(kind):
    result = run_trial(spec(kind, k=3, n=4, conditioning="rejection"))
    assert result["error"] is None
    assert result["conditioned"] or result["note"]


def test_failures_are_recorded_not_raised():
    result = run_trial(spec("pinning", k=1, n=1))
    assert result["error"] is not None
    assert result["error"]["error_type"] == "ValidationError"
    assert result["conditioned"] is False


@pytest.mark.parametrize("index", range(3))
def test_pinning_trial_records_translated_events_only_when_isolated(index):
    planted = run_trial(spec("pinning", k=2, n=3, index=index, conditioning="planted"))
    assert planted["events"]["D"] == planted["events"]["A"]
    assert planted["events"]["BD"] == planted["events"]["BA"]
    assert planted["implication_ok"]


def test_pinning_trial_leaves_dual_events_unset_off_isolation():
    results = [run_trial(spec("pinning", k=2, n=3, index=index)) for index in range(6)]
    open_pairs = [r for r in results if r["events"]["regular"] and not r["events"]["isolated"]]
    assert open_pairs
    for result in open_pairs:
        assert result["events"]["D"] is None
        assert result["events"]["BD"] is None
