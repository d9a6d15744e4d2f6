import math

import pytest

from harness.statistics import (conjecture_bound, fit_conjecture_curve, interval_width, summarize_counts,
                                wilson_interval)


def test_wilson_half():
    lo, hi = wilson_interval(50, 100)
    assert lo == pytest.approx(0.40383, abs=1e-4)
    assert hi == pytest.approx(0.59617, abs=1e-4)


def test_wilson_extremes():
    lo, hi = wilson_interval(0, 10)
    assert lo == pytest.approx(0.0, abs=1e-12)
    assert hi == pytest.approx(0.2775, abs=1e-3)
    lo, hi = wilson_interval(10, 10)
    assert hi == pytest.approx(1.0, abs=1e-12)
    assert lo == pytest.approx(0.7225, abs=1e-3)


@pytest.mark.parametrize("count,trials", [(0, 1), (1, 3), (7, 9), (123, 1000), (999, 1000)])
def test_wilson_contains_estimate(count, trials):
    lo, hi = wilson_interval(count, trials)
    assert 0.0 <= lo <= count / trials <= hi <= 1.0


def test_wilson_without_trials():
    assert wilson_interval(0, 0) == (0.0, 1.0)
    with pytest.raises(ValueError):
        wilson_interval(5, 4)


def test_wilson_width_shrinks_with_root_trials():
    small = interval_width(50, 100)
    large = interval_width(5000, 10000)
    assert 9.5 <= small / large <= 10.5


def test_interval_narrows_with_trials():
    assert interval_width(500, 1000) < interval_width(50, 100)


def test_conjecture_bound():
    assert conjecture_bound(3, 0, 0.0) == pytest.approx(1 - 1 / (3 * math.log(3)))
    assert conjecture_bound(100, 0, 0.5) > conjecture_bound(10, 0, 0.5)
    with pytest.raises(ValueError):
        conjecture_bound(2, 1, 0.1)


def test_fit_recovers_curve():
    ks = [3, 4, 5, 6, 7, 8]
    p_hats = [conjecture_bound(k, 0, 0.5) for k in ks]
    fit = fit_conjecture_curve(ks, p_hats)
    assert fit is not None
    assert fit.c == 0
    assert fit.epsilon == pytest.approx(0.5, abs=1e-3)
    assert fit.sse < 1e-8
    assert fit.points == len(ks)
    assert set(fit.to_dict()) == {"c", "epsilon", "sse", "points"}


def test_fit_needs_two_usable_points():
    assert fit_conjecture_curve([3, 4], [0.5, None]) is None
    assert fit_conjecture_curve([3, 4, 5], [0.0, 1.0, 0.7]) is None
    assert fit_conjecture_curve([3, 4], [0.4, 0.5], c_grid=[5]) is None


def test_summarize_counts():
    rows = summarize_counts({"D": 3, "BD": 1}, 10)
    assert [row["event"] for row in rows] == ["BD", "D"]
    assert rows[1]["p_hat"] == pytest.approx(0.3)
    assert summarize_counts({"D": 0}, 0)[0]["p_hat"] == 0.0
