import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from fairhealth.errors import (
    DegenerateGroupError,
    InsufficientGroupsError,
    InvalidInputError,
    MissingTruthsError,
)
from fairhealth.fairness import (
    demographic_parity_diff,
    disparate_impact,
    equalized_odds_diff,
    fairness_summary,
    intersectional_fairness,
)


def random_instance(rng):
    n = int(rng.integers(2, 31))
    k = int(rng.integers(2, 5))
    groups = [f"g{i}" for i in rng.integers(0, k, n)]
    preds = rng.integers(0, 2, n).tolist()
    truths = rng.integers(0, 2, n).tolist()
    return preds, truths, groups


def test_brute_force_agreement_1000_instances():
    rng = np.random.default_rng(7)
    checked_eod = 0
    for _ in range(1000):
        preds, truths, groups = random_instance(rng)
        if len(set(groups)) < 2:
            with pytest.raises(InsufficientGroupsError):
                demographic_parity_diff(preds, groups)
            continue
        assert abs(demographic_parity_diff(preds, groups) - float(oracles.dpd(preds, groups))) <= 1e-12
        assert abs(disparate_impact(preds, groups) - float(oracles.di(preds, groups))) <= 1e-12
        degenerate = any(
            len({t for t, g2 in zip(truths, groups) if g2 == g}) < 2 for g in set(groups)
        )
        if degenerate:
            with pytest.raises(DegenerateGroupError):
                equalized_odds_diff(truths, preds, groups)
        else:
            checked_eod += 1
            assert abs(equalized_odds_diff(truths, preds, groups) - float(oracles.eod(truths, preds, groups))) <= 1e-12
    assert checked_eod > 100


def test_disparate_impact_anchor_case():
    preds = [1] * 23 + [0] * 77 + [1] * 100
    groups = ["a"] * 100 + ["b"] * 100
    assert disparate_impact(preds, groups) == 0.23
    assert demographic_parity_diff(preds, groups) == pytest.approx(0.77, abs=1e-15)


def test_all_zero_predictions_conventions():
    preds = [0] * 6
    groups = ["a", "a", "b", "b", "c", "c"]
    assert disparate_impact(preds, groups) == 1.0
    assert demographic_parity_diff(preds, groups) == 0.0


def test_multigroup_uses_worst_pair():
    preds = [1, 1, 0, 1, 0, 0]
    groups = ["a", "a", "b", "b", "c", "c"]
    assert demographic_parity_diff(preds, groups) == 1.0
    assert disparate_impact(preds, groups) == 0.0


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 1), st.sampled_from("xyz")), min_size=2, max_size=40))
def test_metric_ranges_and_label_invariance(rows):
    preds = [p for p, _ in rows]
    groups = [g for _, g in rows]
    if len(set(groups)) < 2:
        return
    d = demographic_parity_diff(preds, groups)
    r = disparate_impact(preds, groups)
    assert 0.0 <= d <= 1.0 and 0.0 <= r <= 1.0
    # renaming groups changes nothing
    renamed = [{"x": "p", "y": "q", "z": "r"}[g] for g in groups]
    assert demographic_parity_diff(preds, renamed) == d
    assert disparate_impact(preds, renamed) == r
    # row order changes nothing
    order = np.random.default_rng(len(rows)).permutation(len(rows))
    assert demographic_parity_diff([preds[i] for i in order], [groups[i] for i in order]) == pytest.approx(d, abs=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 1), st.sampled_from("ab")), min_size=2, max_size=30))
def test_perfect_parity_when_groups_duplicate(rows):
    # two groups with identical prediction multisets are at parity
    preds = [p for p, _ in rows] * 2
    groups = ["a"] * len(rows) + ["b"] * len(rows)
    assert demographic_parity_diff(preds, groups) == 0.0
    assert disparate_impact(preds, groups) == 1.0


def test_summary_reports_rates_and_sizes():
    preds = [1, 0, 1, 1, 0, 0]
    truths = [1, 0, 1, 0, 1, 0]
    groups = ["f", "f", "f", "m", "m", "m"]
    rep = fairness_summary(preds, groups, truths)
    assert rep.per_group_positive_rates == {"f": pytest.approx(2 / 3), "m": pytest.approx(1 / 3)}
    assert rep.group_sizes == {"f": 3, "m": 3}
    assert rep.eod == pytest.approx(float(oracles.eod(truths, preds, groups)))
    assert fairness_summary(preds, groups).eod is None


def test_intersectional_groups_and_exclusion():
    sex = ["f", "f", "m", "m", "m", "f"]
    band = ["young", "old", "young", "young", "old", "young"]
    preds = [1, 0, 1, 0, 1, 1]
    rep = intersectional_fairness(preds, [sex, band], min_group_size=2)
    assert set(rep.group_sizes) == {("f", "young"), ("m", "young")}
    assert rep.excluded_groups == {("f", "old"): 1, ("m", "old"): 1}
    assert rep.dpd == pytest.approx(0.5)
    single = intersectional_fairness(preds, [sex])
    assert single.as_dict() == fairness_summary(preds, sex).as_dict()


def test_errors():
    with pytest.raises(InvalidInputError):
        demographic_parity_diff([1, 2], ["a", "b"])
    with pytest.raises(InvalidInputError):
        demographic_parity_diff([1, 0, 1], ["a", "b"])
    with pytest.raises(InsufficientGroupsError):
        disparate_impact([1, 0], ["a", "a"])
    with pytest.raises(MissingTruthsError):
        equalized_odds_diff(None, [1, 0], ["a", "b"])
    with pytest.raises(DegenerateGroupError) as exc:
        equalized_odds_diff([1, 1, 0, 1], [1, 0, 0, 1], ["a", "a", "b", "b"])
    assert exc.value.group == "a"
    with pytest.raises(InsufficientGroupsError):
        intersectional_fairness([1, 0, 1], [["a", "b", "b"]], min_group_size=2)


def test_summary_bit_identical_to_individual_calls():
    rng = np.random.default_rng(3)
    preds, truths = rng.integers(0, 2, 60), rng.integers(0, 2, 60)
    groups = rng.choice(["a", "b", "c"], 60).tolist()
    rep = fairness_summary(preds, groups, truths)
    assert rep.dpd == demographic_parity_diff(preds, groups)
    assert rep.di == disparate_impact(preds, groups)
    assert rep.eod == equalized_odds_diff(truths, preds, groups)
