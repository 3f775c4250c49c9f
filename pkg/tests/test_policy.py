import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hitlpolicy import (
    ClassProfile,
    HumanModel,
    Policy,
    Scenario,
    TimePolicy,
    ValidationError,
    elimination_policy,
    evaluate_policy,
    evaluate_time_policy,
    expected_accuracy,
    expected_cost,
    minimax_accuracy,
    policy_accuracy_se,
    routing_scenario,
    sample_size_heuristic,
    simulate_batch,
    validate_scenario,
)


def test_routing_scenario_is_valid(scenario):
    assert validate_scenario(scenario) is scenario
    assert [c.ml_accuracy for c in scenario.classes] == [0.6, 0.7, 0.8, 0.9]


def test_shares_must_sum_to_one():
    with pytest.raises(ValidationError, match="shares sum to 1.1"):
        Scenario.from_pairs([(0.5, 0.6), (0.6, 0.7)])


def test_needs_a_class():
    with pytest.raises(ValidationError, match="at least one class"):
        Scenario(())


def test_duplicate_labels_rejected():
    with pytest.raises(ValidationError, match="duplicate"):
        Scenario((ClassProfile("a", 0.5, 0.6), ClassProfile("a", 0.5, 0.7)))


@pytest.mark.parametrize("kwargs", [
    dict(share=1.5), dict(ml_accuracy=-0.1), dict(ml_accuracy_se=-1.0), dict(review_cost=-1.0),
])
def test_class_profile_invariants(kwargs):
    base = dict(label="a", share=0.5, ml_accuracy=0.5)
    base.update(kwargs)
    with pytest.raises(ValidationError):
        ClassProfile(**base)


def test_baseline_and_c1_elimination(scenario):
    assert expected_accuracy(scenario, Policy()) == pytest.approx(0.75, abs=1e-12)
    pol = elimination_policy(scenario, {"c1"})
    assert pol.review_probability == {"c1": 1.0}
    assert expected_accuracy(scenario, pol) == pytest.approx(0.85, abs=1e-12)
    assert expected_cost(scenario, pol, 1000) == pytest.approx(250, abs=1e-9)


@pytest.mark.parametrize("label,acc", [("c2", 0.825), ("c3", 0.80), ("c4", 0.775)])
def test_single_class_elimination(scenario, label, acc):
    assert expected_accuracy(scenario, elimination_policy(scenario, {label})) == pytest.approx(acc, abs=1e-12)


@pytest.mark.parametrize("p", [0.0, 0.5, 1.0])
def test_uniform_random_review(scenario, p):
    pol = Policy({k: p for k in scenario.labels})
    assert expected_accuracy(scenario, pol) == pytest.approx(p + (1 - p) * 0.75, abs=1e-12)
    assert expected_cost(scenario, pol, 1000) == pytest.approx(1000 * p, abs=1e-9)


def test_elimination_edge_cases(scenario):
    assert elimination_policy(scenario, set()).review_probability == {}
    full = elimination_policy(scenario, scenario.labels)
    assert expected_accuracy(scenario, full) == pytest.approx(1.0, abs=1e-12)
    assert expected_cost(scenario, full, 1000) == pytest.approx(1000)
    with pytest.raises(ValidationError, match="c9"):
        elimination_policy(scenario, {"c9"})


def test_unknown_label_in_policy(scenario):
    with pytest.raises(ValidationError, match="'x'"):
        expected_accuracy(scenario, Policy({"x": 0.3}))
    with pytest.raises(ValidationError):
        expected_cost(scenario, Policy({"x": 0.3}), 10)


def test_minimax(scenario):
    assert minimax_accuracy(scenario, Policy()) == pytest.approx(0.6)
    assert minimax_accuracy(scenario, elimination_policy(scenario, {"c1"})) == pytest.approx(0.7)
    assert minimax_accuracy(scenario, elimination_policy(scenario, scenario.labels)) == 1.0


def with_se(scenario, se):
    classes = tuple(
        ClassProfile(c.label, c.share, c.ml_accuracy, s, c.review_cost)
        for c, s in zip(scenario.classes, se)
    )
    return Scenario(classes, scenario.human)


def test_policy_se_formula(scenario):
    s = with_se(scenario, [0.02] * 4)
    pol = elimination_policy(s, {"c1"})
    assert policy_accuracy_se(s, pol) == pytest.approx(0.005 * math.sqrt(3), rel=1e-12)
    assert policy_accuracy_se(with_se(scenario, [0.0] * 4), pol) == 0.0


def test_policy_se_matches_perturbation_simulation(scenario):
    # Independent check: perturb the accuracy estimates by their standard errors
    # and measure the spread of the resulting expected accuracy.
    se = np.array([0.02, 0.03, 0.01, 0.025])
    s = with_se(scenario, se)
    pol = Policy({"c1": 1.0, "c3": 0.5})
    rng = np.random.default_rng(11)
    accs = np.array([c.ml_accuracy for c in s.classes]) + rng.normal(size=(20000, 4)) * se
    shares = np.array([c.share for c in s.classes])
    p = np.array([pol.p(k) for k in s.labels])
    values = (shares * (p + (1 - p) * accs)).sum(axis=1)
    assert policy_accuracy_se(s, pol) == pytest.approx(values.std(ddof=1), rel=0.05)


def test_policy_se_requires_all_se(scenario):
    with pytest.raises(ValidationError, match="ml_accuracy_se"):
        policy_accuracy_se(scenario, Policy())


@given(st.floats(0, 10))
def test_policy_se_homogeneous(k):
    s = with_se(routing_scenario(), [0.02, 0.01, 0.03, 0.04])
    pol = Policy({"c2": 0.3})
    assert policy_accuracy_se(with_se(s, [k * c.ml_accuracy_se for c in s.classes]), pol) == \
        pytest.approx(k * policy_accuracy_se(s, pol), rel=1e-9, abs=1e-15)


def test_evaluate_policy_record(scenario):
    m = evaluate_policy(scenario, elimination_policy(scenario, {"c1"}), 1000)
    assert m.expected_accuracy == pytest.approx(0.85)
    assert m.expected_cost == pytest.approx(250)
    assert m.minimax_accuracy == pytest.approx(0.7)
    assert m.accuracy_se is None
    assert m.per_class[0].expected_reviews == pytest.approx(250)
    assert m.per_class[0].effective_accuracy == 1.0


def test_prior_drift_scenario():
    s = routing_scenario((0.7, 0.1, 0.1, 0.1))
    assert expected_accuracy(s, Policy()) == pytest.approx(0.66, abs=1e-12)
    pol = elimination_policy(s, {"c1"})
    assert expected_accuracy(s, pol) == pytest.approx(0.94, abs=1e-12)
    assert expected_cost(s, pol, 1000) == pytest.approx(700, abs=1e-9)


def test_time_policy_plan(time_scenario):
    plan = TimePolicy({k: (1.0, 1.8) for k in ("c1", "c2", "c3")})
    acc, total = evaluate_time_policy(time_scenario, plan, 1000)
    assert acc == pytest.approx(0.9, abs=1e-12)
    assert total == pytest.approx(1350, abs=1e-9)


def test_time_policy_edges(time_scenario, scenario):
    assert evaluate_time_policy(time_scenario, TimePolicy(), 1000) == pytest.approx((0.75, 0.0))
    full = TimePolicy({k: (1.0, 2.0) for k in time_scenario.labels})
    assert evaluate_time_policy(time_scenario, full, 500) == pytest.approx((1.0, 1000.0))
    with pytest.raises(ValidationError, match="time model"):
        evaluate_time_policy(scenario, TimePolicy(), 10)
    with pytest.raises(ValidationError, match="outside"):
        evaluate_time_policy(time_scenario, TimePolicy({"c1": (1.0, 2.5)}), 10)


def test_sample_size_heuristic():
    assert sample_size_heuristic(300, 0.05) == 25932
    assert sample_size_heuristic(1, 0.5) == 2
    raw = lambda d, e: d * math.log2(1 / e) / e
    assert raw(600, 0.05) == pytest.approx(2 * raw(300, 0.05))
    for eps in (0.0, 1.0, -0.1):
        with pytest.raises(ValidationError):
            sample_size_heuristic(10, eps)


# ---- properties on random scenarios -----------------------------------------

@st.composite
def scenarios(draw, max_k=5):
    k = draw(st.integers(1, max_k))
    weights = draw(st.lists(st.floats(0.01, 1), min_size=k, max_size=k))
    total = sum(weights)
    accs = draw(st.lists(st.floats(0, 1), min_size=k, max_size=k))
    costs = draw(st.lists(st.floats(0.1, 5), min_size=k, max_size=k))
    a_h = draw(st.floats(0.5, 1))
    shares = [w / total for w in weights]
    shares[-1] = 1 - sum(shares[:-1])
    classes = tuple(
        ClassProfile(f"c{i}", max(0.0, s), a, review_cost=c)
        for i, (s, a, c) in enumerate(zip(shares, accs, costs))
    )
    return Scenario(classes, HumanModel(a_h))


@st.composite
def scenario_and_policy(draw):
    s = draw(scenarios())
    ps = draw(st.lists(st.floats(0, 1), min_size=len(s.classes), max_size=len(s.classes)))
    return s, Policy(dict(zip(s.labels, ps)))


@given(scenario_and_policy())
def test_accuracy_bounded_by_minimax_and_max(sp):
    s, pol = sp
    eff = [pol.p(c.label) * s.human.accuracy + (1 - pol.p(c.label)) * c.ml_accuracy
           for c in s.classes]
    acc = expected_accuracy(s, pol)
    assert minimax_accuracy(s, pol) - 1e-12 <= acc <= max(eff) + 1e-12


@given(scenario_and_policy(), st.data())
def test_accuracy_affine_and_monotone(sp, data):
    s, pol = sp
    i = data.draw(st.integers(0, len(s.classes) - 1))
    label = s.labels[i]

    def at(p):
        probs = dict(pol.review_probability)
        probs[label] = p
        return expected_accuracy(s, Policy(probs))

    a0, a5, a1 = at(0.0), at(0.5), at(1.0)
    assert a5 == pytest.approx((a0 + a1) / 2, abs=1e-12)
    slope = (a1 - a0)
    expected_slope = s.classes[i].share * (s.human.accuracy - s.classes[i].ml_accuracy)
    assert slope == pytest.approx(expected_slope, abs=1e-12)
    if s.human.accuracy >= max(c.ml_accuracy for c in s.classes):
        assert slope >= -1e-15


@given(scenario_and_policy(), st.integers(1, 10**6))
def test_cost_linear_in_items(sp, n):
    s, pol = sp
    assert expected_cost(s, pol, 2 * n) == pytest.approx(2 * expected_cost(s, pol, n), rel=1e-12)
    assert expected_cost(s, Policy(), n) == 0


@given(scenarios())
def test_zero_and_full_policy_identities(s):
    base = sum(c.share * c.ml_accuracy for c in s.classes)
    assert expected_accuracy(s, Policy()) == pytest.approx(base, abs=1e-12)
    perfect = Scenario(s.classes, HumanModel(1.0))
    assert expected_accuracy(perfect, elimination_policy(perfect, s.labels)) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=10, deadline=None)
@given(scenario_and_policy(), st.integers(0, 2**32 - 1))
def test_closed_form_agrees_with_simulation(sp, seed):
    s, pol = sp
    n = 10**6
    _, summary = simulate_batch(s, pol, n, seed)
    assert abs(summary.accuracy_estimate - expected_accuracy(s, pol)) <= 4 * math.sqrt(0.25 / n)
