"""Domain model and closed-form evaluation of human-review policies.

Every class is indexed by the class the ML system *predicted*, not by the
true label. ``share`` is the probability the system emits that prediction
and ``ml_accuracy`` is P(correct | predicted class). Conditioning on the
prediction is what makes the formulas below exact without a confusion
matrix: a reviewed item is correct with the human accuracy, an un-reviewed
one with the class's ML accuracy.

Typical usage:

    scenario = Scenario.from_pairs([(0.25, 0.6), (0.25, 0.7), (0.25, 0.8), (0.25, 0.9)])
    policy = elimination_policy(scenario, {"c1"})
    expected_accuracy(scenario, policy)     # 0.85
    expected_cost(scenario, policy, 1000)   # 250.0
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

PROB_TOL = 1e-9


class ValidationError(ValueError):
    """Raised when an input violates a domain invariant."""


def _check_prob(name: str, value: float) -> None:
    if not (-PROB_TOL <= value <= 1 + PROB_TOL) or math.isnan(value):
        raise ValidationError(f"{name} must be in [0, 1], got {value}")


@dataclass(frozen=True)
class ClassProfile:
    """One predicted class: how often it is emitted and how often it is right."""

    label: str
    share: float
    ml_accuracy: float
    ml_accuracy_se: float | None = None
    review_cost: float = 1.0

    def __post_init__(self):
        _check_prob(f"share of {self.label!r}", self.share)
        _check_prob(f"ml_accuracy of {self.label!r}", self.ml_accuracy)
        if self.ml_accuracy_se is not None and not self.ml_accuracy_se >= 0:
            raise ValidationError(f"ml_accuracy_se of {self.label!r} must be >= 0")
        if not self.review_cost >= 0:
            raise ValidationError(f"review_cost of {self.label!r} must be >= 0")


@dataclass(frozen=True)
class TimeModel:
    """Human accuracy grows linearly with review time: t / max_time, t <= max_time."""

    max_time: float

    def __post_init__(self):
        if not self.max_time > 0:
            raise ValidationError(f"max_time must be > 0, got {self.max_time}")

    def accuracy(self, t: float) -> float:
        if t < 0 or t > self.max_time * (1 + PROB_TOL):
            raise ValidationError(f"review time {t} outside [0, {self.max_time}]")
        return min(1.0, t / self.max_time)


@dataclass(frozen=True)
class HumanModel:
    accuracy: float = 1.0
    time_model: TimeModel | None = None

    def __post_init__(self):
        _check_prob("human accuracy", self.accuracy)


@dataclass(frozen=True)
class Scenario:
    classes: tuple[ClassProfile, ...]
    human: HumanModel = field(default_factory=HumanModel)

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(self.classes))
        validate_scenario(self)

    @classmethod
    def from_pairs(
        cls,
        pairs: Iterable[tuple[float, float]],
        human: HumanModel | None = None,
        prefix: str = "c",
    ) -> Scenario:
        """Build a scenario from ``(share, ml_accuracy)`` pairs labelled c1, c2, ..."""
        classes = [
            ClassProfile(f"{prefix}{i}", share, acc)
            for i, (share, acc) in enumerate(pairs, start=1)
        ]
        return cls(tuple(classes), human or HumanModel())

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(c.label for c in self.classes)

    def profile(self, label: str) -> ClassProfile:
        for c in self.classes:
            if c.label == label:
                return c
        raise ValidationError(f"unknown class label {label!r}")

    def with_shares(self, shares: Mapping[str, float]) -> Scenario:
        """Copy of the scenario with new class shares (accuracies unchanged)."""
        for label in shares:
            self.profile(label)
        classes = tuple(
            ClassProfile(c.label, shares.get(c.label, 0.0), c.ml_accuracy,
                         c.ml_accuracy_se, c.review_cost)
            for c in self.classes
        )
        return Scenario(classes, self.human)


def validate_scenario(scenario: Scenario) -> Scenario:
    """Check the scenario invariants and return it unchanged.

    Raises:
        ValidationError: naming the first violated invariant.
    """
    classes = scenario.classes
    if len(classes) == 0:
        raise ValidationError("scenario needs at least one class")
    seen = set()
    for c in classes:
        if c.label in seen:
            raise ValidationError(f"duplicate class label {c.label!r}")
        seen.add(c.label)
    total = math.fsum(c.share for c in classes)
    if abs(total - 1.0) > PROB_TOL:
        raise ValidationError(f"shares sum to {total:.12g}, expected 1")
    return scenario


@dataclass(frozen=True)
class Policy:
    """Per-class review probability; labels not listed are never reviewed."""

    review_probability: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "review_probability", dict(self.review_probability))
        for label, p in self.review_probability.items():
            _check_prob(f"review probability of {label!r}", p)

    def p(self, label: str) -> float:
        return self.review_probability.get(label, 0.0)


@dataclass(frozen=True)
class TimePolicy:
    """Per-class (review fraction, review time)."""

    allocation: Mapping[str, tuple[float, float]] = field(default_factory=dict)

    def __post_init__(self):
        alloc = {k: (float(q), float(t)) for k, (q, t) in dict(self.allocation).items()}
        object.__setattr__(self, "allocation", alloc)
        for label, (q, t) in alloc.items():
            _check_prob(f"review fraction of {label!r}", q)
            if t < 0:
                raise ValidationError(f"review time of {label!r} must be >= 0")

    def get(self, label: str) -> tuple[float, float]:
        return self.allocation.get(label, (0.0, 0.0))


@dataclass(frozen=True)
class Budget:
    """``total_cost`` cost units per batch of ``per_items`` items."""

    total_cost: float
    per_items: int = 1000

    def __post_init__(self):
        if not self.total_cost >= 0:
            raise ValidationError(f"budget must be >= 0, got {self.total_cost}")
        if int(self.per_items) != self.per_items or self.per_items < 1:
            raise ValidationError(f"per_items must be a positive integer, got {self.per_items}")


@dataclass(frozen=True)
class ClassMetrics:
    label: str
    effective_accuracy: float
    expected_reviews: float


@dataclass(frozen=True)
class PolicyMetrics:
    expected_accuracy: float
    expected_cost: float
    minimax_accuracy: float
    accuracy_se: float | None
    per_class: tuple[ClassMetrics, ...]
    n_items: int = 1000


def check_policy(scenario: Scenario, policy: Policy | TimePolicy) -> None:
    """Raise ValidationError if the policy names a label the scenario lacks."""
    labels = set(scenario.labels)
    keys = policy.review_probability if isinstance(policy, Policy) else policy.allocation
    for label in keys:
        if label not in labels:
            raise ValidationError(f"unknown class label {label!r} in policy")


def _effective(scenario: Scenario, policy: Policy) -> list[float]:
    check_policy(scenario, policy)
    a_h = scenario.human.accuracy
    return [
        policy.p(c.label) * a_h + (1 - policy.p(c.label)) * c.ml_accuracy
        for c in scenario.classes
    ]


def effective_accuracies(scenario: Scenario, policy: Policy) -> dict[str, float]:
    """P(correct | predicted class) after applying the policy."""
    return dict(zip(scenario.labels, _effective(scenario, policy)))


def expected_accuracy(scenario: Scenario, policy: Policy) -> float:
    """Expected accuracy of the joint ML + human process.

    ``sum_i share_i * (p_i * a_h + (1 - p_i) * acc_i)``; affine in each p_i.
    """
    eff = _effective(scenario, policy)
    return math.fsum(c.share * e for c, e in zip(scenario.classes, eff))


def expected_cost(scenario: Scenario, policy: Policy, n_items: int) -> float:
    """Expected review cost for a batch of ``n_items`` items."""
    if n_items < 1:
        raise ValidationError(f"n_items must be >= 1, got {n_items}")
    check_policy(scenario, policy)
    return n_items * math.fsum(
        c.share * policy.p(c.label) * c.review_cost for c in scenario.classes
    )


def elimination_policy(scenario: Scenario, labels: Iterable[str]) -> Policy:
    """Review every item predicted as one of ``labels``; nothing else."""
    labels = set(labels)
    for label in labels:
        scenario.profile(label)
    return Policy({c.label: 1.0 for c in scenario.classes if c.label in labels})


def uniform_policy(scenario: Scenario, p: float) -> Policy:
    return Policy({label: p for label in scenario.labels})


def minimax_accuracy(scenario: Scenario, policy: Policy) -> float:
    """Worst-case expected accuracy over all class-share distributions.

    The objective is linear in the shares, so the worst case sits on a vertex
    of the simplex: the smallest per-class effective accuracy.
    """
    return min(_effective(scenario, policy))


def policy_accuracy_se(scenario: Scenario, policy: Policy) -> float:
    """Delta-method standard error of ``expected_accuracy``.

    Treats the ML accuracy estimates as independent with known standard
    errors and the shares as fixed:
    ``sqrt(sum_i (share_i * (1 - p_i))**2 * se_i**2)``.
    """
    check_policy(scenario, policy)
    terms = []
    for c in scenario.classes:
        if c.ml_accuracy_se is None:
            raise ValidationError(f"class {c.label!r} has no ml_accuracy_se")
        terms.append((c.share * (1 - policy.p(c.label)) * c.ml_accuracy_se) ** 2)
    return math.sqrt(math.fsum(terms))


def evaluate_policy(scenario: Scenario, policy: Policy, n_items: int = 1000) -> PolicyMetrics:
    """All closed-form metrics of a review policy in one record."""
    eff = _effective(scenario, policy)
    se = None
    if all(c.ml_accuracy_se is not None for c in scenario.classes):
        se = policy_accuracy_se(scenario, policy)
    per_class = tuple(
        ClassMetrics(c.label, e, n_items * c.share * policy.p(c.label))
        for c, e in zip(scenario.classes, eff)
    )
    return PolicyMetrics(
        expected_accuracy=expected_accuracy(scenario, policy),
        expected_cost=expected_cost(scenario, policy, n_items),
        minimax_accuracy=min(eff),
        accuracy_se=se,
        per_class=per_class,
        n_items=n_items,
    )


def evaluate_time_policy(
    scenario: Scenario, tp: TimePolicy, n_items: int
) -> tuple[float, float]:
    """Accuracy and total review time of a time-allocation policy.

    A fraction q_i of class-i items is reviewed for t_i time units each, and a
    review of length t is correct with probability t / max_time.

    Returns:
        ``(accuracy, total_time)`` where total_time is for ``n_items`` items.
    """
    tm = scenario.human.time_model
    if tm is None:
        raise ValidationError("scenario has no human time model")
    if n_items < 1:
        raise ValidationError(f"n_items must be >= 1, got {n_items}")
    check_policy(scenario, tp)
    acc_terms, time_terms = [], []
    for c in scenario.classes:
        q, t = tp.get(c.label)
        acc_terms.append(c.share * (q * tm.accuracy(t) + (1 - q) * c.ml_accuracy))
        time_terms.append(c.share * q * t)
    return math.fsum(acc_terms), n_items * math.fsum(time_terms)


def sample_size_heuristic(model_params: int, error_rate: float) -> int:
    """Rule-of-thumb training-set size ``ceil(d * log2(1/eps) / eps)``."""
    if not 0 < error_rate < 1:
        raise ValidationError(f"error rate must be in (0, 1), got {error_rate}")
    if model_params < 1:
        raise ValidationError(f"model_params must be >= 1, got {model_params}")
    return math.ceil(model_params * math.log2(1 / error_rate) / error_rate)


def routing_scenario(shares: Sequence[float] = (0.25, 0.25, 0.25, 0.25),
                   human: HumanModel | None = None) -> Scenario:
    """The four-component ticket-routing scenario (accuracies 0.6/0.7/0.8/0.9)."""
    return Scenario.from_pairs(zip(shares, (0.6, 0.7, 0.8, 0.9)), human)
