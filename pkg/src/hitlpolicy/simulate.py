"""Seeded simulation of routing outcomes under a scenario and review policy.

Each item draws its predicted class from the class shares, is reviewed
with the policy's probability for that class, and is then correct with the
human accuracy (or ``t / T_max`` under a time policy) if reviewed, else
with the class's ML accuracy. A drift schedule can switch shares and
accuracies at given item indices.

All random numbers are drawn up front, three uniforms per item, from one
generator seeded by ``seed``. Record ``i`` therefore depends only on
``(seed, i)`` and the parameters in force at ``i``: drift never alters
earlier records, and equal inputs give bitwise-equal streams.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

import numpy as np

from .policy import (
    Policy,
    Scenario,
    TimePolicy,
    ValidationError,
    check_policy,
)

CSV_HEADER = ("index", "predicted_class", "reviewed", "correct", "time_spent")


@dataclass(frozen=True)
class OutcomeRecord:
    index: int
    predicted_class: str
    reviewed: bool
    correct: bool
    time_spent: float = 0.0


@dataclass(frozen=True, eq=False)
class OutcomeStream:
    """Columnar sequence of outcome records.

    ``predicted`` holds indices into ``labels``.
    """

    labels: tuple[str, ...]
    predicted: np.ndarray
    reviewed: np.ndarray
    correct: np.ndarray
    time_spent: np.ndarray

    def __len__(self) -> int:
        return int(self.predicted.size)

    def __iter__(self) -> Iterator[OutcomeRecord]:
        for i in range(len(self)):
            yield self[i]

    def __getitem__(self, i: int) -> OutcomeRecord:
        return OutcomeRecord(
            i, self.labels[self.predicted[i]], bool(self.reviewed[i]),
            bool(self.correct[i]), float(self.time_spent[i]))

    def __eq__(self, other) -> bool:
        if not isinstance(other, OutcomeStream):
            return NotImplemented
        return (self.labels == other.labels
                and np.array_equal(self.predicted, other.predicted)
                and np.array_equal(self.reviewed, other.reviewed)
                and np.array_equal(self.correct, other.correct)
                and np.array_equal(self.time_spent, other.time_spent))

    @classmethod
    def from_records(cls, records: Sequence[OutcomeRecord],
                     labels: Sequence[str] | None = None) -> OutcomeStream:
        labels = list(labels or [])
        for r in records:
            if r.predicted_class not in labels:
                labels.append(r.predicted_class)
        pos = {k: i for i, k in enumerate(labels)}
        return cls(
            tuple(labels),
            np.array([pos[r.predicted_class] for r in records], dtype=np.int64),
            np.array([r.reviewed for r in records], dtype=bool),
            np.array([r.correct for r in records], dtype=bool),
            np.array([r.time_spent for r in records], dtype=float),
        )

    def slice(self, start: int, stop: int | None = None) -> OutcomeStream:
        s = np.s_[start:stop]
        return OutcomeStream(self.labels, self.predicted[s], self.reviewed[s],
                             self.correct[s], self.time_spent[s])

    def class_counts(self) -> dict[str, int]:
        counts = np.bincount(self.predicted, minlength=len(self.labels))
        return {k: int(c) for k, c in zip(self.labels, counts)}

    def unreviewed_accuracy_counts(self) -> dict[str, tuple[int, int]]:
        """``label -> (correct, total)`` over items the ML system decided alone."""
        mask = ~self.reviewed
        k = len(self.labels)
        total = np.bincount(self.predicted[mask], minlength=k)
        good = np.bincount(self.predicted[mask & self.correct], minlength=k)
        return {lab: (int(g), int(t)) for lab, g, t in zip(self.labels, good, total)}

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(CSV_HEADER) + "\n")
        labels = self.labels
        rev = self.reviewed.astype(np.int8).tolist()
        cor = self.correct.astype(np.int8).tolist()
        times = self.time_spent.tolist()
        pred = self.predicted.tolist()
        buf.writelines(
            f"{i},{labels[c]},{r},{k},{t!r}\n"
            for i, (c, r, k, t) in enumerate(zip(pred, rev, cor, times))
        )
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())

    @classmethod
    def read_csv(cls, path, labels: Sequence[str] | None = None) -> OutcomeStream:
        """Parse an outcome CSV. Label order is ``labels`` then first appearance."""
        with open(path, newline="") as fh:
            return cls.parse_csv(fh.read(), labels, source=str(path))

    @classmethod
    def parse_csv(cls, text: str, labels: Sequence[str] | None = None,
                  source: str = "<csv>") -> OutcomeStream:
        rows = csv.reader(io.StringIO(text))
        header = next(rows, None)
        if header is None or tuple(header) != CSV_HEADER:
            raise ValueError(f"{source}: expected header {','.join(CSV_HEADER)}")
        order = list(labels or [])
        pos = {k: i for i, k in enumerate(order)}
        pred, rev, cor, times = [], [], [], []
        for lineno, row in enumerate(rows, 2):
            if not row:
                continue
            try:
                idx, label, r, c, t = row
                if int(idx) != len(pred) or r not in ("0", "1") or c not in ("0", "1"):
                    raise ValueError
                t = float(t)
            except ValueError:
                raise ValueError(f"{source}:{lineno}: malformed record {row!r}") from None
            if label not in pos:
                pos[label] = len(order)
                order.append(label)
            pred.append(pos[label])
            rev.append(r == "1")
            cor.append(c == "1")
            times.append(t)
        if not pred:
            raise ValueError(f"{source}: stream has no records")
        return cls(tuple(order), np.array(pred, dtype=np.int64), np.array(rev, dtype=bool),
                   np.array(cor, dtype=bool), np.array(times, dtype=float))


@dataclass(frozen=True)
class DriftChange:
    at_index: int
    new_shares: Mapping[str, float] | None = None
    new_accuracies: Mapping[str, float] | None = None


@dataclass(frozen=True)
class ClassCounts:
    predicted: int
    reviewed: int
    correct: int


@dataclass(frozen=True)
class SimSummary:
    n: int
    accuracy_estimate: float
    accuracy_se: float
    total_cost: float
    total_time: float
    per_class_counts: dict[str, ClassCounts]


def _check_schedule(scenario: Scenario, drift: Sequence[DriftChange], n_items: int) -> None:
    labels = set(scenario.labels)
    last = -1
    for ch in drift:
        if ch.at_index <= last:
            raise ValidationError("drift indices must be strictly increasing")
        if not 0 <= ch.at_index < n_items:
            raise ValidationError(f"drift index {ch.at_index} outside [0, {n_items})")
        last = ch.at_index
        for mapping in (ch.new_shares or {}), (ch.new_accuracies or {}):
            for k, v in mapping.items():
                if k not in labels:
                    raise ValidationError(f"drift override references unknown label {k!r}")
                if not 0 <= v <= 1:
                    raise ValidationError(f"drift value for {k!r} must be in [0, 1]")
        if ch.new_shares is not None and abs(math.fsum(ch.new_shares.values()) - 1) > 1e-9:
            raise ValidationError("drift shares must sum to 1")


def simulate_batch(
    scenario: Scenario,
    policy: Policy | TimePolicy,
    n_items: int,
    seed: int,
    drift: Sequence[DriftChange] | None = None,
) -> tuple[OutcomeStream, SimSummary]:
    """Simulate ``n_items`` routing decisions.

    Returns:
        The outcome stream and its summary statistics.
    """
    if int(n_items) != n_items or n_items < 1:
        raise ValidationError(f"n_items must be a positive integer, got {n_items}")
    check_policy(scenario, policy)
    drift = list(drift or [])
    _check_schedule(scenario, drift, n_items)

    labels = scenario.labels
    k = len(labels)
    shares = np.array([c.share for c in scenario.classes])
    accs = np.array([c.ml_accuracy for c in scenario.classes])
    costs = np.array([c.review_cost for c in scenario.classes])

    if isinstance(policy, TimePolicy):
        tm = scenario.human.time_model
        if tm is None:
            raise ValidationError("time policy needs a scenario time model")
        review_p = np.array([policy.get(lab)[0] for lab in labels])
        review_t = np.array([policy.get(lab)[1] for lab in labels])
        human_acc = np.array([tm.accuracy(t) for t in review_t])
    else:
        review_p = np.array([policy.p(lab) for lab in labels])
        review_t = np.zeros(k)
        human_acc = np.full(k, scenario.human.accuracy)

    rng = np.random.default_rng(seed)
    u_class = rng.random(n_items)
    u_review = rng.random(n_items)
    u_correct = rng.random(n_items)

    predicted = np.empty(n_items, dtype=np.int64)
    ml_acc = np.empty(n_items)
    bounds = [0] + [ch.at_index for ch in drift] + [n_items]
    for seg, (start, stop) in enumerate(zip(bounds[:-1], bounds[1:])):
        if seg > 0:
            ch = drift[seg - 1]
            if ch.new_shares is not None:
                shares = np.array([ch.new_shares.get(lab, 0.0) for lab in labels])
            if ch.new_accuracies is not None:
                accs = accs.copy()
                for lab, v in ch.new_accuracies.items():
                    accs[labels.index(lab)] = v
        cum = np.cumsum(shares)
        cls_idx = np.searchsorted(cum, u_class[start:stop], side="right")
        predicted[start:stop] = np.minimum(cls_idx, k - 1)
        ml_acc[start:stop] = accs[predicted[start:stop]]

    reviewed = u_review < review_p[predicted]
    p_correct = np.where(reviewed, human_acc[predicted], ml_acc)
    correct = u_correct < p_correct
    time_spent = np.where(reviewed, review_t[predicted], 0.0)
    stream = OutcomeStream(labels, predicted, reviewed, correct, time_spent)
    return stream, summarize(stream, dict(zip(labels, costs)))


def summarize(stream: OutcomeStream, review_costs: Mapping[str, float] | None = None) -> SimSummary:
    k = len(stream.labels)
    pred = np.bincount(stream.predicted, minlength=k)
    rev = np.bincount(stream.predicted[stream.reviewed], minlength=k)
    cor = np.bincount(stream.predicted[stream.correct], minlength=k)
    costs = np.array([(review_costs or {}).get(lab, 1.0) for lab in stream.labels])
    est, se = mc_accuracy_estimate(stream)
    return SimSummary(
        n=len(stream),
        accuracy_estimate=est,
        accuracy_se=se,
        total_cost=float(np.dot(rev, costs)),
        total_time=float(stream.time_spent.sum()),
        per_class_counts={
            lab: ClassCounts(int(p), int(r), int(c))
            for lab, p, r, c in zip(stream.labels, pred, rev, cor)
        },
    )


def mc_accuracy_estimate(stream: OutcomeStream) -> tuple[float, float]:
    """Observed accuracy and its binomial standard error ``sqrt(p(1-p)/n)``."""
    n = len(stream)
    if n == 0:
        raise ValueError("empty stream")
    p = int(stream.correct.sum()) / n
    return p, math.sqrt(p * (1 - p) / n)
