"""Budget-constrained review policy optimization.

The expected accuracy is linear in the review probabilities and the budget
is a single linear constraint over box-bounded variables, so the problem is
a continuous (fractional) knapsack: fill classes in order of accuracy gained
per unit of cost, the last one possibly fractionally. That greedy fill is
globally optimal; ``brute_force_policy_search`` and ``brute_force_time_search``
enumerate grids independently to check it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .policy import (
    Budget,
    Policy,
    Scenario,
    TimePolicy,
    ValidationError,
    evaluate_time_policy,
    expected_accuracy,
    expected_cost,
)

SNAP = 1e-12
MAX_GRID_POINTS = 10**8


class InfeasibleError(ValidationError):
    """The requested accuracy cannot be reached by any policy."""


@dataclass(frozen=True)
class OptimizationResult:
    policy: Policy | TimePolicy
    achieved_accuracy: float
    spent: float
    certificate: tuple[tuple[str, float], ...] = ()
    note: str | None = None
    evaluated_points: int | None = None
    extra: dict = field(default_factory=dict)

    def fractional_labels(self) -> list[str]:
        if isinstance(self.policy, Policy):
            values = self.policy.review_probability.items()
        else:
            values = ((k, q) for k, (q, _) in self.policy.allocation.items())
        return [k for k, v in values if SNAP < v < 1 - SNAP]


def _snap(x: float) -> float:
    if x < SNAP:
        return 0.0
    if x > 1 - SNAP:
        return 1.0
    return x


def _rate(gain: float, cost: float) -> float:
    if cost > 0:
        return gain / cost
    if gain > 0:
        return math.inf
    return 0.0 if gain == 0 else -math.inf


def review_certificate(scenario: Scenario) -> list[tuple[str, float]]:
    """Classes with their marginal rate ``(a_h - acc_i) / review_cost_i``.

    Sorted by nonincreasing rate; ties keep scenario order (stable sort).
    """
    a_h = scenario.human.accuracy
    rated = [(c.label, _rate(a_h - c.ml_accuracy, c.review_cost)) for c in scenario.classes]
    return sorted(rated, key=lambda item: -item[1])


def optimize_review_budget(scenario: Scenario, budget: Budget) -> OptimizationResult:
    """Maximize expected accuracy subject to the review budget.

    Classes whose human accuracy does not exceed their ML accuracy never get
    budget. The returned policy has at most one fractional coordinate.
    """
    a_h = scenario.human.accuracy
    cert = review_certificate(scenario)
    remaining = budget.total_cost / budget.per_items  # cost per item
    probs: dict[str, float] = {}
    for label, rate in cert:
        c = scenario.profile(label)
        if a_h - c.ml_accuracy <= 0:
            continue
        need = c.share * c.review_cost
        if need <= remaining + SNAP:
            probs[label] = 1.0
            remaining = max(0.0, remaining - need)
        else:
            probs[label] = _snap(remaining / need)
            remaining = 0.0
        if remaining <= 0:
            break
    policy = Policy({k: v for k, v in probs.items() if v > 0})
    return OptimizationResult(
        policy=policy,
        achieved_accuracy=expected_accuracy(scenario, policy),
        spent=expected_cost(scenario, policy, budget.per_items),
        certificate=tuple(cert),
    )


def target_accuracy_min_cost(
    scenario: Scenario, target: float, per_items: int = 1000
) -> OptimizationResult:
    """Cheapest policy whose expected accuracy reaches ``target``.

    Raises:
        InfeasibleError: if ``target`` exceeds the best achievable accuracy.
    """
    zero = Policy()
    baseline = expected_accuracy(scenario, zero)
    cert = review_certificate(scenario)
    if target <= baseline + SNAP:
        note = "baseline already meets target" if target >= baseline - SNAP else (
            f"target {target} below baseline {baseline}")
        return OptimizationResult(zero, baseline, 0.0, tuple(cert), note=note)

    a_h = scenario.human.accuracy
    missing = target - baseline
    probs: dict[str, float] = {}
    for label, _ in cert:
        c = scenario.profile(label)
        gain = c.share * (a_h - c.ml_accuracy)
        if gain <= 0:
            continue
        if gain >= missing - SNAP:
            probs[label] = _snap(missing / gain)
            missing = 0.0
            break
        probs[label] = 1.0
        missing -= gain
    if missing > SNAP:
        best = target - missing
        raise InfeasibleError(
            f"target accuracy {target} is not achievable (maximum {best:.12g})")
    policy = Policy(probs)
    return OptimizationResult(
        policy=policy,
        achieved_accuracy=expected_accuracy(scenario, policy),
        spent=expected_cost(scenario, policy, per_items),
        certificate=tuple(cert),
    )


def optimize_time_budget(
    scenario: Scenario, total_time: float, per_items: int = 1000
) -> OptimizationResult:
    """Maximize accuracy when human accuracy is proportional to review time.

    Reviewing a class-i item for time t gains ``t / T_max - acc_i``, i.e.
    ``1 / T_max - acc_i / t`` per time unit, which increases with t. Every
    review therefore runs the full ``T_max`` and the problem reduces to the
    review knapsack with per-review cost ``T_max``.
    """
    tm = scenario.human.time_model
    if tm is None:
        raise ValidationError("scenario has no human time model")
    if not total_time >= 0:
        raise ValidationError(f"total time must be >= 0, got {total_time}")
    if per_items < 1:
        raise ValidationError(f"per_items must be >= 1, got {per_items}")
    t_max = tm.max_time
    cert = sorted(
        ((c.label, (1 - c.ml_accuracy) / t_max) for c in scenario.classes),
        key=lambda item: -item[1],
    )
    remaining = total_time / (per_items * t_max)  # full reviews per item
    alloc: dict[str, tuple[float, float]] = {}
    for label, rate in cert:
        if rate <= 0 or remaining <= 0:
            break
        share = scenario.profile(label).share
        if share <= remaining + SNAP:
            q = 1.0
            remaining = max(0.0, remaining - share)
        else:
            q = _snap(remaining / share)
            remaining = 0.0
        if q > 0:
            alloc[label] = (q, t_max)
    tp = TimePolicy(alloc)
    acc, spent = evaluate_time_policy(scenario, tp, per_items)
    return OptimizationResult(tp, acc, spent, tuple(cert))


def _grid(step: float) -> np.ndarray:
    if not 0 < step <= 1:
        raise ValidationError(f"grid step must be in (0, 1], got {step}")
    n = round(1 / step)
    if abs(n * step - 1) > 1e-9:
        raise ValidationError(f"grid step {step} does not divide 1")
    return np.arange(n + 1) / n


def _count_feasible(costs: list[float], budget: float, m: int) -> int:
    """Number of grid points j in {0..m}^k with sum_i j_i * costs_i / m <= budget."""
    count = 0
    # Enumerate all but the last coordinate through their partial costs.
    partial = np.zeros(1)
    for c in costs[:-1]:
        if partial.size * (m + 1) > 4 * MAX_GRID_POINTS:
            return partial.size * (m + 1)
        partial = (partial[:, None] + np.arange(m + 1)[None, :] * (c / m)).ravel()
        partial = partial[partial <= budget + 1e-9]
        if partial.size > MAX_GRID_POINTS:
            return partial.size
    c = costs[-1]
    if c > 0:
        last = np.floor((budget + 1e-9 - partial) / (c / m))
        count = int(np.minimum(last, m).clip(min=-1).sum() + partial.size)
    else:
        count = partial.size * (m + 1)
    return count


def brute_force_policy_search(
    scenario: Scenario, budget: Budget, grid_step: float = 0.01
) -> OptimizationResult:
    """Exhaustive search over ``{0, step, ..., 1}^k`` under the cost constraint.

    Independent of the greedy ordering; only used as an oracle. Ties are
    resolved after the full enumeration in favour of the lexicographically
    smallest grid point. The enumeration-size guard counts feasible points.
    """
    grid = _grid(grid_step)
    m = grid.size - 1
    k = len(scenario.classes)
    a_h = scenario.human.accuracy
    cap = budget.total_cost / budget.per_items
    costs = [c.share * c.review_cost for c in scenario.classes]
    gains = [c.share * (a_h - c.ml_accuracy) for c in scenario.classes]

    n_points = _count_feasible(costs, cap, m)
    if n_points > MAX_GRID_POINTS:
        raise ValidationError(
            f"grid search would evaluate {n_points} points (limit {MAX_GRID_POINTS})")

    # Feasible prefixes over the first k-1 coordinates, as grid-index rows.
    idx = np.zeros((1, 0), dtype=np.int64)
    pcost = np.zeros(1)
    pgain = np.zeros(1)
    for i in range(k - 1):
        j = np.arange(m + 1)
        idx = np.concatenate(
            [np.repeat(idx, m + 1, axis=0), np.tile(j, idx.shape[0])[:, None]], axis=1)
        pcost = (pcost[:, None] + grid[None, :] * costs[i]).ravel()
        pgain = (pgain[:, None] + grid[None, :] * gains[i]).ravel()
        keep = pcost <= cap + 1e-9
        idx, pcost, pgain = idx[keep], pcost[keep], pgain[keep]

    best_val = -math.inf
    best_key = None
    evaluated = 0
    for j in range(m + 1):
        cost = pcost + grid[j] * costs[-1]
        feasible = cost <= cap + 1e-9
        if not feasible.any():
            continue
        evaluated += int(feasible.sum())
        val = np.where(feasible, pgain + grid[j] * gains[-1], -np.inf)
        r = int(np.argmax(val))
        key = tuple(idx[r]) + (j,)
        if val[r] > best_val + SNAP or (abs(val[r] - best_val) <= SNAP and key < best_key):
            best_val, best_key = float(val[r]), key
    probs = {c.label: float(grid[j]) for c, j in zip(scenario.classes, best_key) if j > 0}
    policy = Policy(probs)
    return OptimizationResult(
        policy=policy,
        achieved_accuracy=expected_accuracy(scenario, policy),
        spent=expected_cost(scenario, policy, budget.per_items),
        evaluated_points=evaluated,
    )


def brute_force_time_search(
    scenario: Scenario, total_time: float, per_items: int = 1000, grid_step: float = 0.05
) -> OptimizationResult:
    """Grid search over review fraction and review time for every class.

    Both ``q`` and ``t / T_max`` range over ``{0, step, ..., 1}``. Partial
    allocations are combined class by class, discarding budget-infeasible
    ones and those dominated in (time used, accuracy gained); the pruning is
    exact, so the result is the best point of the full grid.
    """
    tm = scenario.human.time_model
    if tm is None:
        raise ValidationError("scenario has no human time model")
    grid = _grid(grid_step)
    t_max = tm.max_time
    cap = total_time / per_items
    q, tf = np.meshgrid(grid, grid, indexing="ij")
    q, tf = q.ravel(), tf.ravel()

    # frontier rows: (time used, gain, choice indices...)
    f_time = np.zeros(1)
    f_gain = np.zeros(1)
    f_choice = np.zeros((1, 0), dtype=np.int64)
    for c in scenario.classes:
        o_time = c.share * q * tf * t_max
        o_gain = c.share * q * (tf - c.ml_accuracy)
        time = (f_time[:, None] + o_time[None, :]).ravel()
        gain = (f_gain[:, None] + o_gain[None, :]).ravel()
        rows = np.repeat(np.arange(f_time.size), o_time.size)
        opts = np.tile(np.arange(o_time.size), f_time.size)
        ok = time <= cap + 1e-9
        time, gain, rows, opts = time[ok], gain[ok], rows[ok], opts[ok]
        # Pareto prune: sort by time, keep strictly improving gains.
        order = np.lexsort((-gain, time))
        time, gain, rows, opts = time[order], gain[order], rows[order], opts[order]
        best_before = np.maximum.accumulate(np.concatenate([[-np.inf], gain[:-1]]))
        keep = gain > best_before + SNAP
        f_time, f_gain = time[keep], gain[keep]
        f_choice = np.concatenate([f_choice[rows[keep]], opts[keep][:, None]], axis=1)

    best = int(np.argmax(f_gain))
    alloc = {}
    for c, o in zip(scenario.classes, f_choice[best]):
        if q[o] > 0:
            alloc[c.label] = (float(q[o]), float(tf[o] * t_max))
    tp = TimePolicy(alloc)
    acc, spent = evaluate_time_policy(scenario, tp, per_items)
    return OptimizationResult(tp, acc, spent)
