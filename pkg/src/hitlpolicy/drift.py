"""Drift measures for categorical outcome streams.

Distances between two class distributions cover chi-square, Cohen's w,
the dissimilarity index, Hellinger and Jensen-Shannon. Per-class accuracy
changes are tested with two-proportion z-tests under Holm's step-down
adjustment, and a Page-Hinkley detector watches a sequence for mean shifts.

Chi-square and Cohen's w are directional: the first argument is the
expected (reference) distribution. The other distances are symmetric.
The chi-square value returned is the classical un-rooted statistic.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import TYPE_CHECKING, Mapping, Sequence

import numpy as np

if TYPE_CHECKING:
    from .simulate import OutcomeStream

EFFECT_BANDS = (
    (2.0, "huge"),
    (1.2, "very large"),
    (0.8, "large"),
    (0.5, "medium"),
    (0.2, "small"),
    (0.01, "very small"),
)
EFFECT_ORDER = ("negligible",) + tuple(name for _, name in reversed(EFFECT_BANDS))


@dataclass(frozen=True)
class CategoricalDist:
    labels: tuple[str, ...]
    props: tuple[float, ...]

    def __post_init__(self):
        labels, props = tuple(self.labels), tuple(float(p) for p in self.props)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "props", props)
        if len(labels) != len(props):
            raise ValueError("labels and props differ in length")
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate labels")
        if any(p < 0 for p in props):
            raise ValueError("proportions must be nonnegative")
        if abs(math.fsum(props) - 1) > 1e-9:
            raise ValueError(f"proportions sum to {math.fsum(props)}, expected 1")

    @classmethod
    def from_counts(cls, counts: Mapping[str, float]) -> CategoricalDist:
        total = math.fsum(counts.values())
        if total <= 0:
            raise ValueError("counts must have a positive total")
        return cls(tuple(counts), tuple(v / total for v in counts.values()))

    @classmethod
    def from_props(cls, props: Mapping[str, float]) -> CategoricalDist:
        return cls(tuple(props), tuple(props.values()))

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.labels, self.props))


def _aligned(p: CategoricalDist, q: CategoricalDist) -> tuple[np.ndarray, np.ndarray]:
    if set(p.labels) != set(q.labels):
        raise ValueError(f"label sets differ: {sorted(p.labels)} vs {sorted(q.labels)}")
    qd = q.as_dict()
    return np.array(p.props), np.array([qd[k] for k in p.labels])


def chi_square_stat(expected: Mapping[str, float], observed: Mapping[str, float]) -> float:
    """``sum_i (observed_i - expected_i)**2 / expected_i`` over count vectors.

    Raises:
        ValueError: on differing labels, a zero expected count or unequal totals.
    """
    if set(expected) != set(observed):
        raise ValueError("expected and observed have different labels")
    e = np.array([expected[k] for k in expected], dtype=float)
    o = np.array([observed[k] for k in expected], dtype=float)
    if np.any(e <= 0):
        zero = [k for k in expected if expected[k] <= 0]
        raise ValueError(f"expected count is zero for {zero}")
    if abs(e.sum() - o.sum()) > 1e-9 * max(1.0, e.sum()):
        raise ValueError(f"count totals differ: expected {e.sum()}, observed {o.sum()}")
    return float(np.sum((o - e) ** 2 / e))


def effect_size_label(w: float) -> str:
    """Conventional band for Cohen's w; bands are closed below."""
    for threshold, name in EFFECT_BANDS:
        if w >= threshold:
            return name
    return "negligible"


def cohens_w(expected: CategoricalDist, observed: CategoricalDist) -> tuple[float, str]:
    e, o = _aligned(expected, observed)
    if np.any(e <= 0):
        raise ValueError("Cohen's w is undefined when an expected proportion is zero")
    w = math.sqrt(float(np.sum((o - e) ** 2 / e)))
    return w, effect_size_label(w)


def dissimilarity_index(p: CategoricalDist, q: CategoricalDist) -> float:
    """Half the L1 distance (total variation). Values below 0.03 are 'very close'."""
    a, b = _aligned(p, q)
    return float(0.5 * np.sum(np.abs(a - b)))


def hellinger(p: CategoricalDist, q: CategoricalDist) -> float:
    """``sqrt(1 - sum(sqrt(p_i q_i)))``, in [0, 1].

    Computed as ``sqrt(0.5 * sum((sqrt(p_i) - sqrt(q_i))^2))``, which is the
    same quantity for normalized inputs but avoids the cancellation in
    ``1 - BC`` that leaves ~1e-8 for identical distributions.
    """
    a, b = _aligned(p, q)
    return min(1.0, math.sqrt(0.5 * float(np.sum((np.sqrt(a) - np.sqrt(b)) ** 2))))


def _xlogy_ratio(x: np.ndarray, m: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = x[pos] * np.log(x[pos] / m[pos])
    return out


def jsd(p: CategoricalDist, q: CategoricalDist) -> tuple[float, dict[str, float]]:
    """Jensen-Shannon distance (natural log) and per-label contributions.

    The contribution of label i is ``p_i ln(p_i/m_i) + q_i ln(q_i/m_i)`` with
    ``m = (p + q) / 2``; the distance is ``sqrt(0.5 * sum of contributions)``
    and lies in ``[0, sqrt(ln 2)]``. The label with the largest contribution
    is the one that differs most.
    """
    a, b = _aligned(p, q)
    m = (a + b) / 2
    contrib = np.maximum(_xlogy_ratio(a, m) + _xlogy_ratio(b, m), 0.0)
    return math.sqrt(0.5 * float(contrib.sum())), dict(zip(p.labels, contrib.tolist()))


def _norm_sf(z: float) -> float:
    return 0.5 * math.erfc(z / math.sqrt(2))


def diff_in_proportions(
    successes1: int, n1: int, successes2: int, n2: int
) -> tuple[float, float]:
    """Pooled two-proportion z-test; returns ``(z, two-sided p-value)``.

    z is positive when the first sample's proportion is larger. A pooled
    proportion of exactly 0 or 1 gives ``(0.0, 1.0)``.
    """
    if n1 < 1 or n2 < 1:
        raise ValueError("both samples need at least one observation")
    if not (0 <= successes1 <= n1 and 0 <= successes2 <= n2):
        raise ValueError("successes must lie in [0, n]")
    pooled = (successes1 + successes2) / (n1 + n2)
    if pooled <= 0 or pooled >= 1:
        return 0.0, 1.0
    se = math.sqrt(pooled * (1 - pooled) * (1 / n1 + 1 / n2))
    z = (successes1 / n1 - successes2 / n2) / se
    return z, min(1.0, 2 * _norm_sf(abs(z)))


def holm_adjust(p_values: Sequence[float]) -> list[float]:
    """Holm step-down adjusted p-values, monotone and capped at 1."""
    p = np.asarray(p_values, dtype=float)
    if p.size == 0:
        return []
    if np.any((p < 0) | (p > 1)):
        raise ValueError("p-values must lie in [0, 1]")
    m = p.size
    order = np.argsort(p, kind="stable")
    stepped = np.maximum.accumulate((m - np.arange(m)) * p[order])
    adjusted = np.empty(m)
    adjusted[order] = np.minimum(stepped, 1.0)
    return adjusted.tolist()


@dataclass
class PageHinkley:
    """Page-Hinkley detector for a shift in the mean of a sequence.

    ``delta`` is the tolerated drift per observation and ``threshold`` the
    alarm level. For ``direction="increase"`` the cumulative sum of
    ``x_t - mean_t - delta`` is tracked and an alarm raised when it climbs
    more than ``threshold`` above its running minimum; ``"decrease"``
    mirrors this with ``x_t - mean_t + delta`` against its running maximum.
    ``"two_sided"`` watches both. All state resets after an alarm.
    """

    delta: float = 0.005
    threshold: float = 50.0
    direction: str = "two_sided"
    t: int = field(default=0, init=False)
    mean: float = field(default=0.0, init=False)
    m_up: float = field(default=0.0, init=False)
    min_up: float = field(default=math.inf, init=False)
    m_down: float = field(default=0.0, init=False)
    max_down: float = field(default=-math.inf, init=False)
    last_gap: float = field(default=0.0, init=False)

    def __post_init__(self):
        if self.direction not in ("increase", "decrease", "two_sided"):
            raise ValueError(f"unknown direction {self.direction!r}")
        if self.delta < 0:
            raise ValueError("delta must be >= 0")
        if not self.threshold > 0:
            raise ValueError("threshold must be > 0")

    def reset(self) -> None:
        self.t = 0
        self.mean = 0.0
        self.m_up, self.min_up = 0.0, math.inf
        self.m_down, self.max_down = 0.0, -math.inf

    def update(self, x: float) -> bool:
        self.t += 1
        self.mean += (x - self.mean) / self.t
        dev = x - self.mean
        gap = 0.0
        if self.direction != "decrease":
            self.m_up += dev - self.delta
            self.min_up = min(self.min_up, self.m_up)
            gap = max(gap, self.m_up - self.min_up)
        if self.direction != "increase":
            self.m_down += dev + self.delta
            self.max_down = max(self.max_down, self.m_down)
            gap = max(gap, self.max_down - self.m_down)
        self.last_gap = gap
        if gap > self.threshold:
            self.reset()
            return True
        return False


def ph_update(state: PageHinkley, x: float) -> tuple[PageHinkley, bool]:
    alarm = state.update(x)
    return state, alarm


def page_hinkley_scan(xs: Sequence[float], delta=0.005, threshold=50.0,
                      direction="two_sided") -> list[tuple[int, float]]:
    """All alarms over a sequence as ``(index, gap)`` pairs."""
    ph = PageHinkley(delta, threshold, direction)
    alarms = []
    for i, x in enumerate(xs):
        if ph.update(float(x)):
            alarms.append((i, ph.last_gap))
    return alarms


@dataclass(frozen=True)
class ShareStats:
    chi_square: float | None
    cohens_w: float | None
    effect_label: str | None
    dissimilarity: float
    hellinger: float
    jsd: float
    jsd_contributions: dict[str, float]


@dataclass(frozen=True)
class ClassTest:
    label: str
    z_stat: float
    p_value: float
    holm_adjusted_p: float
    rejected: bool


@dataclass(frozen=True)
class DriftReport:
    share_stats: ShareStats
    class_accuracy_tests: tuple[ClassTest, ...]
    ph_alarm: tuple[int, float] | None
    structural_drift: tuple[str, ...] = ()
    alpha: float = 0.05

    @property
    def share_drift(self) -> bool:
        label = self.share_stats.effect_label
        return label is not None and EFFECT_ORDER.index(label) >= EFFECT_ORDER.index("large")

    @property
    def accuracy_drift(self) -> bool:
        return any(t.rejected for t in self.class_accuracy_tests)

    @property
    def drift(self) -> bool:
        return bool(self.structural_drift) or self.share_drift or self.accuracy_drift

    def to_dict(self) -> dict:
        out = asdict(self)
        out["ph_alarm"] = (
            None if self.ph_alarm is None
            else {"index": self.ph_alarm[0], "magnitude": self.ph_alarm[1]})
        out["structural_drift"] = list(self.structural_drift)
        out["class_accuracy_tests"] = [asdict(t) for t in self.class_accuracy_tests]
        out["share_drift"] = self.share_drift
        out["accuracy_drift"] = self.accuracy_drift
        out["drift"] = self.drift
        return out


def monitor_stream(
    reference: OutcomeStream,
    current: OutcomeStream,
    alpha: float = 0.05,
    ph_delta: float = 0.005,
    ph_threshold: float = 50.0,
) -> DriftReport:
    """Compare a current outcome stream against a reference one.

    Share drift is measured on the predicted-class distribution. Accuracy
    drift is tested per class on un-reviewed items only (reviewed items
    reflect the human, not the model), Holm-adjusted at ``alpha``. The
    Page-Hinkley detector runs on the un-reviewed correctness sequence of
    the current stream, watching for a drop.
    """
    if len(reference) == 0 or len(current) == 0:
        raise ValueError("both streams must be non-empty")
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    ref_counts = reference.class_counts()
    cur_counts = current.class_counts()
    labels = list(ref_counts)
    labels += [k for k in cur_counts if k not in ref_counts]
    ref_full = {k: ref_counts.get(k, 0) for k in labels}
    cur_full = {k: cur_counts.get(k, 0) for k in labels}
    p = CategoricalDist.from_counts(ref_full)
    q = CategoricalDist.from_counts(cur_full)

    structural = tuple(k for k in labels if ref_full[k] == 0 and cur_full[k] > 0)
    if structural:
        chi = w = effect = None
    else:
        seen = [k for k in labels if ref_full[k] > 0]
        n_cur = sum(cur_full.values())
        expected = {k: p.as_dict()[k] * n_cur for k in seen}
        chi = chi_square_stat(expected, {k: cur_full[k] for k in seen})
        w, effect = cohens_w(
            CategoricalDist.from_counts({k: ref_full[k] for k in seen}),
            CategoricalDist.from_counts({k: cur_full[k] for k in seen}))
    dist, contrib = jsd(p, q)
    share_stats = ShareStats(
        chi_square=chi,
        cohens_w=w,
        effect_label=effect,
        dissimilarity=dissimilarity_index(p, q),
        hellinger=hellinger(p, q),
        jsd=dist,
        jsd_contributions=contrib,
    )

    ref_acc = reference.unreviewed_accuracy_counts()
    cur_acc = current.unreviewed_accuracy_counts()
    raw = []
    for k in labels:
        s1, n1 = ref_acc.get(k, (0, 0))
        s2, n2 = cur_acc.get(k, (0, 0))
        if n1 == 0 or n2 == 0:
            continue
        z, pv = diff_in_proportions(s1, n1, s2, n2)
        raw.append((k, z, pv))
    adjusted = holm_adjust([pv for _, _, pv in raw])
    tests = tuple(
        ClassTest(k, z, pv, adj, adj < alpha)
        for (k, z, pv), adj in zip(raw, adjusted)
    )

    mask = ~current.reviewed
    alarms = page_hinkley_scan(current.correct[mask].astype(float), ph_delta,
                               ph_threshold, "decrease")
    ph_alarm = None
    if alarms:
        idx, gap = alarms[0]
        ph_alarm = (int(np.flatnonzero(mask)[idx]), gap)
    return DriftReport(share_stats, tests, ph_alarm, structural, alpha)
