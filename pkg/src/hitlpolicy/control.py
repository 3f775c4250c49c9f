"""Nonparametric control intervals for performance statistics.

A control interval is the range a statistic such as accuracy is expected to
stay in with a stated confidence; once a model is deployed, values outside
it signal out-of-control behaviour. ``percentile_interval`` trims order
statistics of repeated measurements, and ``bootstrap_interval`` applies the
same trimming to bootstrap replicates of one sample. ``clt_interval`` uses
the normal approximation to a mean instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import NormalDist
from typing import Callable, Sequence

import numpy as np


@dataclass(frozen=True)
class EmpiricalCdf:
    sorted_samples: np.ndarray

    @classmethod
    def from_samples(cls, samples: Sequence[float]) -> EmpiricalCdf:
        arr = np.sort(np.asarray(samples, dtype=float))
        if arr.size == 0:
            raise ValueError("empirical CDF needs at least one sample")
        return cls(arr)

    @property
    def n(self) -> int:
        return int(self.sorted_samples.size)

    def __call__(self, x):
        return ecdf_eval(self, x)


def ecdf_eval(cdf: EmpiricalCdf, x):
    """Fraction of samples ``<= x``. Accepts a scalar or an array of points."""
    counts = np.searchsorted(cdf.sorted_samples, x, side="right")
    if np.ndim(counts) == 0:
        return int(counts) / cdf.n
    return counts / cdf.n


@dataclass(frozen=True)
class Interval:
    low: float
    high: float
    confidence: float
    method: str

    def __contains__(self, value: float) -> bool:
        return self.low <= value <= self.high

    @property
    def width(self) -> float:
        return self.high - self.low


def trim_count(n: int, alpha: float) -> int:
    """Values removed from each end: ``floor(n * alpha / 2)``."""
    return math.floor(n * alpha / 2 + 1e-9)


def percentile_interval(samples: Sequence[float], alpha: float = 0.05) -> Interval:
    """Drop ``floor(n*alpha/2)`` values from each end of the sorted sample.

    Rounding the trim count down keeps at least ``ceil(n * (1 - alpha))``
    points, so the empirical coverage is never below ``1 - alpha``.

    Example:
        >>> percentile_interval(range(1, 1001), 0.05)
        Interval(low=26.0, high=975.0, confidence=0.95, method='percentile')
    """
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    arr = np.sort(np.asarray(samples, dtype=float))
    n = arr.size
    if n == 0 or n * alpha < 2 - 1e-9:
        raise ValueError(
            f"sample of size {n} too small for alpha={alpha} (need at least {math.ceil(2 / alpha)})")
    trim = trim_count(n, alpha)
    return Interval(float(arr[trim]), float(arr[n - trim - 1]), 1 - alpha, "percentile")


def bootstrap_replicates(
    data: Sequence[float],
    statistic: Callable,
    reps: int,
    seed: int,
    vectorized: bool = False,
    chunk: int = 256,
) -> np.ndarray:
    """Statistic evaluated on ``reps`` n-out-of-n resamples with replacement.

    Replicates are generated in fixed-size chunks, each from its own
    substream spawned from ``seed``, so the output does not depend on how
    the chunks are scheduled. With ``vectorized=True`` the statistic is
    called once per chunk as ``statistic(resamples, axis=-1)``.
    """
    arr = np.asarray(data, dtype=float)
    if arr.size == 0:
        raise ValueError("bootstrap needs non-empty data")
    if reps < 1:
        raise ValueError(f"reps must be >= 1, got {reps}")
    n = arr.size
    n_chunks = -(-reps // chunk)
    streams = np.random.SeedSequence(seed).spawn(n_chunks)
    out = np.empty(reps)
    for i, ss in enumerate(streams):
        lo, hi = i * chunk, min(reps, (i + 1) * chunk)
        rng = np.random.default_rng(ss)
        resamples = arr[rng.integers(0, n, size=(hi - lo, n))]
        if vectorized:
            out[lo:hi] = statistic(resamples, axis=-1)
        else:
            out[lo:hi] = [statistic(row) for row in resamples]
    return out


def bootstrap_interval(
    data: Sequence[float],
    statistic: Callable = np.mean,
    reps: int = 2000,
    alpha: float = 0.05,
    seed: int = 0,
    vectorized: bool | None = None,
) -> Interval:
    """Percentile bootstrap control interval for ``statistic``.

    ``np.mean`` and ``np.median`` are run vectorized automatically.
    """
    if reps * alpha < 2 - 1e-9:
        raise ValueError(f"reps={reps} too small for alpha={alpha}")
    if vectorized is None:
        vectorized = statistic in (np.mean, np.median)
    reps_values = bootstrap_replicates(data, statistic, reps, seed, vectorized)
    iv = percentile_interval(reps_values, alpha)
    return Interval(iv.low, iv.high, iv.confidence, "bootstrap")


def normal_quantile(p: float) -> float:
    """Inverse standard normal CDF."""
    if not 0 < p < 1:
        raise ValueError(f"p must be in (0, 1), got {p}")
    return NormalDist().inv_cdf(p)


def clt_interval(samples: Sequence[float], alpha: float = 0.05) -> Interval:
    """``mean +/- z_{1-alpha/2} * s / sqrt(n)`` with the n-1 sample deviation."""
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must be in (0, 1), got {alpha}")
    arr = np.asarray(samples, dtype=float)
    n = arr.size
    if n < 2:
        raise ValueError(f"CLT interval needs at least 2 samples, got {n}")
    mean = float(arr.mean())
    s = float(arr.std(ddof=1))
    half = normal_quantile(1 - alpha / 2) * s / math.sqrt(n)
    return Interval(mean - half, mean + half, 1 - alpha, "clt")


def read_samples(path) -> list[float]:
    """One real per line; blank lines and lines starting with '#' are skipped."""
    values = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                values.append(float(line))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: not a number: {line!r}") from None
    return values
