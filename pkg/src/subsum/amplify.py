"""Shared probabilistic subroutines.

Two workhorses used throughout the estimators:

* a stopping-rule estimator for the bias of a Bernoulli stream whose
  reciprocal is exactly unbiased, at any requested failure probability;
* success-probability amplification by taking the median of an odd
  number of independent runs, with the run count chosen from exact
  binomial tails rather than Chernoff slack.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .core import DrawSource

# Trials-per-success constant calibrated so that the stopping rule's
# relative error exceeds eps with probability at most 1/3.  Scaled
# inversely with the requested failure probability (Chebyshev regime).
STOPPING_RULE_CONSTANT = 5.2

_MAX_PEEK = 1 << 16


class BernoulliStream:
    """i.i.d. boolean trials with exact consumption accounting.

    Outcomes are produced in bulk but only ``consume``d trials count;
    ``trials_consumed`` is the number of trials actually performed.
    """

    def __init__(self, peek_outcomes: Callable[[int], np.ndarray], on_consume: Callable[[int], None]):
        self._peek_outcomes = peek_outcomes
        self._on_consume = on_consume
        self.trials_consumed = 0

    def peek(self, k: int) -> np.ndarray:
        return self._peek_outcomes(k)

    def consume(self, j: int) -> None:
        self._on_consume(j)
        self.trials_consumed += j

    def next(self) -> bool:
        out = bool(self.peek(1)[0])
        self.consume(1)
        return out

    @classmethod
    def from_source(cls, source: DrawSource, predicate: Callable[[np.ndarray], np.ndarray]) -> "BernoulliStream":
        """Trials are oracle draws; success is a predicate on the weight."""
        return cls(lambda k: predicate(source.peek(k)[1]), source.consume)

    @classmethod
    def from_probability(cls, p: float, rng: np.random.Generator) -> "BernoulliStream":
        """Synthetic coin with known bias, for tests and calibration."""
        buf = np.empty(0, dtype=bool)
        pos = 0

        def peek(k: int) -> np.ndarray:
            nonlocal buf, pos
            if buf.size - pos < k:
                fresh = rng.random(max(k - (buf.size - pos), 1024)) < p
                buf = np.concatenate([buf[pos:], fresh])
                pos = 0
            return buf[pos:pos + k]

        def consume(j: int) -> None:
            nonlocal pos
            pos += j

        return cls(peek, consume)

    @classmethod
    def from_callable(cls, fn: Callable[[], bool]) -> "BernoulliStream":
        """Trials produced one at a time by a zero-argument procedure."""
        buf: list[bool] = []

        def peek(k: int) -> np.ndarray:
            while len(buf) < k:
                buf.append(bool(fn()))
            return np.asarray(buf[:k], dtype=bool)

        def consume(j: int) -> None:
            del buf[:j]

        return cls(peek, consume)


def successes_required(eps: float, failure: float = 1 / 3) -> int:
    """Successes the stopping rule needs for relative error ``eps``."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if not 0 < failure < 1:
        raise ValueError("failure must lie in (0, 1)")
    return math.ceil(1 + STOPPING_RULE_CONSTANT / (3 * failure * eps * eps))


def bernoulli_estimate(stream: BernoulliStream, eps: float, failure: float = 1 / 3) -> float:
    """Estimate the bias of a Bernoulli stream by a stopping rule.

    Draws trials until the ``s``-th success and returns ``s / trials``.
    The trial count is negative binomial, so the reciprocal of the
    estimate is an exactly unbiased estimator of the reciprocal bias,
    and ``P(|estimate - p| > eps * p) <= failure`` with expected trial
    count proportional to ``1 / (failure * eps^2 * p)``.

    The stream must have positive bias; the rule runs until it finds
    enough successes, so callers bound total work with their own draw
    budgets where starvation is possible.
    """
    s = successes_required(eps, failure)
    successes = 0
    trials = 0
    chunk = 256
    while True:
        out = stream.peek(chunk)
        hits = np.cumsum(out)
        need = s - successes
        pos = int(np.searchsorted(hits, need))
        if pos < out.size:
            stream.consume(pos + 1)
            trials += pos + 1
            return s / trials
        stream.consume(out.size)
        trials += out.size
        successes += int(hits[-1]) if out.size else 0
        chunk = min(chunk * 2, _MAX_PEEK)


def _binomial_majority_tail(r: int, q: float) -> float:
    """P(Bin(r, q) >= ceil(r/2)), summed exactly over the upper tail."""
    k0 = (r + 1) // 2
    return math.fsum(
        math.comb(r, k) * q**k * (1 - q) ** (r - k) for k in range(k0, r + 1)
    )


def repetitions_for(target_failure: float, per_run_failure: float) -> int:
    """Smallest odd run count whose majority-failure tail meets the target.

    Uses the exact binomial tail, so the returned count carries no
    Chernoff slack.  ``target_failure >= per_run_failure`` needs a
    single run.
    """
    if not 0 < per_run_failure < 0.5:
        raise ValueError("per-run failure must lie in (0, 1/2)")
    if not 0 < target_failure < 1:
        raise ValueError("target failure must lie in (0, 1)")
    r = 1
    while _binomial_majority_tail(r, per_run_failure) > target_failure:
        r += 2
        if r > 100001:
            raise RuntimeError("amplification run count diverged")
    return r


@dataclass(frozen=True)
class AmplifiedRun:
    """Outcome of an odd number of independent runs and their median."""

    runs: int
    values: tuple[float, ...]
    median: float

    def __post_init__(self) -> None:
        if self.runs % 2 != 1 or self.runs != len(self.values):
            raise ValueError("amplified run needs an odd number of values")


def amplified_run(
    run: Callable[[], float],
    target_failure: float,
    per_run_failure: float = 1 / 3,
) -> AmplifiedRun:
    """Execute independent runs and record their median.

    If at least half the runs satisfy a monotone success predicate
    (an interval or one-sided threshold), so does the median; for
    nonnegative outputs the median's expectation is at most twice a
    single run's.
    """
    r = repetitions_for(target_failure, per_run_failure)
    values = tuple(float(run()) for _ in range(r))
    ordered = sorted(values)
    return AmplifiedRun(runs=r, values=values, median=ordered[r // 2])


def median_amplify(
    run: Callable[[], float],
    target_failure: float,
    per_run_failure: float = 1 / 3,
) -> float:
    """Median of enough independent runs to reach the target failure."""
    return amplified_run(run, target_failure, per_run_failure).median


def median_of(values: Sequence[float]) -> float:
    """Median of an odd-length sequence (the middle order statistic)."""
    if len(values) % 2 != 1:
        raise ValueError("median amplification uses an odd run count")
    return sorted(values)[len(values) // 2]
