"""Estimators that use both the proportional and the uniform oracle.

Contains the birthday-rule set-size estimator, the harmonic-mean
average-weight estimator, the known-size hybrid estimator that picks
between a top-quantile collision estimate and the harmonic route, the
advice-free hybrid estimator, and the exact coupon-collector fallback.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .amplify import BernoulliStream, bernoulli_estimate, median_amplify
from .core import BudgetedSource, DrawBudget, DrawBudgetExceeded, DrawSource, FilteredSource

# Hard-abort scale for the known-size hybrid estimator: the draw cap is
# ABORT_SCALE * n^(1/3) / eps^(4/3).  Calibrated so the acceptance
# workloads abort in well under 1/30 of trials; configurable per call.
DEFAULT_ABORT_SCALE = 500.0

# Threshold search: sample count 120 * n^(1/3) * eps^(2/3), threshold at
# the 180th largest sampled weight.
_QUANTILE_SAMPLES = 120.0
_QUANTILE_RANK = 180

_COUPON_CHUNK = 4096
_COUPON_CHUNK_MAX = 1 << 16


class SetSizeResult(NamedTuple):
    """Distinct draws before the first repeat, and the implied set size."""

    s_hat: int
    n_hat: int


def set_size_estimate(unif: DrawSource) -> SetSizeResult:
    """Estimate a set's size from uniform draws by the birthday rule.

    Draws until the first repeated item and returns four times the
    square of the number of distinct items seen.  The result upper
    bounds the true size with probability at least 2/3, its expectation
    is within a constant factor of the true size, and the draw count
    scales with the square root of the size.
    """
    seen: set[int] = set()
    while True:
        draw = unif.take_one()
        if draw.item_id in seen:
            s = len(seen)
            return SetSizeResult(s_hat=s, n_hat=4 * s * s)
        seen.add(draw.item_id)


@dataclass(frozen=True)
class HarmonicConfig:
    """Inputs of the harmonic-mean estimator.

    ``theta_tilde`` is advice upper-bounding the average weight;
    ``phi`` clips items lighter than it out of the harmonic mean.
    """

    eps: float
    theta_tilde: float
    phi: float

    def __post_init__(self) -> None:
        if not 0 < self.eps < 1:
            raise ValueError("eps must lie in (0, 1)")
        if self.theta_tilde <= 0 or self.phi <= 0:
            raise ValueError("theta_tilde and phi must be positive")


@dataclass(frozen=True)
class HarmonicTrace:
    """Harmonic-mean estimate of the average weight, with ingredients."""

    p_hat: float
    k: int
    h_mean: float
    theta_hat: float


def harmonic_estimate(
    prop: DrawSource,
    unif: DrawSource,
    cfg: HarmonicConfig,
    failure: float = 1 / 3,
) -> HarmonicTrace:
    """Estimate the average weight from clipped reciprocal weights.

    First estimates the uniform-draw probability of weights at or above
    the clip ``phi``; then averages reciprocal weights of proportional
    draws (zero below the clip) over a sample sized from the advice, and
    returns the ratio.  With valid advice the estimate has relative
    error ``eps`` except with the requested failure probability, and
    regardless of the advice it falls below a twentieth of the true
    average with probability at most one in twenty.

    When every sampled reciprocal is clipped to zero the infinity
    sentinel is returned; harness statistics count it as a failure.
    """
    eps = cfg.eps
    # failure budget: 3/10 to the clip-mass estimate, 3/5 to the mean's
    # concentration; at the default 1/3 this reproduces the 9/10 and 45
    # in the defining formulas.
    p_hat = bernoulli_estimate(
        BernoulliStream.from_source(unif, lambda ws: ws >= cfg.phi),
        eps / 3,
        failure=failure * 3 / 10,
    )
    kappa = 15.0 / failure
    k = math.ceil(kappa * cfg.theta_tilde / (cfg.phi * (1 - eps / 3) * p_hat * eps * eps))
    _, ws = prop.take(k)
    b = np.zeros(ws.size, dtype=np.float64)
    heavy = ws >= cfg.phi
    b[heavy] = 1.0 / ws[heavy]
    h = float(b.mean())
    theta_hat = math.inf if h == 0.0 else p_hat / h
    return HarmonicTrace(p_hat=p_hat, k=k, h_mean=h, theta_hat=theta_hat)


def threshold_sample_count(n: int, eps: float) -> int:
    return math.ceil(_QUANTILE_SAMPLES * n ** (1 / 3) * eps ** (2 / 3))


def find_threshold(unif: DrawSource, n: int, eps: float) -> float:
    """Weight threshold whose upper set has roughly n^(2/3)/eps^(2/3) items.

    Samples ``ceil(120 n^(1/3) eps^(2/3))`` items uniformly and returns
    the 180th largest sampled weight; with probability at least 19/20
    the number of items at or above it lands within a factor two of
    n^(2/3)/eps^(2/3).  Ties sit inside the returned threshold's set:
    membership below is always tested as weight >= threshold.
    """
    if eps < 8 / math.sqrt(n):
        raise ValueError("threshold search needs eps >= 8/sqrt(n)")
    m = threshold_sample_count(n, eps)
    _, ws = unif.take(m)
    return float(np.partition(ws, m - _QUANTILE_RANK)[m - _QUANTILE_RANK])


@dataclass(frozen=True)
class HybridTrace:
    """Outcome of the known-size hybrid estimator."""

    branch: str  # "coupon" | "prop" | "quantile" | "harmonic"
    w_hat: float
    theta: float | None = None
    p_hat: float | None = None
    aborted: bool = False
    budget_limit: int | None = None


def hybrid_abort_budget(n: int, eps: float, abort_scale: float = DEFAULT_ABORT_SCALE) -> int:
    return math.ceil(abort_scale * n ** (1 / 3) / eps ** (4 / 3))


def hybrid_estimate(
    prop: DrawSource,
    unif: DrawSource,
    n: int,
    eps: float,
    abort_scale: float = DEFAULT_ABORT_SCALE,
) -> HybridTrace:
    """Estimate the total weight given the exact universe size.

    Dispatch: tiny accuracies are answered exactly by the coupon
    collector, small ones by the collision estimator with advice ``n``;
    otherwise a weight threshold splits the work.  If at least half the
    proportional mass sits at or above the threshold, the collision
    estimator runs on draws filtered to that set and is rescaled by the
    mass estimate; otherwise the harmonic-mean estimator covers the
    light-tailed case.  The whole call is capped at
    ``abort_scale * n^(1/3) / eps^(4/3)`` draws and reports an aborted
    trace when the cap is hit.
    """
    if n < 1:
        raise ValueError("universe size must be positive")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    from .prop import prop_estimate  # deferred: that module also imports this one

    budget = DrawBudget(hybrid_abort_budget(n, eps, abort_scale))
    bprop = BudgetedSource(prop, budget)
    bunif = BudgetedSource(unif, budget)
    try:
        if eps <= 1 / (math.sqrt(n) * math.log(n)) and n > 1:
            result = coupon_collect(bunif)
            return HybridTrace(branch="coupon", w_hat=result.total, budget_limit=budget.limit)
        if eps < 8 / math.sqrt(n):
            w_hat = prop_estimate(bprop, n, eps)
            return HybridTrace(branch="prop", w_hat=w_hat, budget_limit=budget.limit)

        theta = find_threshold(bunif, n, eps)
        p_hat = bernoulli_estimate(
            BernoulliStream.from_source(bprop, lambda ws: ws >= theta),
            eps / 3,
            failure=1 / 20,
        )
        if p_hat >= 0.5:
            n_tilde = 2 * n ** (2 / 3) / eps ** (2 / 3)
            heavy = FilteredSource(bprop, keep=lambda ws: ws >= theta)
            w_heavy = prop_estimate(heavy, n_tilde, eps / 3, failure=1 / 20)
            return HybridTrace(
                branch="quantile",
                w_hat=w_heavy / p_hat,
                theta=theta,
                p_hat=p_hat,
                budget_limit=budget.limit,
            )
        rho = harmonic_estimate(
            bprop,
            bunif,
            HarmonicConfig(eps=eps, theta_tilde=3 * theta, phi=theta),
            failure=1 / 20,
        )
        return HybridTrace(
            branch="harmonic",
            w_hat=n * rho.theta_hat,
            theta=theta,
            p_hat=p_hat,
            budget_limit=budget.limit,
        )
    except DrawBudgetExceeded:
        return HybridTrace(
            branch="aborted", w_hat=math.nan, aborted=True, budget_limit=budget.limit
        )


def no_advice_hybrid_estimate(prop: DrawSource, unif: DrawSource, eps: float) -> float:
    """Estimate the total weight with no knowledge of the universe size.

    Sizes the universe by the birthday rule (amplified so the bound
    holds with probability 5/6) and feeds the result to the collision
    estimator as advice, also at failure 1/6.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    from .prop import prop_estimate

    n_tilde = median_amplify(
        lambda: float(set_size_estimate(unif).n_hat), target_failure=1 / 6
    )
    return prop_estimate(prop, n_tilde, eps, failure=1 / 6)


class CouponResult(NamedTuple):
    """Exact sum over the recovered items, and the items themselves."""

    total: float
    items: dict[int, float]


def _coupon_threshold(recovered: int) -> float:
    return 4.0 * recovered * math.log(3.0 * recovered)


def coupon_collect(unif: DrawSource) -> CouponResult:
    """Recover the whole universe by uniform sampling, then sum exactly.

    Keeps a run counter of consecutive draws that added nothing new and
    stops once the run reaches ``4 s ln(3 s)`` for ``s`` items recovered
    so far.  The recovered set equals the universe with probability at
    least 2/3, using on the order of ``n log n`` draws.

    Draws are scanned in chunks; a chunk position is new when it is the
    first occurrence of an unrecovered item.  ``need`` is always the
    number of further repeats that would end the run, so a stop inside a
    chunk consumes draws exactly up to the stopping repeat.
    """
    items: dict[int, float] = {}
    run = 0  # consecutive repeats carried across chunks
    chunk = _COUPON_CHUNK
    while True:
        if items:
            need = max(math.ceil(_coupon_threshold(len(items))) - run, 1)
            size = min(max(chunk, need), _COUPON_CHUNK_MAX)
        else:
            need = math.inf  # the run cannot end before the first item
            size = chunk
        ids, ws = unif.peek(size)
        known = np.fromiter(items.keys(), dtype=np.int64, count=len(items))
        uniq, first_pos = np.unique(ids, return_index=True)
        new_positions = np.sort(first_pos[~np.isin(uniq, known)])
        prev = -1  # position of the last new item in this chunk
        stop_at = -1
        for pos in new_positions:
            gap = int(pos) - prev - 1  # repeats between new items
            if gap >= need:
                stop_at = prev + int(need)
                break
            items[int(ids[pos])] = float(ws[pos])
            run = 0
            prev = int(pos)
            need = math.ceil(_coupon_threshold(len(items)))
        else:
            gap = size - 1 - prev
            if gap >= need:
                stop_at = prev + int(need)
            else:
                run += gap
        if stop_at >= 0:
            unif.consume(stop_at + 1)
            break
        unif.consume(size)
        chunk = min(chunk * 2, _COUPON_CHUNK_MAX)
    return CouponResult(total=math.fsum(items.values()), items=items)
