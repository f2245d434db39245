"""Sum estimation from the proportional oracle alone.

The centrepiece is the collision estimator: among ``m`` proportional
draws, every unordered pair of equal draws contributes the reciprocal
weight of the collided item, and the pair count over that sum estimates
the total weight.  Around it sit the dyadic bucket samplers and the
advice-free estimator that picks a bucket, sizes it by the birthday
rule, and rescales by the bucket's probability mass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .amplify import BernoulliStream, bernoulli_estimate, median_amplify
from .core import DrawBudget, BudgetedSource, DrawSource, FilteredSource, ItemDraw

# Pair-count constant: m = ceil(sqrt(24 * advice) / eps) + 1 keeps the
# estimator's relative variance below (eps/2)^2 / 3, hence failure 1/3.
# Amplification to failure f scales the 24 by (1/3) / f.
COLLISION_CONSTANT = 24.0

# Rejection-filter scans are kept short so that speculative acceptance
# coins rarely outlive the call that flipped them.
_REJECTION_CHUNK = 64


@dataclass(frozen=True)
class CollisionTally:
    """Multiplicities of the distinct items among ``m`` proportional draws."""

    m: int
    item_ids: tuple[int, ...]
    weights: tuple[float, ...]
    counts: tuple[int, ...]

    def __post_init__(self) -> None:
        if len({*self.item_ids}) != len(self.item_ids):
            raise ValueError("tally lists an item twice")
        if any(c < 1 for c in self.counts):
            raise ValueError("tally multiplicities must be at least 1")
        if sum(self.counts) != self.m:
            raise ValueError("tally multiplicities must sum to the draw count")

    @classmethod
    def from_draws(cls, ids: np.ndarray, weights: np.ndarray) -> "CollisionTally":
        uniq, first, counts = np.unique(ids, return_index=True, return_counts=True)
        return cls(
            m=int(ids.size),
            item_ids=tuple(int(i) for i in uniq),
            weights=tuple(float(w) for w in weights[first]),
            counts=tuple(int(c) for c in counts),
        )


def collision_sum_estimate(tally: CollisionTally) -> float:
    """Closed-form total-weight estimate from a tally.

    Returns ``C(m,2) / sum_s C(c_s,2)/w(s)``; infinity when every draw
    was distinct.  The reciprocal of this estimate is exactly unbiased
    for the reciprocal total weight, with the infinity case contributing
    zero.
    """
    m = tally.m
    colliding = math.fsum(
        (c * (c - 1) / 2) / w for c, w in zip(tally.counts, tally.weights) if c >= 2
    )
    if colliding == 0.0:
        return math.inf
    return (m * (m - 1) / 2) / colliding


def sample_count_for(n_tilde: float, eps: float, failure: float = 1 / 3) -> int:
    """Draw count for the collision estimator at the given failure level."""
    if n_tilde < 1:
        raise ValueError("advice must be at least 1")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    scaled = COLLISION_CONSTANT * n_tilde / (3 * failure)
    return math.ceil(math.sqrt(scaled) / eps) + 1


def prop_estimate(
    prop: DrawSource,
    n_tilde: float,
    eps: float,
    failure: float = 1 / 3,
) -> float:
    """Collision estimate of the total weight with advice ``n_tilde``.

    Draws exactly ``sample_count_for(n_tilde, eps, failure)`` items.  If
    the advice really upper-bounds the universe size, the estimate lands
    within ``eps`` relative error except with the stated failure
    probability; all-distinct samples yield the infinity sentinel.
    """
    m = sample_count_for(n_tilde, eps, failure)
    ids, ws = prop.take(m)
    return collision_sum_estimate(CollisionTally.from_draws(ids, ws))


def bucket_index(weight: float) -> int:
    """Dyadic bucket of a weight: the unique b with 2^b <= weight < 2^(b+1)."""
    if weight <= 0 or not math.isfinite(weight):
        raise ValueError(f"weight must be positive and finite, got {weight}")
    mantissa, exponent = math.frexp(weight)  # weight = mantissa * 2^exponent
    return exponent - 1


def bucket_bounds(b: int) -> tuple[float, float]:
    return (2.0**b, 2.0 ** (b + 1))


def bucket_member_mask(b: int):
    """Vectorised membership test for bucket ``b``."""
    lo, hi = bucket_bounds(b)
    return lambda ws: (ws >= lo) & (ws < hi)


def bucket_prop_source(prop: DrawSource, b: int) -> FilteredSource:
    """Proportional draws conditioned on landing in bucket ``b``."""
    return FilteredSource(prop, keep=bucket_member_mask(b))


def bucket_unif_source(prop: DrawSource, b: int, rng: np.random.Generator) -> FilteredSource:
    """Uniform draws over bucket ``b``, built from proportional draws.

    A bucket hit with weight w is kept with probability 2^b / w, which
    is at least one half, flattening the conditional distribution to
    uniform at a constant-factor draw overhead.
    """
    lo, _ = bucket_bounds(b)
    return FilteredSource(
        prop,
        keep=bucket_member_mask(b),
        accept_prob=lambda ws: lo / ws,
        rng=rng,
        scan_chunk=_REJECTION_CHUNK,
    )


def _maybe_budgeted(source: DrawSource, max_draws: int | None) -> DrawSource:
    if max_draws is None:
        return source
    return BudgetedSource(source, DrawBudget(max_draws))


def prop_bucket_sample(prop: DrawSource, b: int, max_draws: int | None = None) -> ItemDraw:
    """One proportional draw conditioned on bucket ``b``.

    Consumes geometrically many raw draws (mean: the reciprocal of the
    bucket's probability mass); ``max_draws`` guards empty buckets.
    """
    return bucket_prop_source(_maybe_budgeted(prop, max_draws), b).take_one()


def unif_bucket_sample(
    prop: DrawSource,
    b: int,
    rng: np.random.Generator,
    max_draws: int | None = None,
) -> ItemDraw:
    """One uniform draw over bucket ``b``, via rejection on weight."""
    return bucket_unif_source(_maybe_budgeted(prop, max_draws), b, rng).take_one()


@dataclass(frozen=True)
class NoAdviceBreakdown:
    """Trace of the advice-free estimate and its three ingredients."""

    bucket: int
    n_tilde_b: float
    w_hat_b: float
    p_hat_b: float
    w_hat: float

    def __post_init__(self) -> None:
        if not 0 < self.p_hat_b <= 1:
            raise ValueError("bucket-mass estimate must lie in (0, 1]")
        if self.n_tilde_b < 1:
            raise ValueError("bucket-size advice must be at least 1")


def no_advice_prop_estimate(
    prop: DrawSource,
    eps: float,
    rng: np.random.Generator,
    max_draws: int | None = None,
) -> NoAdviceBreakdown:
    """Estimate the total weight with no advice on the universe size.

    Picks the heavier bucket of two proportional draws, sizes it with
    the birthday rule over simulated uniform bucket draws, estimates the
    bucket's own total by collisions, and divides by the bucket's
    estimated share of the proportional mass.  Each ingredient runs at
    failure 1/10, so the quotient misses the eps band with probability
    at most 3/10.
    """
    from .hybrid import set_size_estimate  # deferred: hybrid also uses this module

    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    src = _maybe_budgeted(prop, max_draws)

    a1 = src.take_one()
    a2 = src.take_one()
    b = max(bucket_index(a1.weight), bucket_index(a2.weight))

    n_tilde_b = median_amplify(
        lambda: float(set_size_estimate(bucket_unif_source(src, b, rng)).n_hat),
        target_failure=1 / 10,
    )
    w_hat_b = prop_estimate(bucket_prop_source(src, b), n_tilde_b, eps / 3, failure=1 / 10)
    p_hat_b = bernoulli_estimate(
        BernoulliStream.from_source(src, bucket_member_mask(b)), eps / 3, failure=1 / 10
    )
    return NoAdviceBreakdown(
        bucket=b,
        n_tilde_b=n_tilde_b,
        w_hat_b=w_hat_b,
        p_hat_b=p_hat_b,
        w_hat=w_hat_b / p_hat_b,
    )
