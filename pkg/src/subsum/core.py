"""Hidden weighted universes and the sampling oracles estimators consume.

An estimator never sees the instance directly.  It interacts with draws
only through item identity (equality of opaque integer tokens) and the
weight attached to each draw, via :class:`DrawSource` objects handed out
by a :class:`SamplerHandle`.

Draws are presampled internally in fixed-size blocks so that bulk
consumers run at numpy speed, while the draw counters advance by exactly
one per *consumed* draw.  Presampled-but-unconsumed draws are
indistinguishable from draws never made.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, NamedTuple, Sequence

import numpy as np

# Presampling block size.  Fixed so that the served draw sequence is a
# function of the seed alone, independent of how callers chunk requests.
_BLOCK = 16384


class InstanceFormatError(ValueError):
    """Raised when an instance file or weight vector is malformed."""


class DrawBudgetExceeded(RuntimeError):
    """Raised when a draw budget is exhausted mid-estimate."""


class ItemDraw(NamedTuple):
    """One oracle draw: an opaque item token and that item's weight."""

    item_id: int
    weight: float


class WeightedInstance:
    """An immutable universe of items with nonnegative weights.

    Item tokens are the integers ``0 .. n-1``.  Original string labels
    from instance files are kept for reporting only; estimators never
    see them.  Instances are safe to share across threads and processes.
    """

    def __init__(self, weights: Sequence[float], labels: Sequence[str] | None = None):
        w = np.asarray(weights, dtype=np.float64)
        if w.ndim != 1 or w.size == 0:
            raise InstanceFormatError("instance needs at least one item")
        if not np.all(np.isfinite(w)):
            raise InstanceFormatError("weights must be finite")
        if np.any(w < 0):
            bad = int(np.argmax(w < 0))
            raise InstanceFormatError(f"negative weight {w[bad]} at item {bad}")
        total = math.fsum(w.tolist())
        if total <= 0:
            raise InstanceFormatError("total weight must be positive")
        if labels is not None:
            if len(labels) != w.size:
                raise InstanceFormatError("labels and weights differ in length")
            if len(set(labels)) != len(labels):
                raise InstanceFormatError("duplicate item id in instance")
        self.weights = w
        self.weights.setflags(write=False)
        self.labels = tuple(labels) if labels is not None else None
        self.total_weight = total
        self._alias: _AliasTable | None = None

    @property
    def n(self) -> int:
        return int(self.weights.size)

    def label_of(self, token: int) -> str:
        return self.labels[token] if self.labels is not None else str(token)

    def weight_of(self, token: int) -> float:
        return float(self.weights[token])

    def alias_table(self) -> "_AliasTable":
        # Built lazily: uniform-only workloads never pay for it.
        if self._alias is None:
            self._alias = _AliasTable(self.weights)
        return self._alias

    def __repr__(self) -> str:
        return f"WeightedInstance(n={self.n}, W={self.total_weight!r})"


class _AliasTable:
    """Vose alias table over the positive-weight items.

    Zero-weight items are excluded up front, so a proportional draw can
    never return them.  Draws are O(1) and vectorised.
    """

    def __init__(self, weights: np.ndarray):
        positive = np.flatnonzero(weights > 0)
        if positive.size == 0:
            raise InstanceFormatError("no positive-weight item to sample")
        self.tokens = positive.astype(np.int64)
        w = weights[positive]
        k = w.size
        # scaled[i] = w_i * k / W; ratios are invariant under scaling all
        # weights by a power of two, which keeps draw streams bit-stable.
        scaled = (w * k) / w.sum()
        prob = np.ones(k, dtype=np.float64)
        alias = np.arange(k, dtype=np.int64)
        small = [i for i in range(k) if scaled[i] < 1.0]
        large = [i for i in range(k) if scaled[i] >= 1.0]
        scaled = scaled.copy()
        while small and large:
            s = small.pop()
            g = large.pop()
            prob[s] = scaled[s]
            alias[s] = g
            scaled[g] = (scaled[g] + scaled[s]) - 1.0
            if scaled[g] < 1.0:
                small.append(g)
            else:
                large.append(g)
        # leftovers are 1.0 within rounding
        self.prob = prob
        self.alias = alias

    def draw_block(self, rng: np.random.Generator, size: int) -> np.ndarray:
        k = self.prob.size
        slots = rng.integers(0, k, size=size)
        u = rng.random(size)
        keep = u < self.prob[slots]
        chosen = np.where(keep, slots, self.alias[slots])
        return self.tokens[chosen]


class DrawSource:
    """A stream of oracle draws with peek/consume accounting.

    ``peek(k)`` materialises the next ``k`` pending draws without
    counting them; ``consume(j)`` commits the first ``j`` pending draws,
    advancing the underlying oracle counters.  A draw that is peeked but
    never consumed has not happened.  A source must have a single reader
    at a time.
    """

    def peek(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def consume(self, j: int) -> None:
        raise NotImplementedError

    def take(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        ids, ws = self.peek(k)
        out = (ids[:k].copy(), ws[:k].copy())
        self.consume(k)
        return out

    def take_one(self) -> ItemDraw:
        ids, ws = self.peek(1)
        draw = ItemDraw(int(ids[0]), float(ws[0]))
        self.consume(1)
        return draw


class BlockSource(DrawSource):
    """Source serving draws presampled in fixed-size blocks.

    ``gen_block(size)`` produces the next ``size`` item tokens from the
    underlying randomness; ``lookup(ids)`` attaches their weights.  The
    ``consumed`` counter is the oracle's ground truth.
    """

    def __init__(
        self,
        gen_block: Callable[[int], np.ndarray],
        lookup: Callable[[np.ndarray], np.ndarray],
    ):
        self._gen_block = gen_block
        self._lookup = lookup
        self._ids = np.empty(0, dtype=np.int64)
        self._ws = np.empty(0, dtype=np.float64)
        self._pos = 0
        self.consumed = 0

    def peek(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        avail = self._ids.size - self._pos
        if avail < k:
            id_blocks = [self._ids[self._pos:]]
            ws_blocks = [self._ws[self._pos:]]
            need = k - avail
            for _ in range(-(-need // _BLOCK)):
                ids = np.asarray(self._gen_block(_BLOCK), dtype=np.int64)
                id_blocks.append(ids)
                ws_blocks.append(self._lookup(ids))
            self._ids = np.concatenate(id_blocks)
            self._ws = np.concatenate(ws_blocks)
            self._pos = 0
        end = self._pos + k
        return self._ids[self._pos:end], self._ws[self._pos:end]

    def consume(self, j: int) -> None:
        if j < 0 or self._pos + j > self._ids.size:
            raise ValueError("consumed more draws than peeked")
        self._pos += j
        self.consumed += j


class SamplerHandle:
    """Seeded, single-threaded facade over one instance's two oracles.

    Identical seed and identical call sequence yield identical draw
    sequences.  Parallel trials should each own a handle seeded from a
    disjoint stream.
    """

    def __init__(self, instance: WeightedInstance, rng: np.random.Generator | int):
        self.instance = instance
        self.rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        lookup = lambda ids: instance.weights[ids]  # noqa: E731
        self.proportional = BlockSource(self._prop_block, lookup)
        self.uniform = BlockSource(self._unif_block, lookup)

    def _prop_block(self, size: int) -> np.ndarray:
        return self.instance.alias_table().draw_block(self.rng, size)

    def _unif_block(self, size: int) -> np.ndarray:
        return self.rng.integers(0, self.instance.n, size=size)

    @property
    def proportional_draws(self) -> int:
        return self.proportional.consumed

    @property
    def uniform_draws(self) -> int:
        return self.uniform.consumed

    def counters(self) -> tuple[int, int]:
        return (self.proportional.consumed, self.uniform.consumed)


def sample_proportional(handle: SamplerHandle) -> ItemDraw:
    """Draw one item with probability weight/total; never a zero weight."""
    return handle.proportional.take_one()


def sample_uniform(handle: SamplerHandle) -> ItemDraw:
    """Draw one item uniformly, zero-weight items included."""
    return handle.uniform.take_one()


class DrawBudget:
    """Shared cap on the number of draws a group of sources may consume."""

    def __init__(self, limit: int):
        if limit <= 0:
            raise ValueError("budget must be positive")
        self.limit = int(limit)
        self.used = 0

    @property
    def remaining(self) -> int:
        return self.limit - self.used


class BudgetedSource(DrawSource):
    """View of a source whose consumption is charged to a shared budget.

    A consume that would cross the limit commits only the remaining
    allowance (those draws really happened) and then raises, so the
    charged total never exceeds the limit.
    """

    def __init__(self, source: DrawSource, budget: DrawBudget):
        self._source = source
        self.budget = budget

    def peek(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        return self._source.peek(k)

    def consume(self, j: int) -> None:
        allowed = min(j, self.budget.remaining)
        if allowed > 0:
            self._source.consume(allowed)
            self.budget.used += allowed
        if allowed < j:
            raise DrawBudgetExceeded(f"draw budget of {self.budget.limit} exhausted")


class FilteredSource(DrawSource):
    """Draws from ``source`` restricted to items passing a weight predicate.

    Optionally thins the accepted items further with a per-item
    acceptance probability (rejection sampling).  Rejected draws are
    real draws: they are consumed from the underlying source, in order,
    as soon as the accepted draw after them is consumed; a run of
    rejections with nothing accepted yet is consumed eagerly so that
    budgets guard against empty filters.

    A filtered view must be the sole reader of its source while in use.
    """

    def __init__(
        self,
        source: DrawSource,
        keep: Callable[[np.ndarray], np.ndarray],
        accept_prob: Callable[[np.ndarray], np.ndarray] | None = None,
        rng: np.random.Generator | None = None,
        scan_chunk: int = 4096,
    ):
        if accept_prob is not None and rng is None:
            raise ValueError("rejection sampling needs an rng for acceptance coins")
        self._source = source
        self._keep = keep
        self._accept_prob = accept_prob
        self._rng = rng
        self._chunk = scan_chunk
        self._ids: list[int] = []
        self._ws: list[float] = []
        # underlying draws (rejections before it + itself) per window item
        self._cost: list[int] = []
        self._scanned = 0  # underlying draws decided but unconsumed
        self._trailing_rejects = 0  # decided rejections after the last window item

    def peek(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        while len(self._ids) < k:
            self._scan_more()
        return (
            np.asarray(self._ids[:k], dtype=np.int64),
            np.asarray(self._ws[:k], dtype=np.float64),
        )

    def _scan_more(self) -> None:
        lo = self._scanned
        ids, ws = self._source.peek(lo + self._chunk)
        tail_ids, tail_ws = ids[lo:], ws[lo:]
        mask = self._keep(tail_ws)
        if self._accept_prob is not None:
            hits = np.flatnonzero(mask)
            if hits.size:
                coins = self._rng.random(hits.size)
                mask = np.zeros(tail_ws.size, dtype=bool)
                mask[hits[coins <= self._accept_prob(tail_ws[hits])]] = True
        accepted = np.flatnonzero(mask)
        prev = -1
        for pos in accepted:
            self._ids.append(int(tail_ids[pos]))
            self._ws.append(float(tail_ws[pos]))
            self._cost.append(self._trailing_rejects + int(pos) - prev)
            self._trailing_rejects = 0
            prev = int(pos)
        self._trailing_rejects += tail_ws.size - 1 - prev
        self._scanned = lo + tail_ws.size
        if not self._ids:
            # nothing pending: the whole decided prefix is dead rejections
            self._source.consume(self._scanned)
            self._scanned = 0
            self._trailing_rejects = 0

    def consume(self, j: int) -> None:
        if j > len(self._ids):
            raise ValueError("consumed more draws than peeked")
        raw = sum(self._cost[:j])
        self._source.consume(raw)
        del self._ids[:j], self._ws[:j], self._cost[:j]
        self._scanned -= raw


def parse_instance_text(text: str) -> WeightedInstance:
    """Parse ``<id> <weight>`` lines; ``#`` lines are comments."""
    labels: list[str] = []
    weights: list[float] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise InstanceFormatError(f"line {lineno}: expected '<id> <weight>', got {raw!r}")
        try:
            w = float(parts[1])
        except ValueError as exc:
            raise InstanceFormatError(f"line {lineno}: bad weight {parts[1]!r}") from exc
        labels.append(parts[0])
        weights.append(w)
    if not labels:
        raise InstanceFormatError("no items in instance")
    if len(set(labels)) != len(labels):
        seen: set[str] = set()
        dup = next(x for x in labels if x in seen or seen.add(x))
        raise InstanceFormatError(f"duplicate item id {dup!r}")
    return WeightedInstance(weights, labels)


def load_instance(path: str | Path) -> WeightedInstance:
    """Load an instance from a UTF-8 text file of ``<id> <weight>`` lines."""
    return parse_instance_text(Path(path).read_text(encoding="utf-8"))
