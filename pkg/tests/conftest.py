import numpy as np
import pytest
from scipy import stats

from subsum.core import DrawSource


class ScriptedSource(DrawSource):
    """Draws replayed from a fixed (id, weight) script, for exact tests."""

    def __init__(self, ids, weights, cycle=False):
        self._ids = np.asarray(ids, dtype=np.int64)
        self._ws = np.asarray(weights, dtype=np.float64)
        self._cycle = cycle
        self._pos = 0
        self.consumed = 0

    def peek(self, k):
        end = self._pos + k
        if end > self._ids.size:
            if not self._cycle:
                raise AssertionError("scripted source exhausted")
            reps = -(-end // self._ids.size)
            self._ids = np.tile(self._ids[: self._ids.size], reps)
            self._ws = np.tile(self._ws[: self._ws.size], reps)
        return self._ids[self._pos:end], self._ws[self._pos:end]

    def consume(self, j):
        self._pos += j
        self.consumed += j


def chi_square_pvalue(counts, probs):
    counts = np.asarray(counts, dtype=float)
    expected = np.asarray(probs, dtype=float) * counts.sum()
    return stats.chisquare(counts, expected).pvalue


def assert_chi_square(counts, probs, significance=1e-6):
    p = chi_square_pvalue(counts, probs)
    assert p > significance, f"chi-square rejected: p={p:g} counts={list(counts)}"


def tv_distance(empirical, truth):
    return 0.5 * float(np.abs(np.asarray(empirical) - np.asarray(truth)).sum())


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
