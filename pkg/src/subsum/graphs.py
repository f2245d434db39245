"""Average-degree and edge-count estimation from graph sampling queries.

The access model is three queries with exact counters: a uniformly
random vertex, a uniformly random edge, and the degree of a given
vertex.  Setting the universe to the vertices weighted by degree, a
random edge endpoint is a degree-proportional vertex draw, so the
harmonic-mean estimator applies; a geometric search over its advice
removes the need to know the average degree in advance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .amplify import median_of, repetitions_for
from .core import BlockSource, DrawSource
from .hybrid import HarmonicConfig, harmonic_estimate

# Per-copy failure for one harmonic run inside the search: 1/3 for the
# approximation guarantee plus 1/20 for the unconditional floor.
_PER_RUN_FAILURE = 1 / 3 + 1 / 20

_SEARCH_LIMIT = 64  # advice doublings; far beyond any realistic degree


class GraphFormatError(ValueError):
    """Raised when a graph file is malformed."""


class GraphOracle:
    """A simple undirected graph behind counted sampling queries."""

    def __init__(self, num_vertices: int, edges: np.ndarray):
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if num_vertices < 1:
            raise GraphFormatError("graph needs at least one vertex")
        if edges.size:
            if edges.min() < 0 or edges.max() >= num_vertices:
                raise GraphFormatError("edge endpoint out of range")
            if np.any(edges[:, 0] == edges[:, 1]):
                raise GraphFormatError("self-loop")
            canon = np.sort(edges, axis=1)
            if np.unique(canon, axis=0).shape[0] != edges.shape[0]:
                raise GraphFormatError("duplicate edge")
        self.num_vertices = int(num_vertices)
        self.edges = edges
        self.degrees = np.bincount(edges.ravel(), minlength=num_vertices).astype(np.float64)
        # endpoints flattened so one random index picks edge and side at once
        self._endpoints = edges.ravel()
        self.vertex_queries = 0
        self.edge_queries = 0
        self.degree_queries = 0

    @property
    def num_edges(self) -> int:
        return int(self.edges.shape[0])

    @property
    def average_degree(self) -> float:
        return 2.0 * self.num_edges / self.num_vertices

    @property
    def non_isolated(self) -> int:
        return int(np.count_nonzero(self.degrees))

    def degree(self, v: int) -> float:
        self.degree_queries += 1
        return float(self.degrees[v])

    def random_vertex(self, rng: np.random.Generator) -> int:
        self.vertex_queries += 1
        return int(rng.integers(0, self.num_vertices))

    def random_edge(self, rng: np.random.Generator) -> tuple[int, int]:
        if self.num_edges == 0:
            raise ValueError("random edge query on an edgeless graph")
        self.edge_queries += 1
        e = int(rng.integers(0, self.num_edges))
        return (int(self.edges[e, 0]), int(self.edges[e, 1]))

    def counters(self) -> tuple[int, int, int]:
        return (self.vertex_queries, self.edge_queries, self.degree_queries)


def parse_graph_text(text: str) -> GraphOracle:
    """Parse a header line ``n <count>`` followed by ``u v`` edge lines."""
    num_vertices: int | None = None
    edges: list[tuple[int, int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if num_vertices is None:
            if len(parts) != 2 or parts[0] != "n":
                raise GraphFormatError(f"line {lineno}: expected header 'n <count>'")
            try:
                num_vertices = int(parts[1])
            except ValueError as exc:
                raise GraphFormatError(f"line {lineno}: bad vertex count") from exc
            continue
        if len(parts) != 2:
            raise GraphFormatError(f"line {lineno}: expected 'u v', got {raw!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError as exc:
            raise GraphFormatError(f"line {lineno}: bad endpoint") from exc
        edges.append((u, v))
    if num_vertices is None:
        raise GraphFormatError("missing 'n <count>' header")
    return GraphOracle(num_vertices, np.asarray(edges, dtype=np.int64).reshape(-1, 2))


def load_graph(path: str | Path) -> GraphOracle:
    return parse_graph_text(Path(path).read_text(encoding="utf-8"))


class _QuerySource(BlockSource):
    """Block source that charges graph query counters on consumption.

    Presampled-but-unconsumed draws never count, matching the weighted
    oracles: the counters are exactly the queries performed.
    """

    def __init__(self, gen_block, lookup, on_consume):
        super().__init__(gen_block, lookup)
        self._on_consume = on_consume

    def consume(self, j: int) -> None:
        super().consume(j)
        self._on_consume(j)


class DegreeSampler:
    """Degree-weighted universe over a graph's vertices.

    A proportional draw is a random edge plus a random endpoint and
    costs one edge query and one degree query; a uniform draw is a
    random vertex and its degree, costing one vertex query and one
    degree query.
    """

    def __init__(self, graph: GraphOracle, rng: np.random.Generator):
        if graph.num_edges < 1:
            raise ValueError("degree-proportional sampling needs at least one edge")
        self.graph = graph
        self.rng = rng
        self.proportional: DrawSource = _QuerySource(
            self._prop_block, self._degrees_of, self._charge_prop
        )
        self.uniform: DrawSource = _QuerySource(
            self._unif_block, self._degrees_of, self._charge_unif
        )

    def _prop_block(self, size: int) -> np.ndarray:
        g = self.graph
        slots = self.rng.integers(0, 2 * g.num_edges, size=size)
        return g._endpoints[slots]

    def _unif_block(self, size: int) -> np.ndarray:
        return self.rng.integers(0, self.graph.num_vertices, size=size)

    def _degrees_of(self, ids: np.ndarray) -> np.ndarray:
        return self.graph.degrees[ids]

    def _charge_prop(self, j: int) -> None:
        self.graph.edge_queries += j
        self.graph.degree_queries += j

    def _charge_unif(self, j: int) -> None:
        self.graph.vertex_queries += j
        self.graph.degree_queries += j


def degree_sampler(graph: GraphOracle, rng: np.random.Generator) -> DegreeSampler:
    return DegreeSampler(graph, rng)


@dataclass(frozen=True)
class SearchIteration:
    """One advice level of the geometric search."""

    theta_tilde: float
    target_failure: float
    copies: int
    d_hat: float


@dataclass(frozen=True)
class DegreeSearchTrace:
    """Result of the average-degree search."""

    iterations: tuple[SearchIteration, ...]
    d_hat: float
    m_hat: float


def estimate_avg_degree(
    graph: GraphOracle,
    eps: float,
    rng: np.random.Generator,
) -> DegreeSearchTrace:
    """Estimate the average degree without advice.

    Doubles an advice value from one upward; at level ``j`` it runs
    enough independent harmonic-mean copies that their median fails
    with probability at most ``2 / (pi^2 j^2)`` (the levels' failures
    sum to 1/3), and stops as soon as the median drops to a twentieth
    of the advice, which certifies the advice as valid.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    sampler = DegreeSampler(graph, rng)
    iterations: list[SearchIteration] = []
    theta_tilde = 1.0
    for j in range(1, _SEARCH_LIMIT + 1):
        delta_j = 2.0 / (math.pi**2 * j * j)
        copies = repetitions_for(delta_j, _PER_RUN_FAILURE)
        cfg = HarmonicConfig(eps=eps, theta_tilde=theta_tilde, phi=1.0)
        values = [
            harmonic_estimate(sampler.proportional, sampler.uniform, cfg).theta_hat
            for _ in range(copies)
        ]
        d_hat = median_of(values)
        iterations.append(
            SearchIteration(
                theta_tilde=theta_tilde,
                target_failure=delta_j,
                copies=copies,
                d_hat=d_hat,
            )
        )
        if d_hat <= theta_tilde / 20:
            return DegreeSearchTrace(
                iterations=tuple(iterations),
                d_hat=d_hat,
                m_hat=d_hat * graph.num_vertices / 2,
            )
        theta_tilde *= 2
    raise RuntimeError("degree search did not settle within the doubling limit")
