"""Seeded instance and graph generators with exact ground truth.

Each generator kind builds a deterministic artifact from its parameters
and seed and reports the true value an estimator is judged against:
the exact weight total, or the exact edge count and average degree.
Includes the adversarial shapes used to stress the estimators: a point
mass over unit weights, and a two-level instance whose support is a
thin top slice of the universe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .core import WeightedInstance
from .graphs import GraphOracle

_WEIGHT_KINDS = {
    "uniform": ("n",),
    "point-mass": ("n", "heavy"),
    "two-level": ("n", "heavy_count", "heavy", "light"),
    "zipf": ("n", "alpha"),
    "dyadic": ("levels", "per_level"),
}
_GRAPH_KINDS = {
    "er-graph": ("n", "p"),
    "star": ("n",),
    "path": ("n",),
}


class GeneratorSpecError(ValueError):
    """Raised for unknown kinds or invalid generator parameters."""


@dataclass(frozen=True)
class GeneratorSpec:
    """A generator kind plus parameters, parseable from ``kind:k=v,...``."""

    kind: str
    params: tuple[tuple[str, float], ...] = ()
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in _WEIGHT_KINDS and self.kind not in _GRAPH_KINDS:
            raise GeneratorSpecError(f"unknown generator kind {self.kind!r}")
        required = (_WEIGHT_KINDS | _GRAPH_KINDS)[self.kind]
        names = [k for k, _ in self.params]
        if sorted(names) != sorted(required):
            raise GeneratorSpecError(
                f"{self.kind} needs parameters {required}, got {tuple(names)}"
            )

    @property
    def is_graph(self) -> bool:
        return self.kind in _GRAPH_KINDS

    def param(self, name: str) -> float:
        return dict(self.params)[name]

    def int_param(self, name: str) -> int:
        value = self.param(name)
        if value != int(value):
            raise GeneratorSpecError(f"{self.kind} parameter {name} must be an integer")
        return int(value)

    def with_params(self, **overrides: float) -> "GeneratorSpec":
        merged = dict(self.params) | overrides
        return GeneratorSpec(self.kind, tuple(sorted(merged.items())), self.seed)

    @classmethod
    def parse(cls, text: str, seed: int = 0) -> "GeneratorSpec":
        kind, _, rest = text.partition(":")
        kind = kind.strip()
        params: dict[str, float] = {}
        if rest.strip():
            for piece in rest.split(","):
                key, sep, value = piece.partition("=")
                if not sep:
                    raise GeneratorSpecError(f"bad parameter {piece!r} in spec {text!r}")
                try:
                    params[key.strip().replace("-", "_")] = float(value)
                except ValueError as exc:
                    raise GeneratorSpecError(f"bad value in {piece!r}") from exc
        return cls(kind, tuple(sorted(params.items())), seed)

    def __str__(self) -> str:
        inner = ",".join(f"{k}={v:g}" for k, v in self.params)
        return f"{self.kind}:{inner}" if inner else self.kind


@dataclass(frozen=True)
class GeneratedWeights:
    instance: WeightedInstance
    true_total: float
    n: int


@dataclass(frozen=True)
class GeneratedGraph:
    graph: GraphOracle
    true_avg_degree: float
    true_edges: int
    n: int


def _weight_vector(spec: GeneratorSpec) -> np.ndarray:
    kind = spec.kind
    if kind == "uniform":
        return np.ones(spec.int_param("n"))
    if kind == "point-mass":
        n = spec.int_param("n")
        w = np.ones(n)
        w[0] = spec.param("heavy")
        return w
    if kind == "two-level":
        n = spec.int_param("n")
        hc = spec.int_param("heavy_count")
        if not 1 <= hc <= n:
            raise GeneratorSpecError("heavy_count must lie in [1, n]")
        w = np.full(n, spec.param("light"))
        w[:hc] = spec.param("heavy")
        return w
    if kind == "zipf":
        n = spec.int_param("n")
        alpha = spec.param("alpha")
        return 1.0 / np.arange(1, n + 1, dtype=np.float64) ** alpha
    if kind == "dyadic":
        levels = spec.int_param("levels")
        per = spec.int_param("per_level")
        if levels < 1 or per < 1:
            raise GeneratorSpecError("dyadic needs levels >= 1 and per_level >= 1")
        return np.repeat(2.0 ** np.arange(levels), per)
    raise GeneratorSpecError(f"{kind} does not generate a weighted instance")


def generate_instance(spec: GeneratorSpec) -> GeneratedWeights:
    """Build a weighted instance and its exact total weight."""
    instance = WeightedInstance(_weight_vector(spec))
    return GeneratedWeights(instance=instance, true_total=instance.total_weight, n=instance.n)


def _edge_array(spec: GeneratorSpec) -> tuple[int, np.ndarray]:
    kind = spec.kind
    n = spec.int_param("n")
    if kind == "er-graph":
        p = spec.param("p")
        if not 0 <= p <= 1:
            raise GeneratorSpecError("edge probability must lie in [0, 1]")
        rng = np.random.default_rng(np.random.SeedSequence(spec.seed))
        iu, ju = np.triu_indices(n, k=1)
        mask = rng.random(iu.size) < p
        return n, np.column_stack([iu[mask], ju[mask]])
    if kind == "star":
        if n < 2:
            raise GeneratorSpecError("star needs at least two vertices")
        spokes = np.arange(1, n, dtype=np.int64)
        return n, np.column_stack([np.zeros(n - 1, dtype=np.int64), spokes])
    if kind == "path":
        if n < 2:
            raise GeneratorSpecError("path needs at least two vertices")
        left = np.arange(0, n - 1, dtype=np.int64)
        return n, np.column_stack([left, left + 1])
    raise GeneratorSpecError(f"{kind} does not generate a graph")


def generate_graph(spec: GeneratorSpec) -> GeneratedGraph:
    """Build a graph oracle and its exact edge count and average degree."""
    n, edges = _edge_array(spec)
    graph = GraphOracle(n, edges)
    return GeneratedGraph(
        graph=graph,
        true_avg_degree=graph.average_degree,
        true_edges=graph.num_edges,
        n=n,
    )


def generate(spec: GeneratorSpec) -> GeneratedWeights | GeneratedGraph:
    return generate_graph(spec) if spec.is_graph else generate_instance(spec)
