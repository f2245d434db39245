"""Seeded Monte Carlo trial runner with exact query accounting.

Every trial owns a fresh sampler handle seeded from ``(master seed,
trial index)``, so a run is reproducible draw for draw regardless of
worker count, and the reported draw counts are the oracle counters
themselves.  Reports stream to CSV (written atomically) together with a
summary that an independent reader can recompute from the rows alone.
"""

from __future__ import annotations

import csv
import math
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .core import SamplerHandle, WeightedInstance
from .generators import GeneratedGraph, GeneratedWeights, GeneratorSpec, generate
from .graphs import GraphOracle, estimate_avg_degree
from .hybrid import (
    DEFAULT_ABORT_SCALE,
    HarmonicConfig,
    coupon_collect,
    harmonic_estimate,
    hybrid_estimate,
    no_advice_hybrid_estimate,
    set_size_estimate,
)
from .prop import no_advice_prop_estimate, prop_estimate

WEIGHT_ALGORITHMS = (
    "prop",
    "no-advice-prop",
    "hybrid",
    "no-advice-hybrid",
    "harmonic",
    "coupon",
    "set-size",
)
GRAPH_ALGORITHMS = ("graph-edges",)

CSV_FIELDS = (
    "algorithm",
    "n",
    "eps",
    "advice",
    "trial",
    "seed",
    "estimate",
    "true_value",
    "success",
    "aborted",
    "prop_draws",
    "unif_draws",
    "vertex_queries",
    "edge_queries",
    "degree_queries",
    "wall_time",
)


class BenchConfigError(ValueError):
    """Raised for inconsistent benchmark configurations."""


@dataclass(frozen=True)
class AdvicePolicy:
    """How per-trial advice is derived from the generator's ground truth."""

    kind: str  # "exact-n" | "inflated-n" | "none"
    factor: float = 1.0

    def __post_init__(self) -> None:
        if self.kind not in ("exact-n", "inflated-n", "none"):
            raise BenchConfigError(f"unknown advice policy {self.kind!r}")
        if self.kind == "inflated-n" and self.factor < 1:
            raise BenchConfigError("inflation factor must be at least 1")

    def resolve(self, exact: float) -> float | None:
        if self.kind == "none":
            return None
        if self.kind == "exact-n":
            return exact
        return self.factor * exact

    @classmethod
    def parse(cls, text: str) -> "AdvicePolicy":
        kind, _, factor = text.partition(":")
        if kind == "inflated-n":
            return cls(kind, float(factor) if factor else 2.0)
        return cls(kind)

    def __str__(self) -> str:
        if self.kind == "inflated-n":
            return f"inflated-n:{self.factor:g}"
        return self.kind


@dataclass(frozen=True)
class BenchConfig:
    """One benchmark cell: algorithm, instance family, accuracy, trials."""

    algorithm: str
    gen: GeneratorSpec
    eps: float
    trials: int
    master_seed: int = 0
    advice: AdvicePolicy = AdvicePolicy("none")
    parallel: int = 1
    abort_scale: float = DEFAULT_ABORT_SCALE
    phi: float | None = None  # harmonic clip threshold

    def __post_init__(self) -> None:
        known = WEIGHT_ALGORITHMS + GRAPH_ALGORITHMS
        if self.algorithm not in known:
            raise BenchConfigError(f"unknown algorithm {self.algorithm!r}")
        if self.gen.is_graph != (self.algorithm in GRAPH_ALGORITHMS):
            raise BenchConfigError(
                f"algorithm {self.algorithm!r} does not match generator {self.gen.kind!r}"
            )
        if self.trials < 0:
            raise BenchConfigError("trial count must be nonnegative")


@dataclass(frozen=True)
class TrialReport:
    """One CSV row; the success flag is derived, never free-standing."""

    algorithm: str
    n: int
    eps: float
    advice: float | None
    trial: int
    seed: int
    estimate: float
    true_value: float
    success: bool
    aborted: bool
    prop_draws: int
    unif_draws: int
    vertex_queries: int
    edge_queries: int
    degree_queries: int
    wall_time: float

    @property
    def total_draws(self) -> int:
        return self.prop_draws + self.unif_draws


def _trial_seed(master_seed: int, index: int) -> int:
    return int(np.random.SeedSequence((master_seed, index)).generate_state(1)[0])


def _trial_rng(master_seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence((master_seed, index)))


def trial_success(algorithm: str, estimate: float, true_value: float, eps: float, aborted: bool) -> bool:
    """Success flag: relative error within eps; exact match for coupon."""
    if aborted or not math.isfinite(estimate):
        return False
    if algorithm == "coupon":
        return estimate == true_value
    return abs(estimate - true_value) <= eps * true_value


# instance/graph cache; populated in the parent before workers fork
_GEN_CACHE: dict[GeneratorSpec, GeneratedWeights | GeneratedGraph] = {}


def _cached(spec: GeneratorSpec) -> GeneratedWeights | GeneratedGraph:
    hit = _GEN_CACHE.get(spec)
    if hit is None:
        hit = generate(spec)
        _GEN_CACHE[spec] = hit
    return hit


def run_weight_algorithm(
    algorithm: str,
    handle: SamplerHandle,
    eps: float,
    advice: float | None,
    phi: float | None,
    abort_scale: float,
) -> tuple[float, bool, dict]:
    """Run one estimator over a handle; returns (estimate, aborted, details)."""
    if algorithm == "prop":
        if advice is None:
            raise BenchConfigError("the collision estimator needs advice")
        return prop_estimate(handle.proportional, advice, eps), False, {}
    if algorithm == "no-advice-prop":
        b = no_advice_prop_estimate(handle.proportional, eps, handle.rng)
        return b.w_hat, False, {
            "bucket": b.bucket,
            "n_tilde_b": b.n_tilde_b,
            "w_hat_b": b.w_hat_b,
            "p_hat_b": b.p_hat_b,
        }
    if algorithm == "hybrid":
        trace = hybrid_estimate(
            handle.proportional, handle.uniform, handle.instance.n, eps, abort_scale
        )
        return trace.w_hat, trace.aborted, {"branch": trace.branch}
    if algorithm == "no-advice-hybrid":
        return no_advice_hybrid_estimate(handle.proportional, handle.uniform, eps), False, {}
    if algorithm == "harmonic":
        if advice is None or phi is None:
            raise BenchConfigError("the harmonic estimator needs advice and a clip threshold")
        trace = harmonic_estimate(
            handle.proportional, handle.uniform, HarmonicConfig(eps, advice, phi)
        )
        return trace.theta_hat, False, {"k": trace.k, "p_hat": trace.p_hat}
    if algorithm == "coupon":
        res = coupon_collect(handle.uniform)
        return res.total, False, {"recovered": len(res.items)}
    if algorithm == "set-size":
        res = set_size_estimate(handle.uniform)
        return float(res.n_hat), False, {"s_hat": res.s_hat}
    raise BenchConfigError(f"not a weighted-universe algorithm: {algorithm!r}")


def _exact_advice_base(algorithm: str, gen: GeneratedWeights) -> float:
    # advice is an upper bound on the quantity the estimator relies on
    if algorithm == "harmonic":
        return gen.true_total / gen.n
    return float(gen.n)


def _run_one(config: BenchConfig, index: int) -> TrialReport:
    return run_single(
        config.algorithm,
        _cached(config.gen),
        eps=config.eps,
        advice_policy=config.advice,
        phi=config.phi,
        abort_scale=config.abort_scale,
        master_seed=config.master_seed,
        index=index,
    )


def run_single(
    algorithm: str,
    produced: GeneratedWeights | GeneratedGraph,
    *,
    eps: float,
    advice_policy: AdvicePolicy,
    phi: float | None = None,
    abort_scale: float = DEFAULT_ABORT_SCALE,
    master_seed: int = 0,
    index: int = 0,
) -> TrialReport:
    """Run one seeded trial over an already-built instance or graph."""
    rng = _trial_rng(master_seed, index)
    start = time.perf_counter()

    if isinstance(produced, GeneratedGraph):
        g: GraphOracle = produced.graph
        v0, e0, d0 = g.counters()
        trace = estimate_avg_degree(g, eps, rng)
        wall = time.perf_counter() - start
        v1, e1, d1 = g.counters()
        estimate, aborted, advice = trace.d_hat, False, None
        true_value = produced.true_avg_degree
        prop_draws, unif_draws = e1 - e0, v1 - v0
        vq, eq, dq = v1 - v0, e1 - e0, d1 - d0
        n = produced.n
    else:
        advice = advice_policy.resolve(_exact_advice_base(algorithm, produced))
        if algorithm == "hybrid" and advice_policy.kind == "inflated-n":
            raise BenchConfigError("the hybrid estimator requires the exact universe size")
        handle = SamplerHandle(produced.instance, rng)
        estimate, aborted, _ = run_weight_algorithm(
            algorithm, handle, eps, advice, phi, abort_scale
        )
        wall = time.perf_counter() - start
        prop_draws, unif_draws = handle.counters()
        vq = eq = dq = 0
        n = produced.n
        true_value = float(n) if algorithm == "set-size" else produced.true_total
        if algorithm == "harmonic":
            true_value = produced.true_total / n

    return TrialReport(
        algorithm=algorithm,
        n=n,
        eps=eps,
        advice=advice,
        trial=index,
        seed=_trial_seed(master_seed, index),
        estimate=float(estimate),
        true_value=float(true_value),
        success=trial_success(algorithm, float(estimate), float(true_value), eps, aborted),
        aborted=aborted,
        prop_draws=prop_draws,
        unif_draws=unif_draws,
        vertex_queries=vq,
        edge_queries=eq,
        degree_queries=dq,
        wall_time=wall,
    )


def _run_chunk(config: BenchConfig, indices: Sequence[int]) -> list[TrialReport]:
    return [_run_one(config, i) for i in indices]


def run_trials(config: BenchConfig, csv_path: str | Path | None = None) -> tuple[list[TrialReport], dict]:
    """Run all trials of one cell, optionally writing the CSV and summary."""
    indices = list(range(config.trials))
    if config.parallel > 1 and config.trials > 1:
        _cached(config.gen)  # build once; forked workers inherit it
        chunks = [indices[i :: config.parallel] for i in range(config.parallel)]
        with ProcessPoolExecutor(max_workers=config.parallel) as pool:
            parts = pool.map(_run_chunk, [config] * len(chunks), chunks)
        reports = [r for part in parts for r in part]
        reports.sort(key=lambda r: r.trial)
    else:
        reports = _run_chunk(config, indices)
    summary = summarize(reports)
    summary["config"] = {
        "algorithm": config.algorithm,
        "gen": str(config.gen),
        "gen_seed": config.gen.seed,
        "eps": config.eps,
        "trials": config.trials,
        "master_seed": config.master_seed,
        "advice": str(config.advice),
        "abort_scale": config.abort_scale,
        "phi": config.phi,
    }
    if csv_path is not None:
        write_csv(reports, csv_path)
        write_summary(summary, Path(csv_path).with_suffix(".summary.json"))
    return reports, summary


def wilson_interval(successes: int, trials: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """95 percent score interval for a binomial proportion."""
    if trials == 0:
        return (0.0, 1.0)
    p = successes / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    margin = z * math.sqrt(p * (1.0 - p) / trials + z * z / (4.0 * trials * trials)) / denom
    return (max(center - margin, 0.0), min(center + margin, 1.0))


def percentile_linear(values: Sequence[float], q: float) -> float:
    """Linear-interpolation percentile over sorted order statistics."""
    if not values:
        return math.nan
    xs = sorted(values)
    h = (len(xs) - 1) * (q / 100.0)
    lo = math.floor(h)
    hi = min(lo + 1, len(xs) - 1)
    return xs[lo] + (h - lo) * (xs[hi] - xs[lo])


def summarize(reports: Sequence[TrialReport]) -> dict:
    """Aggregate statistics recomputable from the CSV rows alone."""
    trials = len(reports)
    failures = sum(0 if r.success else 1 for r in reports)
    aborts = sum(1 if r.aborted else 0 for r in reports)
    draws = [r.total_draws for r in reports]
    lo, hi = wilson_interval(failures, trials)
    return {
        "trials": trials,
        "failures": failures,
        "failure_rate": failures / trials if trials else math.nan,
        "failure_ci95_low": lo,
        "failure_ci95_high": hi,
        "aborts": aborts,
        "abort_rate": aborts / trials if trials else math.nan,
        "mean_draws": math.fsum(draws) / trials if trials else math.nan,
        "p95_draws": percentile_linear(draws, 95.0),
        "mean_wall_time": math.fsum(r.wall_time for r in reports) / trials if trials else math.nan,
    }


def _format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_csv(reports: Iterable[TrialReport], path: str | Path) -> None:
    """Write reports atomically (temp file then rename), header included."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_FIELDS)
            for r in reports:
                writer.writerow([_format_value(getattr(r, f)) for f in CSV_FIELDS])
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_csv(path: str | Path) -> list[TrialReport]:
    """Read reports back; floats round-trip bit-exactly at 17 digits."""
    out: list[TrialReport] = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(
                TrialReport(
                    algorithm=row["algorithm"],
                    n=int(row["n"]),
                    eps=float(row["eps"]),
                    advice=float(row["advice"]) if row["advice"] else None,
                    trial=int(row["trial"]),
                    seed=int(row["seed"]),
                    estimate=float(row["estimate"]),
                    true_value=float(row["true_value"]),
                    success=row["success"] == "1",
                    aborted=row["aborted"] == "1",
                    prop_draws=int(row["prop_draws"]),
                    unif_draws=int(row["unif_draws"]),
                    vertex_queries=int(row["vertex_queries"]),
                    edge_queries=int(row["edge_queries"]),
                    degree_queries=int(row["degree_queries"]),
                    wall_time=float(row["wall_time"]),
                )
            )
    return out


def write_summary(summary: dict, path: str | Path) -> None:
    import json

    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
