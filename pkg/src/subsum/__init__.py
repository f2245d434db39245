"""Sublinear-sample sum estimation from sampling oracles.

Estimate the total weight of a hidden universe from proportional draws
(optionally combined with uniform draws), the universe's size, or a
graph's average degree, using far fewer draws than the universe has
items; plus a seeded Monte Carlo harness that checks every estimator's
guarantee statistically.
"""

from .amplify import (
    AmplifiedRun,
    BernoulliStream,
    amplified_run,
    bernoulli_estimate,
    median_amplify,
    repetitions_for,
)
from .core import (
    BudgetedSource,
    DrawBudget,
    DrawBudgetExceeded,
    DrawSource,
    FilteredSource,
    InstanceFormatError,
    ItemDraw,
    SamplerHandle,
    WeightedInstance,
    load_instance,
    parse_instance_text,
    sample_proportional,
    sample_uniform,
)
from .generators import GeneratorSpec, generate, generate_graph, generate_instance
from .graphs import (
    DegreeSampler,
    DegreeSearchTrace,
    GraphFormatError,
    GraphOracle,
    degree_sampler,
    estimate_avg_degree,
    load_graph,
    parse_graph_text,
)
from .hybrid import (
    CouponResult,
    HarmonicConfig,
    HarmonicTrace,
    HybridTrace,
    SetSizeResult,
    coupon_collect,
    find_threshold,
    harmonic_estimate,
    hybrid_estimate,
    no_advice_hybrid_estimate,
    set_size_estimate,
)
from .prop import (
    CollisionTally,
    NoAdviceBreakdown,
    bucket_index,
    collision_sum_estimate,
    no_advice_prop_estimate,
    prop_bucket_sample,
    prop_estimate,
    sample_count_for,
    unif_bucket_sample,
)

__all__ = [
    "AmplifiedRun",
    "BernoulliStream",
    "BudgetedSource",
    "CollisionTally",
    "CouponResult",
    "DegreeSampler",
    "DegreeSearchTrace",
    "DrawBudget",
    "DrawBudgetExceeded",
    "DrawSource",
    "FilteredSource",
    "GeneratorSpec",
    "GraphFormatError",
    "GraphOracle",
    "HarmonicConfig",
    "HarmonicTrace",
    "HybridTrace",
    "InstanceFormatError",
    "ItemDraw",
    "NoAdviceBreakdown",
    "SamplerHandle",
    "SetSizeResult",
    "WeightedInstance",
    "amplified_run",
    "bernoulli_estimate",
    "bucket_index",
    "collision_sum_estimate",
    "coupon_collect",
    "degree_sampler",
    "estimate_avg_degree",
    "find_threshold",
    "generate",
    "generate_graph",
    "generate_instance",
    "harmonic_estimate",
    "hybrid_estimate",
    "load_graph",
    "load_instance",
    "median_amplify",
    "no_advice_hybrid_estimate",
    "no_advice_prop_estimate",
    "parse_graph_text",
    "parse_instance_text",
    "prop_bucket_sample",
    "prop_estimate",
    "repetitions_for",
    "sample_count_for",
    "sample_proportional",
    "sample_uniform",
    "set_size_estimate",
    "unif_bucket_sample",
]

__version__ = "0.1.0"
