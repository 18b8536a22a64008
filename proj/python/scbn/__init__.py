"""Scale-based normalization and exact testing for cross-species RNA-seq counts.

The heavy lifting lives in the compiled ``_scbn`` extension; this package re-exports it.
"""

from ._scbn import (
    DomainError,
    GridConfig,
    MedianFit,
    Metrics,
    ObjectiveValue,
    OrthologTable,
    ParseError,
    ScbnError,
    ScbnFit,
    SimConfig,
    SimulatedDataset,
    TestResult,
    ValidationError,
    analyze,
    bh_adjust,
    call_de,
    estimate_pfdr,
    evaluate_run,
    generate_dataset,
    median_scaling_factor,
    null_success_prob,
    scbn_scaling_factor,
    two_sided_exact_pvalue,
    type1_deviation,
)

__all__ = [
    "DomainError",
    "GridConfig",
    "MedianFit",
    "Metrics",
    "ObjectiveValue",
    "OrthologTable",
    "ParseError",
    "ScbnError",
    "ScbnFit",
    "SimConfig",
    "SimulatedDataset",
    "TestResult",
    "ValidationError",
    "analyze",
    "bh_adjust",
    "call_de",
    "estimate_pfdr",
    "evaluate_run",
    "generate_dataset",
    "median_scaling_factor",
    "null_success_prob",
    "scbn_scaling_factor",
    "two_sided_exact_pvalue",
    "type1_deviation",
]
