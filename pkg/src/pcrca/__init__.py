"""Tight bounds on probabilities of causation in quasi-Markovian models, and
root-cause path ranking built on them."""

from .distribution import Dataset, JointTable, estimate_distribution
from .errors import PcrcaError
from .graph import CausalGraph, c_components
from .metrics import (
    MetricKind,
    ScalarizationKind,
    SolveOptions,
    bounds,
    evaluate_metric,
)
from .rca import RcaConfig, run_rca

__version__ = "0.1.0"

__all__ = [
    "CausalGraph",
    "Dataset",
    "JointTable",
    "MetricKind",
    "PcrcaError",
    "RcaConfig",
    "ScalarizationKind",
    "SolveOptions",
    "bounds",
    "c_components",
    "estimate_distribution",
    "evaluate_metric",
    "run_rca",
]
