"""Largest-empty-hypersphere search for robust min-max problems."""

from .comparators import DescentParams, PsoParams, dd_restart_search, pso_search
from .core import EvaluationLedger, Exhausted, HighCostSet, Problem, RngStream
from .harness import ExperimentConfig, RunRecord, run_experiment, summarise, wilcoxon_rank_sum
from .inner_max import inner_maximise
from .kernels import BACKEND
from .leh import LehGaParams, SearchOutcome, leh_search, make_calculator
from .testbed import REGISTRY, make_problem, reference_worst_case

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "DescentParams",
    "EvaluationLedger",
    "Exhausted",
    "ExperimentConfig",
    "HighCostSet",
    "LehGaParams",
    "Problem",
    "PsoParams",
    "REGISTRY",
    "RngStream",
    "RunRecord",
    "SearchOutcome",
    "dd_restart_search",
    "inner_maximise",
    "leh_search",
    "make_calculator",
    "make_problem",
    "pso_search",
    "reference_worst_case",
    "run_experiment",
    "summarise",
    "wilcoxon_rank_sum",
]
