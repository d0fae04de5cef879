"""Joint inference of claim truth and opinion sources on social graphs."""

from .bounds import BoundInputs, admissible_budget, bound_report, coverage_bounds
from .estimators import CredibilityReliabilityEM, SourceCR
from .framework import FrameworkConfig, FrameworkResult, run_sourcecr
from .graph import SocialGraph, generate_random_graph, read_edge_list
from .metrics import accuracy_of_credibility, error_of_reliability, source_detection_rate
from .opinions import OpinionMatrix
from .querying import detect_sources
from .spread import SpreadConfig, generate_dataset, simulate_joint_spread
from .training import train

__version__ = "0.1.0"

__all__ = [
    "BoundInputs",
    "CredibilityReliabilityEM",
    "FrameworkConfig",
    "FrameworkResult",
    "OpinionMatrix",
    "SocialGraph",
    "SourceCR",
    "SpreadConfig",
    "accuracy_of_credibility",
    "admissible_budget",
    "bound_report",
    "coverage_bounds",
    "detect_sources",
    "error_of_reliability",
    "generate_dataset",
    "generate_random_graph",
    "read_edge_list",
    "run_sourcecr",
    "simulate_joint_spread",
    "source_detection_rate",
    "train",
]
