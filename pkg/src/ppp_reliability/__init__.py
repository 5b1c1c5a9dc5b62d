"""Reliability of purchasing power parities: bilateral indexes with standard
errors, GEKS variance, dissimilarity measures and resampling checks."""
from .bilateral import BILATERAL_METHODS, IndexEstimate, IndexUndefinedError, Method, compute_index
from .data import BilateralView, ComparisonDataset, DatasetError, bilateral_view, load_dataset
from .dissimilarity import MEASURES, MeasureOptions, axiom_check, dissimilarity_matrix, measure
from .geks import geks_fisher_gap_report, geks_indexes, geks_variance
from .resampling import BootstrapConfig, Statistic, bootstrap_se, coverage_experiment
from .variance import estimate, var_log_fisher

__version__ = "0.1.0"

__all__ = [
    "BILATERAL_METHODS", "BilateralView", "BootstrapConfig", "ComparisonDataset", "DatasetError",
    "IndexEstimate", "IndexUndefinedError", "MEASURES", "MeasureOptions", "Method", "Statistic",
    "axiom_check", "bilateral_view", "bootstrap_se", "compute_index", "coverage_experiment",
    "dissimilarity_matrix", "estimate", "geks_fisher_gap_report", "geks_indexes", "geks_variance",
    "load_dataset", "measure", "var_log_fisher",
]
