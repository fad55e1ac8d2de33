"""Maximin Kendall-distance order-of-addition designs and Mallows-kernel surrogates."""

__version__ = "0.1.0"

from .anneal import AnnealConfig, AnnealResult, odd_run_design, ordinary_sa, run_fsa_kd, srs_design
from .bo import run_bo
from .criteria import CriteriaSummary, bounds, c1_c2, evaluate, k_ave, k_m2, k_min, phi_lambda
from .estimators import FoldoverKendallDesign, MallowsGPRegressor
from .exceptions import (
    ConditioningError,
    ConstructionError,
    DesignFileError,
    DimensionError,
    DomainError,
    InvalidDesignError,
)
from .foldover import expand, is_foldover_design
from .permutations import distance_matrix, foldover, kendall_distance, pwo_vector
from .surrogate import expected_improvement, gp_fit, gp_predict, kernel_matrix, log_det, mallows_kernel
from .tsp import TspInstance, tsp_objective

__all__ = [
    "AnnealConfig",
    "AnnealResult",
    "ConditioningError",
    "ConstructionError",
    "CriteriaSummary",
    "DesignFileError",
    "DimensionError",
    "DomainError",
    "FoldoverKendallDesign",
    "InvalidDesignError",
    "MallowsGPRegressor",
    "TspInstance",
    "bounds",
    "c1_c2",
    "distance_matrix",
    "evaluate",
    "expand",
    "expected_improvement",
    "foldover",
    "gp_fit",
    "gp_predict",
    "is_foldover_design",
    "k_ave",
    "k_m2",
    "k_min",
    "kendall_distance",
    "kernel_matrix",
    "log_det",
    "mallows_kernel",
    "odd_run_design",
    "ordinary_sa",
    "phi_lambda",
    "pwo_vector",
    "run_bo",
    "run_fsa_kd",
    "srs_design",
    "tsp_objective",
]
