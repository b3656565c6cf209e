"""Density-sensitive semisupervised kernel regression.

Unlabeled points give a kernel density estimate on a grid; shortest paths
weighted by ``phat**(-alpha)`` give a data-dependent metric; a boxcar kernel
regressor in that metric uses the labeled points; hold-out validation picks
``alpha`` and the bandwidth.
"""

from .adapt import CandidateGrid, SelectionReport, excess_risk, select, select_euclidean, split
from .core import (
    EstimatorSpec,
    Fallback,
    LabeledSet,
    ProblemClass,
    UnlabeledSet,
    load_dataset,
    save_dataset,
)
from .density import DensityModel, GridSpec, fit_kde, schedule, sup_error
from .geodesic import GeodesicGraph, build_graph, distance, distances_from, pairwise_distances
from .regress import EuclideanRegressor, FittedRegressor, fit, predict, predict_baseline
from .synth import make_lower_bound_instance, make_smooth_instance, make_uniform_components

__version__ = "0.1.0"

__all__ = [
    "CandidateGrid",
    "SelectionReport",
    "excess_risk",
    "select",
    "select_euclidean",
    "split",
    "EstimatorSpec",
    "Fallback",
    "LabeledSet",
    "ProblemClass",
    "UnlabeledSet",
    "load_dataset",
    "save_dataset",
    "DensityModel",
    "GridSpec",
    "fit_kde",
    "schedule",
    "sup_error",
    "GeodesicGraph",
    "build_graph",
    "distance",
    "distances_from",
    "pairwise_distances",
    "EuclideanRegressor",
    "FittedRegressor",
    "fit",
    "predict",
    "predict_baseline",
    "make_lower_bound_instance",
    "make_smooth_instance",
    "make_uniform_components",
]
