"""Parameter-free density-based fission clustering."""

from .core import (
    ClusterAssignment,
    Dataset,
    DatasetTooSmallError,
    DegenerateDataError,
    DistanceView,
    InvalidInputError,
    InvalidParameterError,
    SarfcError,
    pairwise_distances,
    rth_neighbor_distance,
)
from .data_io import generate_synthetic, load_csv, min_max_normalize, resolve, save_csv
from .density import diffusion_kde_1d, point_densities, sj_bandwidth
from .fission import mc_r, rfc, select_r
from .metrics import MetricsReport, accuracy, ari, f1_score, nmi
from .noise import identify_dense
from .pipeline import PipelineError, PipelineReport, assign_border, sarfc

__all__ = [
    "ClusterAssignment",
    "Dataset",
    "DatasetTooSmallError",
    "DegenerateDataError",
    "DistanceView",
    "InvalidInputError",
    "InvalidParameterError",
    "MetricsReport",
    "PipelineError",
    "PipelineReport",
    "SarfcError",
    "accuracy",
    "ari",
    "assign_border",
    "diffusion_kde_1d",
    "f1_score",
    "generate_synthetic",
    "identify_dense",
    "load_csv",
    "mc_r",
    "min_max_normalize",
    "nmi",
    "pairwise_distances",
    "point_densities",
    "resolve",
    "rfc",
    "rth_neighbor_distance",
    "sarfc",
    "save_csv",
    "select_r",
    "sj_bandwidth",
]
