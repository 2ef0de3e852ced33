"""Exact, anytime Density Peaks clustering of time series under DTW.

Pairwise lower/upper bounds decide most density and nearest-neighbour
questions without computing the distance; the result is identical to
brute-force Density Peaks over the full matrix.
"""

from .core import (
    LabeledDataset,
    TimeSeries,
    generate_cbf,
    generate_random_walks,
    load_ucr,
    load_ucr_channels,
    smooth,
    znormalize,
)
from .density_peaks import ClusterModel, dp_cluster
from .engine import PruneStats, tadpole_cluster
from .evaluation import nmi, rand_index
from .measures import bound_matrices, dtw, edit_distance, euclidean
from .sequences import SequenceDataset, tadpole_cluster_sequences

__version__ = "0.1.0"

__all__ = [
    "ClusterModel",
    "LabeledDataset",
    "PruneStats",
    "SequenceDataset",
    "TimeSeries",
    "bound_matrices",
    "dp_cluster",
    "dtw",
    "edit_distance",
    "euclidean",
    "generate_cbf",
    "generate_random_walks",
    "load_ucr",
    "load_ucr_channels",
    "nmi",
    "rand_index",
    "smooth",
    "tadpole_cluster",
    "tadpole_cluster_sequences",
    "znormalize",
]
