"""Brute-force Density Peaks clustering over a full distance matrix.

Ties are broken deterministically everywhere: in the density order the
smaller index ranks higher, nearest higher-density neighbours prefer the
smaller index, and so does center selection on equal gamma.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import LabeledDataset
from .measures import distance_matrix

__all__ = [
    "DensityProfile",
    "DeltaProfile",
    "ClusterModel",
    "local_density",
    "density_order",
    "delta_distances",
    "knee_k",
    "select_centers",
    "assign_clusters",
    "cluster_from_matrix",
    "dp_cluster",
]


@dataclass(frozen=True)
class DensityProfile:
    rho: np.ndarray
    order: np.ndarray

    @property
    def n(self) -> int:
        return self.rho.shape[0]

    @property
    def densest(self) -> int:
        return int(self.order[0])

    def ranks(self) -> np.ndarray:
        """Position of every object in the density order (0 = densest)."""
        rank = np.empty(self.n, dtype=np.int64)
        rank[self.order] = np.arange(self.n)
        return rank


@dataclass(frozen=True)
class DeltaProfile:
    delta: np.ndarray
    nn: np.ndarray  # -1 for the densest object


@dataclass(frozen=True)
class ClusterModel:
    centers: list[int]
    labels: np.ndarray
    rho: np.ndarray
    delta: np.ndarray
    nn: np.ndarray
    gamma: np.ndarray
    order: np.ndarray

    @property
    def k(self) -> int:
        return len(self.centers)


def density_order(rho: np.ndarray) -> np.ndarray:
    """Indices sorted by density descending, smaller index first on ties."""
    rho = np.asarray(rho)
    return np.lexsort((np.arange(rho.shape[0]), -rho)).astype(np.int64)


def _check_matrix(D: np.ndarray) -> np.ndarray:
    D = np.asarray(D, dtype=np.float64)
    if D.ndim != 2 or D.shape[0] != D.shape[1]:
        raise ValueError(f"distance matrix must be square, got shape {D.shape}")
    if np.any(D < 0):
        raise ValueError("distance matrix has negative entries")
    if not np.array_equal(D, D.T):
        raise ValueError("distance matrix is not symmetric")
    return D


def local_density(D: np.ndarray, dc: float) -> DensityProfile:
    """Count, per object, the other objects strictly closer than ``dc``."""
    D = _check_matrix(D)
    if not dc > 0:
        raise ValueError(f"dc must be positive, got {dc}")
    within = D < dc
    np.fill_diagonal(within, False)
    rho = within.sum(axis=1).astype(np.int64)
    return DensityProfile(rho, density_order(rho))


def delta_distances(D: np.ndarray, profile: DensityProfile) -> DeltaProfile:
    """Distance to the nearest strictly-higher-ranked object.

    The densest object has no such neighbour; its delta is the maximum of
    all other deltas.
    """
    D = np.asarray(D, dtype=np.float64)
    n = profile.n
    if n < 2:
        raise ValueError("need at least 2 objects")
    if D.shape != (n, n):
        raise ValueError(f"matrix shape {D.shape} does not match {n} objects")
    order = profile.order
    delta = np.zeros(n)
    nn = np.full(n, -1, dtype=np.int64)
    for p in range(1, n):
        i = order[p]
        higher = order[:p]
        dist = D[i, higher]
        best = dist.min()
        nn[i] = higher[dist == best].min()
        delta[i] = best
    delta[order[0]] = delta[order[1:]].max()
    return DeltaProfile(delta, nn)


def knee_k(gamma: np.ndarray) -> int:
    """Number of centers at the largest ratio between consecutive sorted gammas.

    A zero follower of a positive gamma counts as an infinite ratio; 0/0
    counts as no drop at all.
    """
    g = np.sort(np.asarray(gamma, dtype=np.float64))[::-1]
    if g.shape[0] < 2:
        return 1
    head, tail = g[:-1], g[1:]
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(tail > 0, head / np.where(tail > 0, tail, 1.0), np.where(head > 0, np.inf, 0.0))
    return int(np.argmax(ratio)) + 1


def select_centers(profile: DensityProfile, deltas: DeltaProfile, k: int | None = None) -> list[int]:
    """Indices of the ``k`` largest ``rho * delta`` (knee rule when ``k`` is None)."""
    n = profile.n
    gamma = profile.rho * deltas.delta
    if k is None:
        k = knee_k(gamma)
    if k <= 0 or k > n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")
    ranked = np.lexsort((np.arange(n), -gamma))
    return [int(c) for c in ranked[:k]]


def assign_clusters(centers: list[int], deltas: DeltaProfile, profile: DensityProfile) -> np.ndarray:
    """Label centers 1..k, then propagate labels down the density order.

    If the densest object is not among the centers it has no neighbour to
    inherit from and joins the first center's cluster.
    """
    if not centers:
        raise ValueError("need at least one center")
    labels = np.zeros(profile.n, dtype=np.int64)
    for c, center in enumerate(centers, start=1):
        labels[center] = c
    for i in profile.order:
        if labels[i] == 0:
            j = deltas.nn[i]
            labels[i] = labels[j] if j >= 0 else 1
    return labels


def cluster_from_matrix(D: np.ndarray, dc: float, k: int | None = None) -> ClusterModel:
    """Run the whole Density Peaks chain on a precomputed distance matrix."""
    profile = local_density(D, dc)
    deltas = delta_distances(D, profile)
    centers = select_centers(profile, deltas, k)
    labels = assign_clusters(centers, deltas, profile)
    return ClusterModel(
        centers=centers,
        labels=labels,
        rho=profile.rho,
        delta=deltas.delta,
        nn=deltas.nn,
        gamma=profile.rho * deltas.delta,
        order=profile.order,
    )


def dp_cluster(
    dataset: LabeledDataset,
    measure: str = "dtw",
    window_frac: float = 0.05,
    dc: float = 1.0,
    k: int | None = None,
    threads: int = 1,
) -> ClusterModel:
    """Density Peaks over the full exact distance matrix of ``dataset``."""
    if dataset.n < 2:
        raise ValueError("need at least 2 series")
    D = distance_matrix(dataset, measure, window_frac, threads=threads)
    return cluster_from_matrix(D, dc, k)
