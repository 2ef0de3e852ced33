"""Clustering metrics, oracle computation counts and ordering-baseline traces."""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .density_peaks import DeltaProfile, DensityProfile
from .engine import (
    AnytimeTrace,
    DeltaSearch,
    PruneStats,
    nn_upper_bounds,
    processing_order,
    pruned_local_density,
    resolve_dc,
)
from .measures import BoundMatrices, bound_matrices, distance_matrix, pair_distance_fn

__all__ = [
    "rand_index",
    "nmi",
    "oracle_computation_count",
    "OrderingKind",
    "OrderingTrace",
    "ordering_trace",
    "trace_from_bounds",
    "calls_to_reach",
    "write_trace_csv",
    "TRACE_HEADER",
]

TRACE_HEADER = ("exact_calls", "processed_count", "rand_index")


def _encode(labels) -> np.ndarray:
    _, codes = np.unique(np.asarray(labels), return_inverse=True)
    return codes.ravel()


def _check_labels(a, b) -> tuple[np.ndarray, np.ndarray]:
    a, b = _encode(a), _encode(b)
    if a.shape != b.shape:
        raise ValueError(f"labelings differ in length: {a.shape[0]} vs {b.shape[0]}")
    if a.shape[0] < 2:
        raise ValueError("need at least 2 objects")
    return a, b


def _contingency(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    table = np.zeros((a.max() + 1, b.max() + 1), dtype=np.int64)
    np.add.at(table, (a, b), 1)
    return table


def _pairs(x):
    return x * (x - 1) // 2


def rand_index(a, b) -> float:
    """Fraction of object pairs on which two labelings agree."""
    a, b = _check_labels(a, b)
    n = a.shape[0]
    table = _contingency(a, b)
    both = _pairs(table).sum()
    same_a = _pairs(table.sum(axis=1)).sum()
    same_b = _pairs(table.sum(axis=0)).sum()
    total = _pairs(n)
    agree = total + 2 * both - same_a - same_b
    return float(agree / total)


def _entropy(counts: np.ndarray, n: int) -> float:
    p = counts[counts > 0] / n
    return float(-(p * np.log(p)).sum())


def nmi(a, b) -> float:
    """Mutual information normalized by the arithmetic mean of the two entropies.

    Zero when either labeling has a single cluster.
    """
    a, b = _check_labels(a, b)
    n = a.shape[0]
    table = _contingency(a, b)
    ha = _entropy(table.sum(axis=1), n)
    hb = _entropy(table.sum(axis=0), n)
    if ha == 0.0 or hb == 0.0:
        return 0.0
    pij = table / n
    outer = np.outer(table.sum(axis=1), table.sum(axis=0)) / (n * n)
    nz = pij > 0
    mi = float((pij[nz] * np.log(pij[nz] / outer[nz])).sum())
    return float(min(1.0, max(0.0, mi / ((ha + hb) / 2))))


def oracle_computation_count(D: np.ndarray, dc: float, profile: DensityProfile, deltas: DeltaProfile) -> int:
    """Fewest exact distances any bound-based scheme must evaluate.

    Pairs closer than ``dc`` (they contribute to density) plus each
    object's true nearest higher-density link not already among them.
    """
    D = np.asarray(D)
    n = D.shape[0]
    iu, ju = np.triu_indices(n, k=1)
    close = D[iu, ju] < dc
    needed = {(int(i), int(j)) for i, j in zip(iu[close], ju[close])}
    for i in range(n):
        j = int(deltas.nn[i])
        if j >= 0:
            needed.add((min(i, j), max(i, j)))
    return len(needed)


class OrderingKind(enum.Enum):
    TADPOLE = "tadpole"
    RANDOM = "random"
    ORACLE = "oracle"


@dataclass
class OrderingTrace:
    trace: AnytimeTrace
    rand_index: list[float]
    stats: PruneStats
    setup_calls: int

    def rows(self) -> list[tuple[int, int, float]]:
        return [(s.exact_calls, s.processed, ri) for s, ri in zip(self.trace.snapshots, self.rand_index)]

    @property
    def final_rand_index(self) -> float:
        return self.rand_index[-1]


def trace_from_bounds(
    bounds: BoundMatrices,
    exact,
    dc: float,
    k: int | None,
    kind: OrderingKind | str,
    ground_truth=None,
    seed: int = 0,
    full_matrix: np.ndarray | None = None,
) -> OrderingTrace:
    """Run the pruned pipeline with the delta phase in a chosen order.

    Every snapshot is scored by Rand Index against ``ground_truth``. The
    oracle order needs ``ground_truth`` and previews each candidate with its
    true delta, which comes from ``full_matrix`` (computed if not given);
    that preview costs nothing in the reported call counts.
    """
    kind = OrderingKind(kind)
    if ground_truth is None:
        raise ValueError("ordering traces need ground-truth labels to score snapshots")
    profile, sparse, stats = pruned_local_density(bounds, exact, dc)
    ub = nn_upper_bounds(bounds, sparse, profile)
    search = DeltaSearch(bounds, exact, sparse, profile, ub, k=k, calls_before=stats.exact_calls)
    trace = AnytimeTrace()
    scores: list[float] = []

    def record():
        search.snapshot(trace)
        scores.append(rand_index(trace.last.labels, ground_truth))

    record()
    if kind is OrderingKind.ORACLE:
        if full_matrix is None:
            raise ValueError("oracle ordering needs the full exact distance matrix")
        rank = profile.ranks()
        remaining = sorted(int(i) for i in profile.order[1:])
        truth = {}
        for i in remaining:
            cands = profile.order[: rank[i]]
            dist = full_matrix[i, cands]
            best = dist.min()
            truth[i] = (float(best), int(cands[dist == best].min()))
        while remaining:
            best_i, best_score = remaining[0], -1.0
            for i in remaining:
                d, j = truth[i]
                score = rand_index(search.labels(override=(i, d, j)), ground_truth)
                if score > best_score:
                    best_i, best_score = i, score
            search.process(best_i)
            remaining.remove(best_i)
            record()
    else:
        if kind is OrderingKind.TADPOLE:
            order = processing_order(profile, ub)
        else:
            order = np.random.default_rng(seed).permutation(np.sort(profile.order[1:]))
        for i in order:
            search.process(int(i))
            record()
    trace.complete = True
    stats.phase2_pruned = search.pruned
    stats.phase2_computed = search.computed
    stats.phase2_reused = search.reused
    return OrderingTrace(trace, scores, stats, stats.case_d_computed)


def ordering_trace(
    dataset,
    window_frac: float,
    dc: float | None,
    k: int | None,
    kind: OrderingKind | str,
    ground_truth=None,
    seed: int = 0,
    *,
    dc_pct: float | None = None,
) -> OrderingTrace:
    """Anytime trace on a real-valued dataset under a given ordering.

    ``ground_truth`` defaults to the dataset's own labels.
    """
    if ground_truth is None:
        ground_truth = dataset.labels
    if ground_truth is None:
        raise ValueError("ordering traces need ground-truth labels")
    bounds = bound_matrices(dataset, window_frac)
    cutoff = resolve_dc(bounds, dc, dc_pct)
    exact = pair_distance_fn(dataset, "dtw", window_frac)
    full = distance_matrix(dataset, "dtw", window_frac) if OrderingKind(kind) is OrderingKind.ORACLE else None
    return trace_from_bounds(bounds, exact, cutoff, k, kind, ground_truth, seed=seed, full_matrix=full)


def calls_to_reach(result: OrderingTrace, target: float, since_setup: bool = True) -> int | None:
    """Exact calls spent when the trace first scores at least ``target``.

    With ``since_setup`` the density-phase calls are not counted. None if the
    target is never reached.
    """
    offset = result.setup_calls if since_setup else 0
    for snap, score in zip(result.trace.snapshots, result.rand_index):
        if score >= target:
            return snap.exact_calls - offset
    return None


def write_trace_csv(result: OrderingTrace, path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_HEADER)
        for calls, processed, ri in result.rows():
            w.writerow([calls, processed, f"{ri:.10g}"])
