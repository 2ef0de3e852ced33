"""Pruned, anytime Density Peaks clustering driven by admissible distance bounds.

The engine never looks at the data directly. It takes a pair of bound
matrices and an ``exact(i, j)`` callable, so any measure with admissible
lower/upper bounds plugs in (DTW, multichannel DTW, edit distance).

Two phases:

* density: each pair is classified against ``dc`` by its bounds and only
  undecidable pairs are computed exactly;
* nearest higher-density neighbour: an upper bound ``ub_i`` on every
  object's delta is taken from known distances and the upper-bound matrix,
  then candidates whose lower bound exceeds ``ub_i`` are skipped.

With an unbounded budget the output equals brute-force Density Peaks over
the full exact matrix.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable

import numpy as np

from .core import LabeledDataset, percentile_cutoff
from .density_peaks import (
    ClusterModel,
    DeltaProfile,
    DensityProfile,
    assign_clusters,
    density_order,
    select_centers,
)
from .measures import BoundMatrices, bound_matrices, pair_distance_fn

__all__ = [
    "PruneCase",
    "classify_pair",
    "SparseDistanceMatrix",
    "PruneStats",
    "UpperBoundVector",
    "Snapshot",
    "AnytimeTrace",
    "resolve_dc",
    "pruned_local_density",
    "nn_upper_bounds",
    "processing_order",
    "DeltaSearch",
    "pruned_delta",
    "run_tadpole",
    "tadpole_cluster",
]

ExactFn = Callable[[int, int], float]


class PruneCase(enum.Enum):
    IDENTICAL = "A"
    WITHIN_CUTOFF = "B"
    OUTSIDE_CUTOFF = "C"
    UNKNOWN = "D"


def classify_pair(lb: float, ub: float, dc: float) -> PruneCase:
    """Decide what the bounds of one pair say about its relation to ``dc``.

    All comparisons are strict, so a bound sitting exactly on ``dc`` leaves
    the pair undecided.
    """
    if lb > ub:
        raise ValueError(f"lower bound {lb} exceeds upper bound {ub}")
    if lb == ub:
        return PruneCase.IDENTICAL
    if ub < dc:
        return PruneCase.WITHIN_CUTOFF
    if lb > dc:
        return PruneCase.OUTSIDE_CUTOFF
    return PruneCase.UNKNOWN


class SparseDistanceMatrix:
    """Symmetric store of the exact distances computed so far."""

    def __init__(self, n: int):
        self.n = n
        self._values = np.full((n, n), np.nan)

    def __contains__(self, pair) -> bool:
        i, j = pair
        return not np.isnan(self._values[i, j])

    def get(self, i: int, j: int, default: float | None = None) -> float | None:
        v = self._values[i, j]
        return default if np.isnan(v) else float(v)

    def set(self, i: int, j: int, value: float) -> None:
        self._values[i, j] = value
        self._values[j, i] = value

    def known_mask(self) -> np.ndarray:
        return ~np.isnan(self._values)

    def values(self) -> np.ndarray:
        """Dense view with NaN for pairs never computed."""
        return self._values

    def __len__(self) -> int:
        return int(np.count_nonzero(np.triu(self.known_mask(), k=1)))

    def items(self) -> Iterable[tuple[tuple[int, int], float]]:
        iu, ju = np.nonzero(np.triu(self.known_mask(), k=1))
        for i, j in zip(iu.tolist(), ju.tolist()):
            yield (i, j), float(self._values[i, j])


@dataclass
class PruneStats:
    total_pairs: int = 0
    case_a: int = 0
    case_b: int = 0
    case_c: int = 0
    case_d_computed: int = 0
    phase2_pruned: int = 0
    phase2_computed: int = 0
    phase2_reused: int = 0

    @property
    def exact_calls(self) -> int:
        return self.case_d_computed + self.phase2_computed

    def as_dict(self) -> dict:
        out = asdict(self)
        out["exact_calls"] = self.exact_calls
        return out


@dataclass(frozen=True)
class UpperBoundVector:
    """Per-object upper bound on delta and the candidate that achieves it."""

    values: np.ndarray  # +inf for the densest object
    source: np.ndarray  # -1 for the densest object


@dataclass(frozen=True)
class Snapshot:
    exact_calls: int
    labels: np.ndarray
    processed: int


@dataclass
class AnytimeTrace:
    snapshots: list[Snapshot] = field(default_factory=list)
    complete: bool = False

    def append(self, exact_calls: int, labels: np.ndarray, processed: int) -> None:
        self.snapshots.append(Snapshot(int(exact_calls), np.array(labels, copy=True), int(processed)))

    def __len__(self) -> int:
        return len(self.snapshots)

    def __iter__(self):
        return iter(self.snapshots)

    @property
    def last(self) -> Snapshot:
        return self.snapshots[-1]


def resolve_dc(bounds: BoundMatrices, dc: float | None = None, dc_pct: float | None = None) -> float:
    """Absolute cutoff, or the ``dc_pct`` percentile of off-diagonal upper bounds.

    Exactly one of ``dc`` and ``dc_pct`` may be given; neither means 2%.
    """
    if dc is not None and dc_pct is not None:
        raise ValueError("give either dc or dc_pct, not both")
    if dc is not None:
        if not dc > 0:
            raise ValueError(f"dc must be positive, got {dc}")
        return float(dc)
    value = percentile_cutoff(bounds.upper_triangle("ub"), 2.0 if dc_pct is None else dc_pct)
    if not value > 0:
        raise ValueError(f"percentile cutoff is {value}; choose a larger percentile or an absolute dc")
    return value


def pruned_local_density(
    bounds: BoundMatrices, exact: ExactFn, dc: float, threads: int = 1
) -> tuple[DensityProfile, SparseDistanceMatrix, PruneStats]:
    """Local densities computing only the pairs the bounds cannot decide.

    Identical-bound pairs use the upper bound as their known distance.
    """
    if not dc > 0:
        raise ValueError(f"dc must be positive, got {dc}")
    n = bounds.n
    iu, ju = np.triu_indices(n, k=1)
    lb = bounds.lb[iu, ju]
    ub = bounds.ub[iu, ju]
    if np.any(lb > ub):
        bad = int(np.argmax(lb > ub))
        raise ValueError(f"lower bound exceeds upper bound for pair ({iu[bad]}, {ju[bad]})")
    case_a = lb == ub
    case_b = ~case_a & (ub < dc)
    case_c = ~case_a & ~case_b & (lb > dc)
    case_d = ~(case_a | case_b | case_c)

    sparse = SparseDistanceMatrix(n)
    di, dj = iu[case_d], ju[case_d]
    if threads > 1 and di.size:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            values = np.fromiter(pool.map(exact, di.tolist(), dj.tolist()), dtype=np.float64, count=di.size)
    else:
        values = np.fromiter((exact(i, j) for i, j in zip(di.tolist(), dj.tolist())), dtype=np.float64, count=di.size)
    for i, j, v in zip(di.tolist(), dj.tolist(), values.tolist()):
        sparse.set(i, j, v)

    within = case_b | (case_a & (ub < dc))
    within[case_d] = values < dc
    rho = np.zeros(n, dtype=np.int64)
    np.add.at(rho, iu[within], 1)
    np.add.at(rho, ju[within], 1)

    stats = PruneStats(
        total_pairs=int(iu.size),
        case_a=int(case_a.sum()),
        case_b=int(case_b.sum()),
        case_c=int(case_c.sum()),
        case_d_computed=int(case_d.sum()),
    )
    return DensityProfile(rho, density_order(rho)), sparse, stats


def _known_or_bound(bounds: BoundMatrices, sparse: SparseDistanceMatrix, i: int, cands: np.ndarray) -> np.ndarray:
    known = sparse.values()[i, cands]
    return np.where(np.isnan(known), bounds.ub[i, cands], known)


def nn_upper_bounds(bounds: BoundMatrices, sparse: SparseDistanceMatrix, profile: DensityProfile) -> UpperBoundVector:
    """Tightest known upper bound on each object's delta.

    For every candidate in the higher-density list the exact distance is
    used when known, the upper-bound entry otherwise.
    """
    n = profile.n
    values = np.full(n, np.inf)
    source = np.full(n, -1, dtype=np.int64)
    order = profile.order
    for p in range(1, n):
        i = order[p]
        cands = order[:p]
        vals = _known_or_bound(bounds, sparse, i, cands)
        best = vals.min()
        values[i] = best
        source[i] = cands[vals == best].min()
    return UpperBoundVector(values, source)


def processing_order(profile: DensityProfile, ub: UpperBoundVector) -> np.ndarray:
    """Non-densest objects by ``rho * ub`` descending, smaller index first on ties."""
    rest = np.sort(profile.order[1:])
    keys = profile.rho[rest] * ub.values[rest]
    if not np.all(np.isfinite(keys)):
        raise ValueError("upper bounds must be finite for every non-densest object")
    return rest[np.lexsort((rest, -keys))]


class BudgetExhausted(Exception):
    pass


class DeltaSearch:
    """Mutable state of the nearest higher-density neighbour search.

    Unprocessed objects carry their upper bound and its source as a
    stand-in for delta and nn, so interim labels are available at any
    point.
    """

    def __init__(
        self,
        bounds: BoundMatrices,
        exact: ExactFn,
        sparse: SparseDistanceMatrix,
        profile: DensityProfile,
        ub: UpperBoundVector,
        k: int | None = None,
        budget: int | None = None,
        calls_before: int = 0,
    ):
        if budget is not None and budget < 0:
            raise ValueError(f"budget must be non-negative, got {budget}")
        self.bounds = bounds
        self.exact = exact
        self.sparse = sparse
        self.profile = profile
        self.ub = ub
        self.k = k
        self.budget = budget
        self.calls_before = calls_before
        self.rank = profile.ranks()
        self.delta = ub.values.copy()
        self.nn = ub.source.copy()
        self.processed = np.zeros(profile.n, dtype=bool)
        self.processed[profile.densest] = True
        self.n_processed = 0
        self.pruned = 0
        self.computed = 0
        self.reused = 0

    @property
    def total_calls(self) -> int:
        return self.calls_before + self.computed

    def _distance(self, i: int, j: int) -> float:
        known = self.sparse.get(i, j)
        if known is not None:
            self.reused += 1
            return known
        if self.bounds.lb[i, j] == self.bounds.ub[i, j]:
            self.reused += 1
            return float(self.bounds.ub[i, j])
        if self.budget is not None and self.computed >= self.budget:
            raise BudgetExhausted
        v = self.exact(i, j)
        self.sparse.set(i, j, v)
        self.computed += 1
        return v

    def process(self, i: int) -> bool:
        """Find the exact delta of ``i``; False when the budget ran out first."""
        if self.processed[i]:
            return True
        cands = self.profile.order[: self.rank[i]]
        ub_i = self.ub.values[i]
        keep = (self.bounds.lb[i, cands] <= ub_i) | (cands == self.ub.source[i])
        pruned = int(cands.size - keep.sum())
        best, best_j = np.inf, -1
        try:
            for j in cands[keep].tolist():
                d = self._distance(i, j)
                if d < best or (d == best and j < best_j):
                    best, best_j = d, j
        except BudgetExhausted:
            return False
        self.pruned += pruned
        self.delta[i] = best
        self.nn[i] = best_j
        self.processed[i] = True
        self.n_processed += 1
        return True

    def current_deltas(self, override: tuple[int, float, int] | None = None) -> DeltaProfile:
        delta = self.delta.copy()
        nn = self.nn.copy()
        if override is not None:
            i, d, j = override
            delta[i], nn[i] = d, j
        top = self.profile.densest
        others = np.ones(self.profile.n, dtype=bool)
        others[top] = False
        delta[top] = delta[others].max()
        nn[top] = -1
        return DeltaProfile(delta, nn)

    def labels(self, override: tuple[int, float, int] | None = None) -> np.ndarray:
        deltas = self.current_deltas(override)
        centers = select_centers(self.profile, deltas, self.k)
        return assign_clusters(centers, deltas, self.profile)

    def model(self) -> ClusterModel:
        deltas = self.current_deltas()
        centers = select_centers(self.profile, deltas, self.k)
        labels = assign_clusters(centers, deltas, self.profile)
        return ClusterModel(
            centers=centers,
            labels=labels,
            rho=self.profile.rho,
            delta=deltas.delta,
            nn=deltas.nn,
            gamma=self.profile.rho * deltas.delta,
            order=self.profile.order,
        )

    def snapshot(self, trace: AnytimeTrace) -> None:
        trace.append(self.total_calls, self.labels(), self.n_processed)


def pruned_delta(
    bounds: BoundMatrices,
    exact: ExactFn,
    sparse: SparseDistanceMatrix,
    profile: DensityProfile,
    ub: UpperBoundVector,
    order: np.ndarray,
    budget: int | None = None,
    k: int | None = None,
    trace: AnytimeTrace | None = None,
    stop: Callable[[], bool] | None = None,
    calls_before: int = 0,
) -> tuple[DeltaProfile, DeltaSearch, AnytimeTrace]:
    """Exact deltas for objects in ``order``, skipping candidates the bounds rule out.

    ``budget`` caps the number of new exact calls; ``stop`` is polled before
    each object. Either ending early leaves a valid anytime result whose
    unprocessed deltas are their upper bounds. A snapshot is recorded before
    the first object and after every processed one.
    """
    trace = trace if trace is not None else AnytimeTrace()
    search = DeltaSearch(bounds, exact, sparse, profile, ub, k=k, budget=budget, calls_before=calls_before)
    search.snapshot(trace)
    complete = True
    for i in order:
        if stop is not None and stop():
            complete = False
            break
        if not search.process(int(i)):
            complete = False
            break
        search.snapshot(trace)
    trace.complete = complete
    return search.current_deltas(), search, trace


@dataclass
class TadpoleResult:
    model: ClusterModel
    stats: PruneStats
    trace: AnytimeTrace
    dc: float
    bounds: BoundMatrices
    sparse: SparseDistanceMatrix

    @property
    def interrupted(self) -> bool:
        return not self.trace.complete

    def __iter__(self):
        # unpacks as (model, stats, trace)
        return iter((self.model, self.stats, self.trace))


def run_tadpole(
    bounds: BoundMatrices,
    exact: ExactFn,
    dc: float,
    k: int | None = None,
    budget: int | None = None,
    order: np.ndarray | Callable[[DensityProfile, UpperBoundVector], np.ndarray] | None = None,
    stop: Callable[[], bool] | None = None,
    threads: int = 1,
) -> TadpoleResult:
    """Measure-agnostic pipeline: density pruning, delta bounds, pruned delta search, DP.

    ``order`` replaces the default ``rho * ub`` processing order, either as a
    fixed permutation or as a function of the density profile and bounds.
    """
    if bounds.n < 2:
        raise ValueError("need at least 2 objects")
    profile, sparse, stats = pruned_local_density(bounds, exact, dc, threads=threads)
    ub = nn_upper_bounds(bounds, sparse, profile)
    if order is None:
        seq = processing_order(profile, ub)
    elif callable(order):
        seq = np.asarray(order(profile, ub), dtype=np.int64)
    else:
        seq = np.asarray(order, dtype=np.int64)
    _, search, trace = pruned_delta(
        bounds, exact, sparse, profile, ub, seq,
        budget=budget, k=k, stop=stop, calls_before=stats.exact_calls,
    )
    stats.phase2_pruned = search.pruned
    stats.phase2_computed = search.computed
    stats.phase2_reused = search.reused
    return TadpoleResult(search.model(), stats, trace, dc, bounds, sparse)


def tadpole_cluster(
    dataset: LabeledDataset,
    window_frac: float = 0.05,
    dc: float | None = None,
    k: int | None = None,
    budget: int | None = None,
    *,
    dc_pct: float | None = None,
    order=None,
    stop: Callable[[], bool] | None = None,
    threads: int = 1,
) -> TadpoleResult:
    """Cluster a real-valued dataset under (per-channel summed) DTW.

    Returns a :class:`TadpoleResult`, which also unpacks as
    ``(model, stats, trace)``.
    """
    if dataset.n < 2:
        raise ValueError("need at least 2 series")
    bounds = bound_matrices(dataset, window_frac, threads=threads)
    cutoff = resolve_dc(bounds, dc, dc_pct)
    exact = pair_distance_fn(dataset, "dtw", window_frac)
    return run_tadpole(bounds, exact, cutoff, k=k, budget=budget, order=order, stop=stop, threads=threads)
