"""Choosing the warping window and cutoff from warped copies of sampled series.

A random sample of the dataset is copied and each copy is lightly warped
in time. A copy should sit within ``dc`` of its own original (must-link)
and at least ``dc`` away from every other original (cannot-link). The
fraction of satisfied links scores a parameter value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import LabeledDataset, TimeSeries
from .measures import band_radius, _multidim_dtw

__all__ = [
    "make_warped_copy",
    "ConstraintSet",
    "build_constraint_set",
    "constraint_counts",
    "constraint_score",
    "SweepResult",
    "parameter_sweep",
]

MAX_WARP = 0.25


def _warp_knots(length: int, shift: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    # Knot spacing stays above 2 * shift, so the warped time axis is strictly increasing.
    last = length - 1
    n_inner = max(1, min(4, int(last // (2 * shift + 2)) - 1))
    knots = np.linspace(0.0, last, n_inner + 2)
    disp = rng.uniform(-shift, shift, n_inner)
    peak = int(rng.integers(n_inner))
    disp[peak] = shift if rng.random() < 0.5 else -shift
    # a single inner knot must keep its image inside the series
    room = np.minimum(knots[1:-1], last - knots[1:-1]) - 1.0
    disp = np.clip(disp, -room, room)
    return knots, np.concatenate([[0.0], disp, [0.0]])


def make_warped_copy(series: TimeSeries, warp_amount: float, seed: int = 0) -> TimeSeries:
    """Distort the time axis by a seeded piecewise-linear monotone map.

    The largest index displacement is ``floor(warp_amount * length)``; the
    result is resampled onto the original grid by linear interpolation.
    """
    if not 0.0 <= warp_amount <= MAX_WARP:
        raise ValueError(f"warp_amount must lie in [0, {MAX_WARP}], got {warp_amount}")
    if series.dims != 1:
        raise ValueError("warped copies are defined for single-channel series")
    length = series.length
    if length < 8:
        raise ValueError(f"series too short to warp (length {length} < 8)")
    shift = int(math.floor(warp_amount * length))
    if shift == 0:
        return series
    rng = np.random.default_rng(seed)
    knots, disp = _warp_knots(length, shift, rng)
    grid = np.arange(length, dtype=np.float64)
    source_time = grid + np.interp(grid, knots, disp)
    return TimeSeries(np.interp(source_time, grid, series.values[0]))


@dataclass(frozen=True)
class ConstraintSet:
    """Sampled originals and their warped copies.

    Copy ``c`` must link with original ``c`` and cannot link with every
    other original, giving ``m`` must-link and ``m*m - m`` cannot-link pairs.
    """

    originals: tuple[TimeSeries, ...]
    copies: tuple[TimeSeries, ...]
    indices: tuple[int, ...] = ()

    def __post_init__(self):
        if len(self.originals) != len(self.copies):
            raise ValueError("originals and copies differ in count")
        for o, c in zip(self.originals, self.copies):
            if o.values.shape != c.values.shape:
                raise ValueError("a copy changed the shape of its original")

    @property
    def size(self) -> int:
        return len(self.originals)

    @property
    def n_must(self) -> int:
        return self.size

    @property
    def n_cannot(self) -> int:
        return self.size * self.size - self.size

    def cross_distances(self, window_frac: float) -> np.ndarray:
        """``[r, c]`` = DTW between original ``r`` and copy ``c``."""
        m = self.size
        out = np.zeros((m, m))
        if m == 0:
            return out
        r = band_radius(window_frac, self.originals[0].length)
        for a, orig in enumerate(self.originals):
            for b, copy in enumerate(self.copies):
                out[a, b] = _multidim_dtw(orig.values, copy.values, r)
        return out


def build_constraint_set(
    dataset: LabeledDataset, sample_size: int | None = None, warp_amount: float = 0.1, seed: int = 0
) -> ConstraintSet:
    """Sample ``sample_size`` series (default ``min(30, n)``) and warp a copy of each."""
    n = dataset.n
    size = min(30, n) if sample_size is None else sample_size
    if not 1 <= size <= n:
        raise ValueError(f"sample_size must lie in [1, {n}], got {size}")
    rng = np.random.default_rng(seed)
    picks = np.sort(rng.choice(n, size=size, replace=False))
    child_seeds = np.random.SeedSequence(seed).spawn(size)
    originals = tuple(dataset.series[i] for i in picks)
    copies = tuple(
        make_warped_copy(s, warp_amount, int(cs.generate_state(1)[0])) for s, cs in zip(originals, child_seeds)
    )
    return ConstraintSet(originals, copies, tuple(int(i) for i in picks))


def _counts_from_cross(cross: np.ndarray, dc: float) -> tuple[int, int]:
    m = cross.shape[0]
    diag = np.eye(m, dtype=bool)
    must = int(np.count_nonzero(cross[diag] < dc))
    cannot = int(np.count_nonzero(cross[~diag] >= dc))
    return must, cannot


def constraint_counts(cs: ConstraintSet, window_frac: float, dc: float) -> tuple[int, int]:
    """Numbers of satisfied must-link and cannot-link pairs."""
    return _counts_from_cross(cs.cross_distances(window_frac), dc)


def _score(must: int, cannot: int, size: int) -> float:
    total = size * size
    return (must + cannot) / total if total else 0.0


def constraint_score(cs: ConstraintSet, window_frac: float, dc: float) -> float:
    """Fraction of all original/copy pairs whose link constraint holds."""
    must, cannot = constraint_counts(cs, window_frac, dc)
    return _score(must, cannot, cs.size)


@dataclass(frozen=True)
class SweepResult:
    param: str
    values: tuple[float, ...]
    scores: tuple[float, ...]
    must: tuple[int, ...]
    cannot: tuple[int, ...]

    @property
    def best(self) -> float:
        """Highest-scoring value; the smaller value wins a tie."""
        ranked = sorted(zip(self.values, self.scores), key=lambda vs: (-vs[1], vs[0]))
        return ranked[0][0]

    def curve(self) -> list[tuple[float, float]]:
        return list(zip(self.values, self.scores))


def parameter_sweep(
    dataset: LabeledDataset,
    param: str,
    values,
    fixed: float,
    sample_size: int | None = None,
    warp_amount: float = 0.1,
    seed: int = 0,
    constraints: ConstraintSet | None = None,
) -> SweepResult:
    """Score each value of ``param`` (``"window"`` or ``"dc"``) with the other held at ``fixed``."""
    values = [float(v) for v in values]
    if not values:
        raise ValueError("need at least one value to sweep")
    if param not in ("window", "dc"):
        raise ValueError(f"param must be 'window' or 'dc', got {param!r}")
    cs = constraints or build_constraint_set(dataset, sample_size, warp_amount, seed)
    must, cannot = [], []
    if param == "window":
        for w in values:
            m, c = _counts_from_cross(cs.cross_distances(w), fixed)
            must.append(m)
            cannot.append(c)
    else:
        cross = cs.cross_distances(fixed)
        for dc in values:
            m, c = _counts_from_cross(cross, dc)
            must.append(m)
            cannot.append(c)
    scores = tuple(_score(m, c, cs.size) for m, c in zip(must, cannot))
    return SweepResult(param, tuple(values), scores, tuple(must), tuple(cannot))
