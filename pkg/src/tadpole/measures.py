"""Distance measures and admissible bound providers.

DTW here uses squared per-cell cost and a final square root, so a zero-width
band reproduces the Euclidean distance bit for bit. Every accumulation runs
sequentially in index order for the same reason: the engine relies on
``lb <= dtw <= euclidean`` holding in floating point, not only on paper.
"""

from __future__ import annotations

import math
import string
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numba import njit

from .core import LabeledDataset, TimeSeries

__all__ = [
    "Envelope",
    "BoundMatrices",
    "DiscreteSequence",
    "band_radius",
    "euclidean",
    "dtw",
    "envelope",
    "lb_keogh",
    "lb_symmetric",
    "bound_matrices",
    "multidim_distance",
    "distance_matrix",
    "edit_distance",
    "edit_bounds",
]


def band_radius(window_frac: float, length: int) -> int:
    """Sakoe-Chiba radius in samples for a window given as a fraction of ``length``."""
    if not 0.0 <= window_frac <= 1.0:
        raise ValueError(f"window_frac must lie in [0, 1], got {window_frac}")
    return int(math.floor(window_frac * length))


# --- numba kernels ---------------------------------------------------------


@njit(cache=True, nogil=True)
def _sq_euclid(a, b):
    s = 0.0
    for i in range(a.shape[0]):
        d = a[i] - b[i]
        s += d * d
    return s


@njit(cache=True, nogil=True)
def _dtw_sq(a, b, r):
    n = a.shape[0]
    inf = np.inf
    prev = np.full(n, inf)
    cur = np.full(n, inf)
    for i in range(n):
        lo = max(0, i - r)
        hi = min(n - 1, i + r)
        if lo > 0:
            cur[lo - 1] = inf
        for j in range(lo, hi + 1):
            d = a[i] - b[j]
            cost = d * d
            if i == 0 and j == 0:
                cur[j] = cost
                continue
            best = inf
            if i > 0:
                if prev[j] < best:
                    best = prev[j]
                if j > 0 and prev[j - 1] < best:
                    best = prev[j - 1]
            if j > 0 and cur[j - 1] < best:
                best = cur[j - 1]
            cur[j] = cost + best
        prev, cur = cur, prev
    return prev[n - 1]


@njit(cache=True, nogil=True)
def _envelope(x, r):
    n = x.shape[0]
    upper = np.empty(n)
    lower = np.empty(n)
    for i in range(n):
        lo = max(0, i - r)
        hi = min(n - 1, i + r)
        mx = x[lo]
        mn = x[lo]
        for j in range(lo + 1, hi + 1):
            if x[j] > mx:
                mx = x[j]
            if x[j] < mn:
                mn = x[j]
        upper[i] = mx
        lower[i] = mn
    return upper, lower


@njit(cache=True, nogil=True)
def _lb_keogh_sq(a, upper, lower):
    s = 0.0
    for i in range(a.shape[0]):
        if a[i] > upper[i]:
            d = a[i] - upper[i]
            s += d * d
        elif a[i] < lower[i]:
            d = a[i] - lower[i]
            s += d * d
    return s


@njit(cache=True, nogil=True)
def _multidim_dtw(xa, xb, r):
    # xa, xb: (dims, length); channels summed in index order
    total = 0.0
    for d in range(xa.shape[0]):
        total += math.sqrt(_dtw_sq(xa[d], xb[d], r))
    return total


@njit(cache=True, nogil=True)
def _multidim_euclid(xa, xb):
    total = 0.0
    for d in range(xa.shape[0]):
        total += math.sqrt(_sq_euclid(xa[d], xb[d]))
    return total


@njit(cache=True, nogil=True)
def _bound_rows(X, U, L, rows, lb, ub):
    # X, U, L: (n, dims, length); fills rows of the upper triangle
    n = X.shape[0]
    dims = X.shape[1]
    for i in rows:
        for j in range(i + 1, n):
            lsum = 0.0
            usum = 0.0
            for d in range(dims):
                u = math.sqrt(_sq_euclid(X[i, d], X[j, d]))
                l1 = _lb_keogh_sq(X[i, d], U[j, d], L[j, d])
                l2 = _lb_keogh_sq(X[j, d], U[i, d], L[i, d])
                usum += u
                lsum += math.sqrt(max(l1, l2))
            lb[i, j] = lsum
            lb[j, i] = lsum
            ub[i, j] = usum
            ub[j, i] = usum


@njit(cache=True, nogil=True)
def _distance_rows(X, r, use_dtw, rows, out):
    n = X.shape[0]
    for i in rows:
        for j in range(i + 1, n):
            if use_dtw:
                v = _multidim_dtw(X[i], X[j], r)
            else:
                v = _multidim_euclid(X[i], X[j])
            out[i, j] = v
            out[j, i] = v


@njit(cache=True, nogil=True)
def _levenshtein(s, t):
    m = s.shape[0]
    n = t.shape[0]
    prev = np.arange(n + 1)
    cur = np.empty(n + 1, dtype=prev.dtype)
    for i in range(1, m + 1):
        cur[0] = i
        for j in range(1, n + 1):
            sub = prev[j - 1] + (0 if s[i - 1] == t[j - 1] else 1)
            dele = prev[j] + 1
            ins = cur[j - 1] + 1
            best = sub
            if dele < best:
                best = dele
            if ins < best:
                best = ins
            cur[j] = best
        prev, cur = cur, prev
    return prev[n]


# --- public surface ----------------------------------------------------------


def _check_pair(a: TimeSeries, b: TimeSeries) -> None:
    if a.values.shape != b.values.shape:
        raise ValueError(f"shape mismatch: {a.values.shape} vs {b.values.shape}")


def _single(series: TimeSeries, what: str) -> np.ndarray:
    if series.dims != 1:
        raise ValueError(f"{what} expects a single-channel series, got {series.dims} channels")
    return series.values[0]


def euclidean(a: TimeSeries, b: TimeSeries) -> float:
    """Euclidean distance over all channels and positions."""
    _check_pair(a, b)
    return math.sqrt(sum(_sq_euclid(a.values[d], b.values[d]) for d in range(a.dims)))


def dtw(a: TimeSeries, b: TimeSeries, window_frac: float = 1.0) -> float:
    """Band-constrained DTW between two single-channel series.

    The band is ``|i - j| <= floor(window_frac * length)``; the diagonal is
    always admissible, so ``window_frac = 0`` yields the Euclidean distance.
    """
    _check_pair(a, b)
    x = _single(a, "dtw")
    y = _single(b, "dtw")
    return math.sqrt(_dtw_sq(x, y, band_radius(window_frac, a.length)))


@dataclass(frozen=True)
class Envelope:
    """Running max/min of a series over a symmetric radius."""

    upper: np.ndarray
    lower: np.ndarray
    window_radius: int


def envelope(series: TimeSeries, window_frac: float) -> Envelope:
    x = _single(series, "envelope")
    r = band_radius(window_frac, series.length)
    upper, lower = _envelope(x, r)
    return Envelope(upper, lower, r)


def lb_keogh(a: TimeSeries, env: Envelope) -> float:
    """One-directional envelope bound: excursions of ``a`` outside ``env``."""
    x = _single(a, "lb_keogh")
    if x.shape[0] != env.upper.shape[0]:
        raise ValueError("series and envelope lengths differ")
    return math.sqrt(_lb_keogh_sq(x, env.upper, env.lower))


def lb_symmetric(a: TimeSeries, b: TimeSeries, window_frac: float) -> float:
    """Larger of the two directional envelope bounds; never exceeds ``dtw``."""
    _check_pair(a, b)
    return max(lb_keogh(a, envelope(b, window_frac)), lb_keogh(b, envelope(a, window_frac)))


def multidim_distance(a: TimeSeries, b: TimeSeries, window_frac: float = 1.0) -> float:
    """Sum of independent per-channel DTW distances."""
    _check_pair(a, b)
    return float(_multidim_dtw(a.values, b.values, band_radius(window_frac, a.length)))


@dataclass(frozen=True)
class BoundMatrices:
    """Symmetric lower/upper bound matrices with zero diagonals."""

    lb: np.ndarray
    ub: np.ndarray

    def __post_init__(self):
        if self.lb.shape != self.ub.shape or self.lb.ndim != 2 or self.lb.shape[0] != self.lb.shape[1]:
            raise ValueError(f"bound matrices must be square and equal-shaped, got {self.lb.shape}, {self.ub.shape}")
        self.lb.setflags(write=False)
        self.ub.setflags(write=False)

    @property
    def n(self) -> int:
        return self.lb.shape[0]

    def upper_triangle(self, which: str = "ub") -> np.ndarray:
        m = self.ub if which == "ub" else self.lb
        iu = np.triu_indices(self.n, k=1)
        return m[iu]


def _row_chunks(n: int, threads: int) -> list[np.ndarray]:
    # interleave rows so triangle work balances across workers
    threads = max(1, min(int(threads), n))
    return [np.arange(t, n, threads, dtype=np.int64) for t in range(threads)]


def bound_matrices(dataset: LabeledDataset, window_frac: float, threads: int = 1) -> BoundMatrices:
    """Full lower (symmetrized envelope) and upper (Euclidean) bound matrices.

    Multichannel datasets get the per-channel sums of both matrices. Each
    entry is computed independently, so the result does not depend on
    ``threads``.
    """
    if dataset.n < 2:
        raise ValueError("need at least 2 series")
    X = np.ascontiguousarray(dataset.as_array())
    n, dims, length = X.shape
    r = band_radius(window_frac, length)
    U = np.empty_like(X)
    L = np.empty_like(X)
    for i in range(n):
        for d in range(dims):
            U[i, d], L[i, d] = _envelope(X[i, d], r)
    lb = np.zeros((n, n))
    ub = np.zeros((n, n))
    chunks = _row_chunks(n, threads)
    if len(chunks) == 1:
        _bound_rows(X, U, L, chunks[0], lb, ub)
    else:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            list(pool.map(lambda rows: _bound_rows(X, U, L, rows, lb, ub), chunks))
    return BoundMatrices(lb, ub)


def distance_matrix(
    dataset: LabeledDataset, measure: str = "dtw", window_frac: float = 0.05, threads: int = 1
) -> np.ndarray:
    """Full pairwise matrix under ``measure`` (``"dtw"`` or ``"euclidean"``).

    Multichannel DTW is the per-channel sum, the same arithmetic the pruned
    engine uses, so entries agree bit for bit.
    """
    if measure not in ("dtw", "euclidean"):
        raise ValueError(f"unknown measure {measure!r}")
    X = np.ascontiguousarray(dataset.as_array())
    n = X.shape[0]
    r = band_radius(window_frac, X.shape[2])
    out = np.zeros((n, n))
    chunks = _row_chunks(n, threads)
    use_dtw = measure == "dtw"
    if len(chunks) == 1:
        _distance_rows(X, r, use_dtw, chunks[0], out)
    else:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            list(pool.map(lambda rows: _distance_rows(X, r, use_dtw, rows, out), chunks))
    return out


def pair_distance_fn(dataset: LabeledDataset, measure: str = "dtw", window_frac: float = 0.05):
    """Return ``f(i, j)`` giving the exact distance between dataset members.

    Arguments are put in ascending order before evaluation.
    """
    X = np.ascontiguousarray(dataset.as_array())
    r = band_radius(window_frac, X.shape[2])
    if measure == "dtw":
        def exact(i: int, j: int) -> float:
            if i > j:
                i, j = j, i
            return float(_multidim_dtw(X[i], X[j], r))
    elif measure == "euclidean":
        def exact(i: int, j: int) -> float:
            if i > j:
                i, j = j, i
            return float(_multidim_euclid(X[i], X[j]))
    else:
        raise ValueError(f"unknown measure {measure!r}")
    return exact


# --- discrete sequences --------------------------------------------------------

DEFAULT_ALPHABET = frozenset(string.ascii_uppercase)


@dataclass(frozen=True)
class DiscreteSequence:
    """A string of symbols over a finite alphabet (uppercase letters by default)."""

    symbols: str
    alphabet: frozenset = DEFAULT_ALPHABET

    def __post_init__(self):
        bad = set(self.symbols) - self.alphabet
        if bad:
            raise ValueError(f"symbols outside alphabet: {''.join(sorted(bad))}")

    def __len__(self) -> int:
        return len(self.symbols)

    def codes(self) -> np.ndarray:
        return np.frombuffer(self.symbols.encode("utf-32-le"), dtype=np.uint32) if self.symbols else np.empty(0, np.uint32)


def _as_seq(s) -> DiscreteSequence:
    return s if isinstance(s, DiscreteSequence) else DiscreteSequence(str(s))


def edit_distance(s, t) -> int:
    """Unit-cost Levenshtein distance."""
    s, t = _as_seq(s), _as_seq(t)
    return int(_levenshtein(s.codes(), t.codes()))


def bag_distance(s, t) -> int:
    """Larger of the two multiset surpluses of symbols."""
    cs, ct = Counter(s.symbols if isinstance(s, DiscreteSequence) else s), Counter(
        t.symbols if isinstance(t, DiscreteSequence) else t
    )
    return max(sum((cs - ct).values()), sum((ct - cs).values()))


def edit_bounds(s, t) -> tuple[int, int]:
    """Cheap ``(lower, upper)`` bounds on the edit distance.

    Lower: max of the length gap and the bag distance. Upper: mismatches
    over the common-length prefix plus the length gap.
    """
    s, t = _as_seq(s), _as_seq(t)
    gap = abs(len(s) - len(t))
    lower = max(gap, bag_distance(s, t))
    m = min(len(s), len(t))
    hamming = sum(1 for a, b in zip(s.symbols[:m], t.symbols[:m]) if a != b)
    return lower, hamming + gap
