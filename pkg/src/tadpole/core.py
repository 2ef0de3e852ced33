"""Time-series containers, dataset ingestion, preprocessing and synthetic generators."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = [
    "DatasetError",
    "TimeSeries",
    "LabeledDataset",
    "load_ucr",
    "load_ucr_channels",
    "write_ucr",
    "znormalize",
    "smooth",
    "generate_cbf",
    "generate_random_walks",
    "CBF_CLASSES",
    "percentile_cutoff",
]

CBF_CLASSES = ("cylinder", "bell", "funnel")


class DatasetError(ValueError):
    """Raised for malformed dataset files or invalid dataset construction."""


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """An immutable, possibly multi-channel, real-valued series.

    ``values`` is stored as a read-only float64 array of shape
    ``(dims, length)``. A 1-D input is treated as a single channel.
    """

    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=np.float64, copy=True)
        if arr.ndim == 1:
            arr = arr[np.newaxis, :]
        if arr.ndim != 2:
            raise DatasetError(f"series must be 1-D or 2-D, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 2:
            raise DatasetError(f"series needs >= 1 channel and length >= 2, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DatasetError("series contains NaN or infinite values")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def length(self) -> int:
        return self.values.shape[1]

    @property
    def dims(self) -> int:
        return self.values.shape[0]

    def channel(self, d: int) -> np.ndarray:
        return self.values[d]

    def __len__(self) -> int:
        return self.length

    def __eq__(self, other) -> bool:
        if not isinstance(other, TimeSeries):
            return NotImplemented
        return self.values.shape == other.values.shape and bool(np.array_equal(self.values, other.values))

    __hash__ = None


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """A collection of equal-shape series with optional class labels."""

    series: tuple[TimeSeries, ...]
    labels: tuple[str, ...] | None = None
    _stack: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        series = tuple(s if isinstance(s, TimeSeries) else TimeSeries(s) for s in self.series)
        if not series:
            raise DatasetError("empty dataset")
        shape = series[0].values.shape
        for i, s in enumerate(series):
            if s.values.shape != shape:
                raise DatasetError(
                    f"series {i} has shape {s.values.shape}, expected {shape} (dims, length)"
                )
        labels = self.labels
        if labels is not None:
            labels = tuple(str(x) for x in labels)
            if len(labels) != len(series):
                raise DatasetError(f"{len(labels)} labels for {len(series)} series")
        stack = np.stack([s.values for s in series])
        stack.setflags(write=False)
        object.__setattr__(self, "series", series)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "_stack", stack)

    def __len__(self) -> int:
        return len(self.series)

    def __getitem__(self, i: int) -> TimeSeries:
        return self.series[i]

    @property
    def n(self) -> int:
        return len(self.series)

    @property
    def length(self) -> int:
        return self.series[0].length

    @property
    def dims(self) -> int:
        return self.series[0].dims

    def as_array(self) -> np.ndarray:
        """Read-only ``(n, dims, length)`` view of all series."""
        return self._stack

    def channel(self, d: int) -> np.ndarray:
        """``(n, length)`` array of channel ``d`` across the dataset."""
        return self._stack[:, d, :]

    def map(self, fn) -> "LabeledDataset":
        return LabeledDataset(tuple(fn(s) for s in self.series), self.labels)

    def __eq__(self, other) -> bool:
        if not isinstance(other, LabeledDataset):
            return NotImplemented
        return self.labels == other.labels and bool(np.array_equal(self._stack, other._stack))

    __hash__ = None


def _sniff_delimiter(line: str) -> str:
    return "\t" if "\t" in line else ","


def _read_rows(path: Path, delimiter: str | None) -> tuple[list[str], list[list[float]]]:
    if not path.is_file():
        raise DatasetError(f"no such dataset file: {path}")
    with path.open(newline="") as fh:
        lines = [ln for ln in fh.read().splitlines()]
    lines = [ln for ln in lines if ln.strip()]
    if not lines:
        raise DatasetError(f"empty dataset: {path}")
    delim = delimiter or _sniff_delimiter(lines[0])
    labels: list[str] = []
    rows: list[list[float]] = []
    width = None
    for rowno, fields in enumerate(csv.reader(lines, delimiter=delim), start=1):
        fields = [f.strip() for f in fields]
        if width is None:
            width = len(fields)
            if width < 3:
                raise DatasetError(f"row {rowno}: need a class token and >= 2 values, got {width} fields")
        elif len(fields) != width:
            raise DatasetError(f"row {rowno}: ragged row with {len(fields)} fields, expected {width}")
        try:
            values = [float(f) for f in fields[1:]]
        except ValueError as exc:
            raise DatasetError(f"row {rowno}: non-numeric value ({exc})") from None
        labels.append(fields[0])
        rows.append(values)
    return labels, rows


def load_ucr(path, delimiter: str | None = None) -> LabeledDataset:
    """Read a labeled dataset in the UCR row format.

    Each line holds a class token followed by the series values, separated
    by tabs or commas. When ``delimiter`` is None it is sniffed from the
    first line.
    """
    labels, rows = _read_rows(Path(path), delimiter)
    return LabeledDataset(tuple(TimeSeries(r) for r in rows), tuple(labels))


def load_ucr_channels(paths: Sequence, delimiter: str | None = None) -> LabeledDataset:
    """Read a multichannel dataset stored as one UCR file per channel.

    Labels are taken from the first file; all files must agree in row count
    and width.
    """
    if not paths:
        raise DatasetError("no input files given")
    if len(paths) == 1:
        return load_ucr(paths[0], delimiter)
    per_channel = [_read_rows(Path(p), delimiter) for p in paths]
    labels, first = per_channel[0]
    for p, (_, rows) in zip(paths[1:], per_channel[1:]):
        if len(rows) != len(first):
            raise DatasetError(f"{p}: {len(rows)} rows, expected {len(first)} to match {paths[0]}")
        if len(rows[0]) != len(first[0]):
            raise DatasetError(f"{p}: series length {len(rows[0])}, expected {len(first[0])}")
    series = tuple(
        TimeSeries(np.array([rows[i] for _, rows in per_channel])) for i in range(len(first))
    )
    return LabeledDataset(series, tuple(labels))


def write_ucr(dataset: LabeledDataset, path, delimiter: str = "\t", channel: int = 0) -> None:
    """Write one channel of ``dataset`` in the UCR row format.

    Values are written with ``repr`` so a reload reproduces them exactly.
    Unlabeled datasets get the class token ``0``.
    """
    labels = dataset.labels or ("0",) * dataset.n
    with Path(path).open("w") as fh:
        for lab, s in zip(labels, dataset.series):
            fh.write(delimiter.join([lab, *(repr(float(v)) for v in s.channel(channel))]) + "\n")


def znormalize(series: TimeSeries) -> TimeSeries:
    """Per-channel z-normalization with population std; constant channels become zeros."""
    x = series.values
    mean = x.mean(axis=1, keepdims=True)
    std = x.std(axis=1, keepdims=True)
    centered = x - mean
    out = np.zeros_like(x)
    nz = std[:, 0] > 0
    out[nz] = centered[nz] / std[nz]
    return TimeSeries(out)


def smooth(series: TimeSeries, window: int) -> TimeSeries:
    """Centered moving average; the window is truncated at the edges."""
    if not isinstance(window, (int, np.integer)) or window < 1 or window % 2 == 0:
        raise ValueError(f"window must be a positive odd integer, got {window!r}")
    if window == 1:
        return series
    half = window // 2
    x = series.values
    length = x.shape[1]
    csum = np.concatenate([np.zeros((x.shape[0], 1)), np.cumsum(x, axis=1)], axis=1)
    idx = np.arange(length)
    lo = np.maximum(idx - half, 0)
    hi = np.minimum(idx + half + 1, length)
    return TimeSeries((csum[:, hi] - csum[:, lo]) / (hi - lo))


def _cbf_shape(kind: int, length: int, rng: np.random.Generator) -> np.ndarray:
    # Classic construction is defined for length 128: a ~ U[16, 32], b - a ~ U[32, 96].
    scale = length / 128.0
    a = rng.uniform(16, 32) * scale
    b = a + rng.uniform(32, 96) * scale
    eta = rng.standard_normal()
    eps = rng.standard_normal(length)
    t = np.arange(length, dtype=np.float64)
    inside = ((t >= a) & (t <= b)).astype(np.float64)
    if kind == 0:
        pattern = inside
    elif kind == 1:
        pattern = inside * (t - a) / (b - a)
    else:
        pattern = inside * (b - t) / (b - a)
    return (6.0 + eta) * pattern + eps


def generate_cbf(n: int, length: int = 128, seed: int = 0) -> LabeledDataset:
    """Cylinder-Bell-Funnel series with round-robin class labels."""
    if n < 3:
        raise ValueError(f"n must be >= 3, got {n}")
    if length < 32:
        raise ValueError(f"length must be >= 32, got {length}")
    rng = np.random.default_rng(seed)
    series = []
    labels = []
    for i in range(n):
        kind = i % 3
        series.append(TimeSeries(_cbf_shape(kind, length, rng)))
        labels.append(CBF_CLASSES[kind])
    return LabeledDataset(tuple(series), tuple(labels))


def generate_random_walks(n: int, length: int, seed: int = 0) -> LabeledDataset:
    """Unlabeled random walks built from standard-normal increments."""
    if n < 2:
        raise ValueError(f"n must be >= 2, got {n}")
    if length < 2:
        raise ValueError(f"length must be >= 2, got {length}")
    rng = np.random.default_rng(seed)
    walks = np.cumsum(rng.standard_normal((n, length)), axis=1)
    return LabeledDataset(tuple(TimeSeries(w) for w in walks))


def percentile_cutoff(values: np.ndarray, pct: float) -> float:
    """``pct``-th percentile (0-100) of ``values``; helper for cutoff selection."""
    if not 0 < pct <= 100:
        raise ValueError(f"percentile must lie in (0, 100], got {pct}")
    return float(np.percentile(np.asarray(values, dtype=np.float64), pct))
