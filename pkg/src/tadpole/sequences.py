"""Clustering discrete sequences under edit distance with the same pruning engine."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .density_peaks import ClusterModel, cluster_from_matrix
from .engine import TadpoleResult, resolve_dc, run_tadpole
from .measures import BoundMatrices, DiscreteSequence, DEFAULT_ALPHABET, _levenshtein, edit_bounds

__all__ = [
    "SequenceDataset",
    "AMINO_ACIDS",
    "load_sequences",
    "write_sequences",
    "sequence_bound_matrices",
    "edit_distance_matrix",
    "tadpole_cluster_sequences",
    "dp_cluster_sequences",
    "generate_mutation_families",
]

AMINO_ACIDS = "ACDEFGHIKLMNPQRSTVWY"


@dataclass(frozen=True)
class SequenceDataset:
    sequences: tuple[DiscreteSequence, ...]
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        seqs = tuple(s if isinstance(s, DiscreteSequence) else DiscreteSequence(str(s)) for s in self.sequences)
        if self.labels is not None and len(self.labels) != len(seqs):
            raise ValueError(f"{len(self.labels)} labels for {len(seqs)} sequences")
        object.__setattr__(self, "sequences", seqs)
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(str(x) for x in self.labels))

    @property
    def n(self) -> int:
        return len(self.sequences)

    def __len__(self) -> int:
        return self.n

    def codes(self) -> list[np.ndarray]:
        return [s.codes() for s in self.sequences]


def load_sequences(path) -> SequenceDataset:
    """One sequence per line, optionally prefixed by ``label<TAB>``."""
    path = Path(path)
    if not path.is_file():
        raise ValueError(f"no such sequence file: {path}")
    seqs, labels = [], []
    for rowno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        label, _, body = line.rpartition("\t")
        try:
            seqs.append(DiscreteSequence(body))
        except ValueError as exc:
            raise ValueError(f"row {rowno}: {exc}") from None
        labels.append(label or None)
    if not seqs:
        raise ValueError(f"empty dataset: {path}")
    has = [lab is not None for lab in labels]
    if any(has) and not all(has):
        raise ValueError(f"{path}: labels given for some rows but not all")
    return SequenceDataset(tuple(seqs), tuple(labels) if all(has) else None)


def write_sequences(ds: SequenceDataset, path) -> None:
    with Path(path).open("w") as fh:
        for i, s in enumerate(ds.sequences):
            prefix = f"{ds.labels[i]}\t" if ds.labels is not None else ""
            fh.write(prefix + s.symbols + "\n")


def sequence_bound_matrices(ds: SequenceDataset) -> BoundMatrices:
    """Pairwise edit-distance bounds (bag/length-gap lower, prefix-Hamming upper)."""
    n = ds.n
    if n < 2:
        raise ValueError("need at least 2 sequences")
    lb = np.zeros((n, n))
    ub = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            lo, hi = edit_bounds(ds.sequences[i], ds.sequences[j])
            lb[i, j] = lb[j, i] = lo
            ub[i, j] = ub[j, i] = hi
    return BoundMatrices(lb, ub)


def _exact_fn(ds: SequenceDataset):
    codes = ds.codes()

    def exact(i: int, j: int) -> float:
        return float(_levenshtein(codes[i], codes[j]))

    return exact


def edit_distance_matrix(ds: SequenceDataset) -> np.ndarray:
    exact = _exact_fn(ds)
    n = ds.n
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            D[i, j] = D[j, i] = exact(i, j)
    return D


def tadpole_cluster_sequences(
    ds: SequenceDataset,
    dc: float | None = None,
    k: int | None = None,
    budget: int | None = None,
    *,
    dc_pct: float | None = None,
    stop=None,
) -> TadpoleResult:
    """Pruned Density Peaks over edit distance; unpacks as ``(model, stats, trace)``."""
    bounds = sequence_bound_matrices(ds)
    cutoff = resolve_dc(bounds, dc, dc_pct)
    return run_tadpole(bounds, _exact_fn(ds), cutoff, k=k, budget=budget, stop=stop)


def dp_cluster_sequences(ds: SequenceDataset, dc: float, k: int | None = None) -> ClusterModel:
    """Brute-force Density Peaks over the full edit-distance matrix."""
    return cluster_from_matrix(edit_distance_matrix(ds), dc, k)


def _mutate(root: list[str], rate: float, alphabet: str, rng: np.random.Generator) -> str:
    out: list[str] = []
    for sym in root:
        if rng.random() >= rate:
            out.append(sym)
            continue
        op = rng.integers(3)
        if op == 0:
            choices = [a for a in alphabet if a != sym]
            out.append(choices[rng.integers(len(choices))])
        elif op == 1:
            out.append(sym)
            out.append(alphabet[rng.integers(len(alphabet))])
        # op == 2 deletes the symbol
    return "".join(out)


def generate_mutation_families(
    families: int,
    per_family: int,
    length: int,
    mutation_rate: float = 0.1,
    seed: int = 0,
    alphabet: str = AMINO_ACIDS,
) -> SequenceDataset:
    """Families of point-mutated copies of random root sequences.

    Each root draws its own symbol composition from a flat Dirichlet, so
    families differ in composition as real protein families do. Every
    position of a copy is mutated with probability ``mutation_rate`` by an
    equally likely substitution, insertion or deletion.
    """
    if families < 1 or per_family < 1 or length < 1:
        raise ValueError("families, per_family and length must be positive")
    if not 0.0 <= mutation_rate <= 0.3:
        raise ValueError(f"mutation_rate must lie in [0, 0.3], got {mutation_rate}")
    bad = set(alphabet) - DEFAULT_ALPHABET
    if bad:
        raise ValueError(f"alphabet symbols outside A-Z: {''.join(sorted(bad))}")
    rng = np.random.default_rng(seed)
    seqs, labels = [], []
    for f in range(families):
        weights = rng.dirichlet(np.ones(len(alphabet)))
        root = list(rng.choice(list(alphabet), size=length, p=weights))
        for _ in range(per_family):
            seqs.append(DiscreteSequence(_mutate(root, mutation_rate, alphabet, rng)))
            labels.append(str(f))
    return SequenceDataset(tuple(seqs), tuple(labels))
