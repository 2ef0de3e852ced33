import csv
import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tadpole.core import generate_cbf, generate_random_walks, smooth, znormalize
from tadpole.density_peaks import delta_distances, local_density
from tadpole.engine import run_tadpole
from tadpole.evaluation import (
    TRACE_HEADER,
    OrderingKind,
    calls_to_reach,
    nmi,
    oracle_computation_count,
    ordering_trace,
    rand_index,
    write_trace_csv,
)
from tadpole.measures import bound_matrices, distance_matrix, pair_distance_fn

from oracles import rand_index_by_pairs


class TestRandIndex:
    def test_identical(self):
        assert rand_index([1, 1, 2, 3], [1, 1, 2, 3]) == 1.0

    def test_small_example(self):
        assert rand_index([1, 1, 2], [1, 2, 2]) == pytest.approx(1 / 3)

    def test_relabeling(self):
        assert rand_index([1, 1, 2, 2, 3], ["b", "b", "a", "a", "c"]) == 1.0

    def test_mismatched_lengths(self):
        with pytest.raises(ValueError):
            rand_index([1, 2], [1, 2, 3])

    @settings(max_examples=200, deadline=None)
    @given(st.integers(2, 12).flatmap(lambda n: st.tuples(
        st.lists(st.integers(0, 3), min_size=n, max_size=n),
        st.lists(st.integers(0, 3), min_size=n, max_size=n),
    )))
    def test_matches_pair_enumeration(self, pair):
        a, b = pair
        assert rand_index(a, b) == pytest.approx(rand_index_by_pairs(a, b), abs=1e-12)


def _entropy(labels):
    _, counts = np.unique(labels, return_counts=True)
    p = counts / counts.sum()
    return float(-(p * np.log(p)).sum())


def _mi_by_counts(a, b):
    n = len(a)
    total = 0.0
    for x in set(a):
        for y in set(b):
            nxy = sum(1 for u, v in zip(a, b) if u == x and v == y)
            if nxy:
                total += nxy / n * np.log(n * nxy / (a.count(x) * b.count(y)))
    return total


class TestNmi:
    def test_identity(self):
        assert nmi([0, 0, 1, 1], [0, 0, 1, 1]) == pytest.approx(1.0)

    def test_permutation(self):
        assert nmi([0, 0, 1, 2], [5, 5, 7, 6]) == pytest.approx(1.0)

    def test_zero_entropy(self):
        assert nmi([1, 1, 1, 1], [0, 1, 0, 1]) == 0.0
        assert nmi([1, 1, 1], [1, 1, 1]) == 0.0

    def test_matches_direct_sum(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            n = int(rng.integers(2, 30))
            a = rng.integers(0, 4, n).tolist()
            b = rng.integers(0, 4, n).tolist()
            ha, hb = _entropy(a), _entropy(b)
            expect = 0.0 if ha == 0 or hb == 0 else _mi_by_counts(a, b) / ((ha + hb) / 2)
            assert nmi(a, b) == pytest.approx(expect, abs=1e-12)
            assert 0.0 <= nmi(a, b) <= 1.0 + 1e-12


class TestOracleCount:
    def test_close_triangle(self):
        D = np.array([[0, 0.1, 0.2], [0.1, 0, 0.15], [0.2, 0.15, 0]])
        prof = local_density(D, 1.0)
        assert oracle_computation_count(D, 1.0, prof, delta_distances(D, prof)) == 3

    def test_far_pair(self):
        D = np.array([[0, 5.0], [5.0, 0]])
        prof = local_density(D, 1.0)
        assert oracle_computation_count(D, 1.0, prof, delta_distances(D, prof)) == 1

    def test_bounded_by_tadpole(self):
        for seed in range(10):
            ds = generate_random_walks(30, 64, seed=seed).map(znormalize)
            D = distance_matrix(ds, "dtw", 0.1)
            dc = float(np.percentile(D[np.triu_indices(30, 1)], 5))
            prof = local_density(D, dc)
            oracle = oracle_computation_count(D, dc, prof, delta_distances(D, prof))
            res = run_tadpole(bound_matrices(ds, 0.1), pair_distance_fn(ds, "dtw", 0.1), dc)
            assert oracle <= res.stats.exact_calls + res.stats.case_a <= 30 * 29 // 2


@pytest.fixture(scope="module")
def cbf():
    return generate_cbf(45, 128, seed=1).map(lambda s: smooth(s, 9)).map(znormalize)


class TestOrderingTrace:
    @pytest.mark.parametrize("kind", ["tadpole", "random", "oracle"])
    def test_final_equals_full_run(self, cbf, kind):
        tr = ordering_trace(cbf, 0.05, None, 3, kind, dc_pct=5)
        ref = ordering_trace(cbf, 0.05, None, 3, "tadpole", dc_pct=5)
        np.testing.assert_array_equal(tr.trace.last.labels, ref.trace.last.labels)
        assert len(tr.rand_index) == cbf.n
        assert tr.trace.complete

    def test_deterministic(self, cbf):
        a = ordering_trace(cbf, 0.05, None, 3, OrderingKind.RANDOM, seed=3, dc_pct=5)
        b = ordering_trace(cbf, 0.05, None, 3, OrderingKind.RANDOM, seed=3, dc_pct=5)
        assert a.rows() == b.rows()

    def test_needs_truth(self):
        ds = generate_random_walks(10, 32, seed=0)
        with pytest.raises(ValueError):
            ordering_trace(ds, 0.1, None, 2, "tadpole", dc_pct=10)

    def test_calls_to_reach(self, cbf):
        tr = ordering_trace(cbf, 0.05, None, 3, "tadpole", dc_pct=5)
        reached = calls_to_reach(tr, tr.final_rand_index)
        assert reached is not None and 0 <= reached <= tr.stats.phase2_computed
        assert calls_to_reach(tr, 1.1) is None
        assert calls_to_reach(tr, 0.0, since_setup=False) == tr.setup_calls

    def test_csv(self, cbf, tmp_path):
        tr = ordering_trace(cbf, 0.05, None, 3, "random", dc_pct=5)
        p = tmp_path / "t.csv"
        write_trace_csv(tr, p)
        rows = list(csv.reader(p.open()))
        assert tuple(rows[0]) == TRACE_HEADER
        assert len(rows) == cbf.n + 1
        assert all(int(a[0]) <= int(b[0]) for a, b in itertools.pairwise(rows[1:]))
