import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trajmatch.inference import (
    BudgetExceeded,
    exact_log_similarity,
    icm_match,
    mean_field_bound,
    meanfield_similarity,
    neighborhood_weights,
    posterior_optimality,
    similarity,
)
from trajmatch.model import PotentialTables, build_graph
from trajmatch.traj import AtomicMotion

sizes = st.integers(1, 4)
seeds = st.integers(0, 2**32 - 1)


def tables(seed, N, M, pair_scale=1.0, scale=2.0):
    return PotentialTables.from_random(np.random.default_rng(seed), N, M, scale, pair_scale)


def all_mappings(N, M):
    return np.array(list(itertools.product(range(M), repeat=N)))


def unary_only(unary):
    unary = np.asarray(unary, dtype=float)
    N, M = unary.shape
    return PotentialTables(unary, np.zeros((N, N, M, M)))


class TestExact:
    def test_single_model_node(self):
        t = tables(1, 3, 1)
        r = exact_log_similarity(t)
        assert r.log_similarity == pytest.approx(-t.energy([0, 0, 0]), abs=1e-12)
        assert r.mapping.tolist() == [0, 0, 0]

    def test_two_energies(self):
        r = exact_log_similarity(unary_only([[0.7, 2.1]]))
        assert r.log_similarity == pytest.approx(math.log(math.exp(-0.7) + math.exp(-2.1)), abs=1e-14)

    @settings(max_examples=40, deadline=None)
    @given(sizes, sizes, seeds)
    def test_brute_force(self, N, M, seed):
        t = tables(seed, N, M)
        u = np.array([t.energy(x) for x in all_mappings(N, M)])
        r = exact_log_similarity(t)
        assert r.log_similarity == pytest.approx(np.log(np.exp(-u).sum()), abs=1e-10)
        assert r.energy == pytest.approx(u.min(), abs=1e-12)

    def test_large_energies_no_underflow(self):
        r = exact_log_similarity(unary_only([[5000.0, 5001.0]]))
        assert r.log_similarity == pytest.approx(-5000 + math.log1p(math.exp(-1)), abs=1e-9)

    def test_chunked_enumeration(self):
        # 4^9 = 262144 mappings spans several chunks
        t = tables(5, 9, 4, pair_scale=0.1)
        ref = exact_log_similarity(t, budget=10**6)
        X = all_mappings(9, 4)
        u = t.energies(X)
        assert ref.log_similarity == pytest.approx(-u.min() + np.log(np.exp(-(u - u.min())).sum()), abs=1e-9)

    def test_budget(self):
        with pytest.raises(BudgetExceeded, match="icm"):
            exact_log_similarity(tables(0, 12, 12, pair_scale=0.0), budget=10**7)

    @settings(max_examples=30, deadline=None)
    @given(sizes, sizes, seeds)
    def test_permutation_invariance(self, N, M, seed):
        t = tables(seed, N, M)
        r = np.random.default_rng(seed)
        base = exact_log_similarity(t).log_similarity
        permuted = exact_log_similarity(t.permuted(r.permutation(N), r.permutation(M))).log_similarity
        assert abs(base - permuted) <= 1e-12 * max(1.0, abs(base))


class TestPosterior:
    def test_single_model_node(self):
        assert posterior_optimality(tables(2, 2, 1), X=[0, 0]) == pytest.approx(1.0)

    def test_three_quarters(self):
        assert posterior_optimality(unary_only([[0.0, math.log(3)]]), X=[0]) == pytest.approx(0.75)

    def test_sums_to_one(self):
        t = tables(7, 3, 3)
        total = sum(posterior_optimality(t, X=x) for x in all_mappings(3, 3))
        assert total == pytest.approx(1.0, abs=1e-12)


class TestMeanField:
    def test_single_model_node(self):
        t = tables(3, 4, 1)
        r = meanfield_similarity(t)
        np.testing.assert_array_equal(r.marginals, 1.0)
        assert r.log_similarity == pytest.approx(exact_log_similarity(t).log_similarity, abs=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(sizes, sizes, seeds)
    def test_exact_without_coupling(self, N, M, seed):
        t = tables(seed, N, M, pair_scale=0.0)
        r = meanfield_similarity(t)
        expected = np.exp(-t.unary)
        np.testing.assert_allclose(r.marginals, expected / expected.sum(axis=1, keepdims=True), atol=1e-12)
        assert abs(r.log_similarity - exact_log_similarity(t).log_similarity) <= 1e-9

    @settings(max_examples=60, deadline=None)
    @given(sizes, sizes, seeds)
    def test_jensen(self, N, M, seed):
        t = tables(seed, N, M, pair_scale=3.0)
        assert meanfield_similarity(t).log_similarity <= exact_log_similarity(t).log_similarity + 1e-9

    @settings(max_examples=30, deadline=None)
    @given(sizes, sizes, seeds)
    def test_bound_monotone_and_rows_normalized(self, N, M, seed):
        t = tables(seed, N, M, pair_scale=3.0)
        r = meanfield_similarity(t, return_trace=True)
        assert all(b >= a - 1e-10 for a, b in zip(r.trace[:-1], r.trace[1:]))
        np.testing.assert_allclose(r.marginals.sum(axis=1), 1.0, atol=1e-9)
        assert np.all(r.marginals >= 0)

    def test_bound_of_point_mass_is_minus_energy(self):
        t = tables(11, 3, 2)
        q = np.zeros((3, 2))
        q[[0, 1, 2], [1, 0, 1]] = 1.0
        assert mean_field_bound(t, q) == pytest.approx(-t.energy([1, 0, 1]), abs=1e-12)

    def test_iteration_cap(self):
        r = meanfield_similarity(tables(4, 4, 4, pair_scale=5.0), max_iters=1, tol=0.0)
        assert r.iterations == 1
        with pytest.raises(ValueError):
            meanfield_similarity(tables(4, 2, 2), max_iters=0)


class TestICM:
    def test_copy_converges_immediately(self):
        seg = np.random.default_rng(0).uniform(size=(4, 2, 16, 2))
        g = build_graph([AtomicMotion(seg[i], (3 * i, 3 * i + 10)) for i in range(4)])
        r = icm_match(g, g)
        assert r.mapping.tolist() == [0, 1, 2, 3]
        assert r.energy == 0 and r.iterations == 1

    @settings(max_examples=50, deadline=None)
    @given(sizes, sizes, seeds)
    def test_dense_monotone(self, N, M, seed):
        t = tables(seed, N, M, pair_scale=4.0)
        r = icm_match(t, init=np.random.default_rng(seed).integers(0, M, size=N))
        assert all(b <= a for a, b in zip(r.trace[:-1], r.trace[1:]))
        assert r.log_similarity == -t.energy(r.mapping)

    @settings(max_examples=50, deadline=None)
    @given(sizes, st.integers(2, 4), seeds)
    def test_node_dominant_finds_map(self, N, M, seed):
        r = np.random.default_rng(seed)
        pair_scale = 0.1
        # every unary gap exceeds the largest possible total pair energy of a node
        gap = pair_scale * N + 1.0
        unary = np.stack([r.permutation(M) * gap for _ in range(N)]).astype(float)
        base = PotentialTables.from_random(r, N, M, 0.0, pair_scale)
        t = PotentialTables(unary, base.pair)
        assert icm_match(t).mapping.tolist() == exact_log_similarity(t).mapping.tolist()

    def test_ties_go_to_smallest_label(self):
        r = icm_match(unary_only([[1.0, 1.0, 1.0], [2.0, 0.5, 0.5]]))
        assert r.mapping.tolist() == [0, 1]

    def test_sparse_local_monotone(self):
        rng = np.random.default_rng(8)
        t = PotentialTables.from_random(rng, 4, 3, 1.0, 2.0)
        t.z_intervals, t.frame_span = [(0, 10), (10, 20), (20, 30), (30, 40)], 40
        alpha = neighborhood_weights(t, "sparse")
        assert alpha.sum() > 0 and not np.all(alpha + np.eye(4) == 1)
        x = np.zeros(4, dtype=int)
        r = icm_match(t, init=x, neighborhood="sparse")
        # replay the sweeps and check each update lowers its own local objective
        x = x.copy()
        for _ in range(r.iterations):
            for k in range(4):
                local = t.unary[k] + sum(t.pair[i, k, x[i]] for i in np.flatnonzero(alpha[:, k]))
                new = int(np.argmin(local))
                assert local[new] <= local[x[k]]
                x[k] = new
        assert x.tolist() == r.mapping.tolist()

    def test_explicit_neighborhood_shape(self):
        with pytest.raises(ValueError):
            icm_match(tables(0, 3, 2), neighborhood=np.ones((2, 2)))
        with pytest.raises(ValueError):
            icm_match(tables(0, 3, 2), neighborhood="ring")

    def test_sweep_cap(self):
        with pytest.raises(ValueError):
            icm_match(tables(0, 3, 2), max_sweeps=0)


def test_dispatch_and_determinism():
    t = tables(21, 3, 3, pair_scale=2.0)
    for method in ("exact", "meanfield", "icm"):
        a, b = similarity(t, method=method), similarity(t, method=method)
        assert a.method == method
        assert a.to_dict() == b.to_dict()
    with pytest.raises(ValueError):
        similarity(t, method="bp")
