import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from regdec.blockmodels import (
    BlockModelSpec,
    Graph,
    Partition,
    poisson_blowup,
    sample_bipartite_poisson,
    sample_graph,
)
from regdec.codelength import edge_code, matrix_objective, summarize, two_part_objective
from regdec.optimizer import (
    MATRIX_STRATEGIES,
    SearchFailed,
    argmax_k,
    argmax_k1k2,
    greedy_two_part_mdl,
    matrix_mdl_search,
    matrix_score,
    node_costs,
    phi_score,
    phi_update,
    phi_update_matrix,
)

import oracles

SEPARATED = BlockModelSpec([0.5, 0.5], [[0.8, 0.05], [0.05, 0.8]])
MIXED = BlockModelSpec([0.4, 0.6], [[0.7, 0.3], [0.3, 0.5]])


def planted(n, seed, spec=SEPARATED):
    return sample_graph(spec, n, seed)


class TestPhi:
    @given(st.integers(0, 5000), st.integers(1, 4))
    def test_matrix_form_matches_loop_oracle(self, seed, k):
        G, _ = planted(12, seed, MIXED)
        rng = np.random.default_rng(seed)
        labels = np.concatenate([np.arange(k), rng.integers(0, k, 12 - k)])
        got = node_costs(G, labels, k)
        expect = np.array(oracles.phi_costs(G.adjacency.tolist(), labels.tolist(), k))
        both_inf = np.isinf(got) & np.isinf(expect)
        assert np.array_equal(np.isinf(got), np.isinf(expect))
        np.testing.assert_allclose(got[~both_inf], expect[~both_inf], rtol=1e-12)

    def test_k1_is_fixed(self):
        G, _ = planted(30, 1)
        assert np.array_equal(phi_update(G, Partition.trivial(30)), np.zeros(30))

    def test_planted_is_fixed_point(self):
        G, truth = planted(60, 2)
        assert np.array_equal(phi_update(G, truth), truth.labels)

    def test_corrects_single_misplacement(self):
        for seed in range(10):
            G, truth = planted(60, seed)
            for v in (0, 17, 45):
                labels = truth.labels.copy()
                labels[v] = 1 - labels[v]
                assert np.array_equal(phi_update(G, Partition(labels, 2)), truth.labels)

    def test_score_at_fixed_point_is_twice_edge_code(self):
        G, truth = planted(60, 3)
        assert phi_score(G, truth) == pytest.approx(2 * edge_code(G, truth), rel=1e-12)

    def test_idempotent_at_fixed_points(self):
        G, _ = planted(40, 5, MIXED)
        fit = argmax_k(G, 2, restarts=5, seed=1)
        if fit.converged:
            once = phi_update(G, fit.partition)
            assert np.array_equal(once, fit.partition.labels)
            assert np.array_equal(phi_update(G, Partition(once, 2)), once)

    def test_literal_log0_option(self):
        # a complete block: non-links cost log(1 - 1) = -inf unless read as 0
        A = np.zeros((6, 6), dtype=np.int8)
        A[:3, :3] = 1
        np.fill_diagonal(A, 0)
        G = Graph(A)
        labels = np.array([0, 0, 0, 1, 1, 1])
        strict = node_costs(G, labels, 2)
        literal = node_costs(G, labels, 2, literal_log0=True)
        assert np.isinf(strict[3, 0])
        assert np.all(np.isfinite(literal))


class TestArgmaxK:
    def test_recovers_planted(self):
        G, truth = planted(60, 0)
        fit = argmax_k(G, 2, restarts=10, seed=0)
        assert fit.partition.same_blocks(truth)
        assert fit.converged
        assert fit.objective == pytest.approx(two_part_objective(G, fit.partition, True, "block-code"), rel=1e-9)

    def test_k1(self):
        G, _ = planted(20, 0)
        fit = argmax_k(G, 1, restarts=3, seed=0)
        assert fit.partition.k == 1 and fit.iterations == 1

    def test_deterministic(self):
        G, _ = planted(40, 4, MIXED)
        a = argmax_k(G, 3, restarts=6, seed=9)
        b = argmax_k(G, 3, restarts=6, seed=9)
        assert np.array_equal(a.partition.labels, b.partition.labels)
        assert a.to_dict() == b.to_dict()

    def test_workers_do_not_change_result(self):
        G, _ = planted(40, 4, MIXED)
        a = argmax_k(G, 3, restarts=6, seed=9)
        b = argmax_k(G, 3, restarts=6, seed=9, workers=3)
        assert a.to_dict() == b.to_dict()

    def test_errors(self):
        G, _ = planted(10, 0)
        with pytest.raises(ValueError):
            argmax_k(G, 11)
        with pytest.raises(ValueError):
            argmax_k(G, 2, restarts=0)

    def test_all_restarts_failing_raises(self):
        # an empty graph gives every node identical costs, so Phi sends all to block 0
        G = Graph(np.zeros((8, 8), dtype=np.int8))
        with pytest.raises(SearchFailed):
            argmax_k(G, 2, restarts=3, seed=0)

    def test_tie_goes_to_first_restart(self):
        G, truth = planted(30, 1)
        start = truth.labels
        fit = argmax_k(G, 2, initial=[start, 1 - start, start])
        assert fit.restart_index == 0

    @given(st.integers(0, 2000))
    def test_permutation_equivariance(self, seed):
        G, _ = planted(16, seed, MIXED)
        rng = np.random.default_rng(seed)
        starts = []
        while len(starts) < 4:
            lab = rng.integers(0, 2, 16)
            if 0 < lab.sum() < 16:
                starts.append(lab)
        perm = rng.permutation(16)
        base = argmax_k(G, 2, initial=starts)
        A = G.adjacency[np.ix_(perm, perm)]
        moved = argmax_k(Graph(A), 2, initial=[s[perm] for s in starts])
        back = np.empty(16, dtype=np.int64)
        back[perm] = moved.partition.labels
        assert Partition(back, 2).same_blocks(base.partition)

    @pytest.mark.parametrize("seed", range(5))
    def test_brute_force_small(self, seed):
        spec = BlockModelSpec([0.5, 0.5], [[0.9, 0.1], [0.1, 0.9]])
        G, _ = sample_graph(spec, 10, seed)
        scores = [phi_score(G, Partition(lab, 2)) for lab in oracles.two_block_labelings(10)]
        fit = argmax_k(G, 2, restarts=20, seed=seed)
        assert fit.score <= min(scores) + 1e-9


class TestGreedy:
    def test_selects_planted_k(self):
        G, truth = planted(120, 0)
        fit = greedy_two_part_mdl(G, range(1, 6), restarts=10, seed=0)
        assert fit.k == 2 and fit.partition.same_blocks(truth)
        assert sorted(fit.scores_by_k) == [1, 2, 3, 4, 5]
        assert fit.objective == min(fit.scores_by_k.values())

    def test_single_k(self):
        G, _ = planted(20, 0)
        assert greedy_two_part_mdl(G, [1], restarts=2).partition.k == 1

    def test_empty_range(self):
        G, _ = planted(20, 0)
        with pytest.raises(ValueError):
            greedy_two_part_mdl(G, [])
        with pytest.raises(ValueError):
            greedy_two_part_mdl(G, range(1, 30))

    def test_early_stop(self):
        G, _ = planted(120, 0)
        fit = greedy_two_part_mdl(G, range(1, 8), restarts=5, seed=0, early_stop=True)
        assert fit.k == 2 and max(fit.scores_by_k) == 3

    def test_empty_graph_selects_one(self):
        G = Graph(np.zeros((12, 12), dtype=np.int8))
        assert greedy_two_part_mdl(G, range(1, 4), restarts=3).k == 1


class TestMatrix:
    def test_constant_matrix_fixed(self):
        A = np.full((5, 7), 3.0)
        r, c = phi_update_matrix(A, Partition.trivial(5), Partition.trivial(7))
        assert np.all(r == 0) and np.all(c == 0)

    def test_corrects_misassigned_row(self):
        rates = np.array([[8.0, 1.0], [1.0, 8.0]])
        A, rows, cols = poisson_blowup(rates, 20, seed=3)
        labels = rows.labels.copy()
        labels[4] = 1
        r, c = phi_update_matrix(A, Partition(labels, 2), cols)
        assert np.array_equal(r, rows.labels) and np.array_equal(c, cols.labels)
        r, c = phi_update_matrix(A, rows, cols)
        assert np.array_equal(r, rows.labels) and np.array_equal(c, cols.labels)

    def test_argmax_recovers_and_scores(self):
        A, rows, cols = poisson_blowup([[16, 4, 1], [1, 16, 4]], 30, seed=0)
        fit = argmax_k1k2(A, 2, 3, restarts=10, seed=0)
        assert fit.partition.same_blocks(rows) and fit.col_partition.same_blocks(cols)
        assert fit.score == pytest.approx(matrix_score(A, fit.partition, fit.col_partition))
        assert fit.objective == pytest.approx(matrix_objective(A, fit.partition, fit.col_partition), rel=1e-9)
        again = argmax_k1k2(A, 2, 3, restarts=10, seed=0)
        assert again.to_dict() == fit.to_dict()

    def test_trivial_and_errors(self):
        A = np.ones((4, 5))
        fit = argmax_k1k2(A, 1, 1, restarts=2)
        assert fit.partition.k == 1 and fit.col_partition.k == 1
        with pytest.raises(ValueError):
            argmax_k1k2(A, 5, 1)

    @pytest.mark.parametrize("strategy", MATRIX_STRATEGIES)
    def test_search_planted(self, strategy):
        A, rows, cols = poisson_blowup([[16, 4, 1], [1, 16, 4]], 30, seed=1)
        fit = matrix_mdl_search(A, 5, 5, strategy=strategy, restarts=10, seed=0)
        assert fit.k == (2, 3)
        assert (2, 3) in fit.scores_by_k

    def test_zero_matrix(self):
        fit = matrix_mdl_search(np.zeros((8, 9)), 4, 4, restarts=3)
        assert fit.k == (1, 1)

    def test_strategies_agree_on_small_instance(self):
        rows = Partition(np.repeat([0, 1], 10), 2)
        cols = Partition(np.repeat([0, 1], 10), 2)
        A = sample_bipartite_poisson([[12.0, 2.0], [2.0, 12.0]], rows, cols, seed=6)
        grid = matrix_mdl_search(A, 4, 4, "full-grid", restarts=10, seed=2)
        diag = matrix_mdl_search(A, 4, 4, "diagonal-then-local", restarts=10, seed=2)
        assert grid.k == diag.k == (2, 2)
        assert len(grid.scores_by_k) == 16

    def test_unknown_strategy(self):
        with pytest.raises(ValueError):
            matrix_mdl_search(np.ones((3, 3)), 2, 2, strategy="spiral")


def test_densities_of_fit_match_summary():
    G, _ = planted(50, 8, MIXED)
    fit = argmax_k(G, 2, restarts=4, seed=3)
    s = summarize(G, fit.partition)
    assert np.all((s.densities >= 0) & (s.densities <= 1))
