import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from regdec.blockmodels import (
    RNG_NAME,
    BlockModelSpec,
    CountMatrix,
    Graph,
    Partition,
    PoissonBlockSpec,
    check_irreducibility,
    counterexample_layout,
    deterministic_partition,
    poisson_blowup,
    sample_graph,
    sample_poisson,
    sample_regularity_counterexample,
)

PLANTED = BlockModelSpec([0.5, 0.5], [[0.8, 0.1], [0.1, 0.8]])


class TestPartition:
    def test_basic(self):
        p = Partition([0, 1, 1, 0, 2])
        assert p.k == 3 and p.n == 5
        assert p.sizes.tolist() == [2, 2, 1]
        assert [b.tolist() for b in p.blocks()] == [[0, 3], [1, 2], [4]]
        assert p.matrix().sum(axis=1).tolist() == [1] * 5

    def test_empty_block_rejected(self):
        with pytest.raises(ValueError):
            Partition([0, 2, 2])
        with pytest.raises(ValueError):
            Partition([0, 0], k=2)

    def test_relabeling_equivalence(self):
        a, b = Partition([0, 0, 1, 2]), Partition([2, 2, 0, 1])
        assert a.same_blocks(b)
        assert a.canonical() == b.canonical()
        assert not a.same_blocks(Partition([0, 1, 1, 2]))

    def test_from_blocks(self):
        p = Partition.from_blocks([[2, 3], [0, 1]])
        assert p.labels.tolist() == [1, 1, 0, 0]


class TestDeterministicPartition:
    def test_examples(self):
        assert [b.tolist() for b in deterministic_partition(4, [0.5, 0.5]).blocks()] == [[0, 1], [2, 3]]
        p = deterministic_partition(10, [0.3, 0.7])
        assert [b.tolist() for b in p.blocks()] == [[0, 1, 2], list(range(3, 10))]

    def test_too_small(self):
        with pytest.raises(ValueError, match="n too small"):
            deterministic_partition(1, [0.5, 0.5])

    @given(st.lists(st.integers(1, 20), min_size=1, max_size=6), st.integers(30, 500))
    def test_sizes_close_to_proportions(self, weights, n):
        g = np.array(weights, dtype=float)
        g /= g.sum()
        if np.any(g * n < 1):
            # a segment shorter than one item may hold no item at all
            try:
                p = deterministic_partition(n, g)
            except ValueError:
                return
        else:
            p = deterministic_partition(n, g)
        assert np.all(np.abs(p.sizes - g * n) < 1.0)
        assert np.all(np.diff(p.labels) >= 0)


class TestSpecs:
    def test_irreducibility(self):
        assert check_irreducibility([[0.3]])
        assert check_irreducibility([[0.8, 0.1], [0.1, 0.8]])
        assert not check_irreducibility([[0.5, 0.5], [0.5, 0.5]])

    def test_validation(self):
        with pytest.raises(ValueError):
            BlockModelSpec([0.5, 0.5], [[0.5, 0.5], [0.5, 0.5]])
        with pytest.raises(ValueError):
            BlockModelSpec([0.6, 0.5], [[0.8, 0.1], [0.1, 0.8]])
        with pytest.raises(ValueError):
            BlockModelSpec([0.5, 0.5], [[0.8, 0.2], [0.1, 0.8]])
        with pytest.raises(ValueError):
            BlockModelSpec([1.0], [[1.5]])
        with pytest.raises(ValueError):
            PoissonBlockSpec([0.5, 0.5], [[-1.0, 1.0], [1.0, 2.0]])

    def test_graph_invariants(self):
        with pytest.raises(ValueError):
            Graph(np.array([[0, 1], [0, 0]]))
        with pytest.raises(ValueError):
            Graph(np.eye(2, dtype=int))
        with pytest.raises(ValueError):
            CountMatrix(np.array([[1, 0], [0, 0]]))


class TestSampling:
    def test_rng_name(self):
        assert "PCG64" in RNG_NAME

    def test_degenerate_densities(self):
        G, _ = sample_graph(BlockModelSpec([1.0], [[0.0]]), 20, seed=1)
        assert G.num_edges == 0
        G, _ = sample_graph(BlockModelSpec([1.0], [[1.0]]), 20, seed=1)
        assert G.num_edges == 190

    def test_determinism(self):
        a, _ = sample_graph(PLANTED, 50, seed=7)
        b, _ = sample_graph(PLANTED, 50, seed=7)
        c, _ = sample_graph(PLANTED, 50, seed=8)
        assert np.array_equal(a.adjacency, b.adjacency)
        assert not np.array_equal(a.adjacency, c.adjacency)

    def test_block_densities_concentrate(self):
        G, part = sample_graph(PLANTED, 200, seed=3)
        A = G.adjacency.astype(float)
        blocks = part.blocks()
        for i in range(2):
            for j in range(2):
                sub = A[np.ix_(blocks[i], blocks[j])]
                pairs = sub.size - (len(blocks[i]) if i == j else 0)
                d = PLANTED.densities[i, j]
                emp = sub.sum() / pairs
                assert abs(emp - d) <= 4 * np.sqrt(d * (1 - d) / pairs)

    def test_sample_poisson(self):
        spec = PoissonBlockSpec([0.5, 0.5], [[3.0, 0.5], [0.5, 2.0]])
        E, part = sample_poisson(spec, 200, seed=5)
        assert np.array_equal(E.entries, sample_poisson(spec, 200, seed=5)[0].entries)
        M = E.entries.astype(float)
        blocks = part.blocks()
        for i in range(2):
            for j in range(2):
                sub = M[np.ix_(blocks[i], blocks[j])]
                cells = sub.size - (len(blocks[i]) if i == j else 0)
                mean = spec.rates[i, j] * cells
                assert abs(sub.sum() - mean) <= 4 * np.sqrt(mean)
        zero, _ = sample_poisson(PoissonBlockSpec([1.0], [[0.0]]), 10, seed=0)
        assert zero.entries.sum() == 0

    def test_blowup(self):
        A, rows, cols = poisson_blowup([[0.0]], 5, seed=0)
        assert A.shape == (5, 5) and A.sum() == 0
        C = np.array([[1.0, 5.0], [5.0, 1.0]])
        A, rows, cols = poisson_blowup(C, 20, seed=2)
        assert A.shape == (40, 40)
        for i in range(2):
            for j in range(2):
                block = A[np.ix_(rows.blocks()[i], cols.blocks()[j])]
                assert abs(block.mean() - C[i, j]) <= 4 * np.sqrt(C[i, j] / block.size)
        one, _, _ = poisson_blowup(C, 1, seed=2)
        assert one.shape == (2, 2)


class TestCounterexample:
    def test_layout(self):
        assert counterexample_layout(256, 0.25) == (4, 256)
        assert counterexample_layout(100, 0.4) == (6, 96)
        with pytest.raises(ValueError):
            counterexample_layout(100, 0.5)

    def test_extremes(self):
        G, fine = sample_regularity_counterexample(64, 0.25, 0.0, seed=1)
        assert G.num_edges == 0
        ce = sample_regularity_counterexample(64, 0.25, 1.0, seed=1)
        side = ce.block_size * ce.blocks_per_side
        assert ce.graph.num_edges == side * side
        assert ce.fine.k == 2 * ce.blocks_per_side

    def test_block_pairs_all_or_nothing(self):
        ce = sample_regularity_counterexample(81, 0.25, 0.5, seed=4)
        A = ce.graph.adjacency
        blocks = ce.fine.blocks()
        for i in range(len(blocks)):
            for j in range(len(blocks)):
                sub = A[np.ix_(blocks[i], blocks[j])]
                assert sub.min() == sub.max()
