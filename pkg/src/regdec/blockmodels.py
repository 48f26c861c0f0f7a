"""Partitions, block-model specifications and seeded generators.

All generators draw from ``numpy.random.Generator(PCG64(seed))`` and consume
random numbers in a fixed order (row-major over the strict upper triangle
for symmetric models, row-major over the whole matrix for bipartite ones),
so a given ``(spec, n, seed)`` always produces the same structure.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

RNG_NAME = "numpy.random.PCG64"


def make_rng(seed) -> np.random.Generator:
    """The generator used everywhere in the package."""
    return np.random.Generator(np.random.PCG64(seed))


class Partition:
    """Assignment of ``n`` items to ``k`` non-empty blocks labelled ``0..k-1``."""

    __slots__ = ("labels", "k")

    def __init__(self, labels, k: int | None = None):
        labels = np.asarray(labels, dtype=np.int64).ravel()
        if labels.size == 0:
            raise ValueError("a partition needs at least one item")
        if labels.min() < 0:
            raise ValueError("block labels must be non-negative")
        if k is None:
            k = int(labels.max()) + 1
        if labels.max() >= k:
            raise ValueError(f"label {labels.max()} out of range for k={k}")
        counts = np.bincount(labels, minlength=k)
        if np.any(counts == 0):
            empty = np.flatnonzero(counts == 0).tolist()
            raise ValueError(f"empty blocks {empty}")
        labels.setflags(write=False)
        self.labels = labels
        self.k = int(k)

    @classmethod
    def from_blocks(cls, blocks, n: int | None = None) -> "Partition":
        blocks = [list(b) for b in blocks]
        if n is None:
            n = sum(len(b) for b in blocks)
        labels = np.full(n, -1, dtype=np.int64)
        for i, block in enumerate(blocks):
            labels[block] = i
        if np.any(labels < 0):
            raise ValueError("blocks do not cover all items")
        return cls(labels, len(blocks))

    @classmethod
    def trivial(cls, n: int) -> "Partition":
        return cls(np.zeros(n, dtype=np.int64), 1)

    @property
    def n(self) -> int:
        return self.labels.size

    @property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.k)

    def blocks(self) -> list[np.ndarray]:
        order = np.argsort(self.labels, kind="stable")
        return np.split(order, np.cumsum(self.sizes)[:-1])

    def matrix(self) -> np.ndarray:
        """The n x k binary assignment matrix with unit row sums."""
        R = np.zeros((self.n, self.k))
        R[np.arange(self.n), self.labels] = 1.0
        return R

    def canonical(self) -> "Partition":
        """Relabel blocks in order of first appearance."""
        _, first = np.unique(self.labels, return_index=True)
        order = np.argsort(first)
        relabel = np.empty(self.k, dtype=np.int64)
        relabel[order] = np.arange(self.k)
        return Partition(relabel[self.labels], self.k)

    def same_blocks(self, other: "Partition") -> bool:
        return (self.n == other.n and self.k == other.k
                and np.array_equal(self.canonical().labels, other.canonical().labels))

    def __eq__(self, other):
        if not isinstance(other, Partition):
            return NotImplemented
        return self.k == other.k and np.array_equal(self.labels, other.labels)

    def __hash__(self):
        return hash((self.k, self.labels.tobytes()))

    def __repr__(self):
        return f"Partition(n={self.n}, k={self.k}, sizes={self.sizes.tolist()})"


def check_irreducibility(matrix) -> bool:
    """True iff no two rows of the (symmetric) matrix are equal."""
    M = np.asarray(matrix, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("expected a square matrix")
    k = M.shape[0]
    for i in range(k):
        for j in range(i + 1, k):
            if np.array_equal(M[i], M[j]):
                return False
    return True


def _check_gammas(gammas) -> np.ndarray:
    g = np.asarray(gammas, dtype=float).ravel()
    if g.size == 0 or np.any(g <= 0):
        raise ValueError("relative block sizes must be positive")
    if abs(g.sum() - 1.0) > 1e-12:
        raise ValueError(f"relative block sizes sum to {g.sum()!r}, not 1")
    return g


def _check_square_symmetric(name, M, k):
    if M.shape != (k, k):
        raise ValueError(f"{name} must be {k}x{k} to match the block sizes")
    if not np.array_equal(M, M.T):
        raise ValueError(f"{name} must be symmetric")
    if not check_irreducibility(M):
        raise ValueError(f"{name} is reducible: two rows are equal")


@dataclass(frozen=True)
class BlockModelSpec:
    """Relative block sizes and the symmetric link-probability matrix."""

    gammas: np.ndarray
    densities: np.ndarray

    def __post_init__(self):
        g = _check_gammas(self.gammas)
        D = np.atleast_2d(np.asarray(self.densities, dtype=float))
        if np.any(D < 0) or np.any(D > 1):
            raise ValueError("link probabilities must lie in [0, 1]")
        _check_square_symmetric("density matrix", D, g.size)
        object.__setattr__(self, "gammas", g)
        object.__setattr__(self, "densities", D)

    @property
    def k(self) -> int:
        return self.gammas.size


@dataclass(frozen=True)
class PoissonBlockSpec:
    """Relative block sizes and the symmetric Poisson rate matrix."""

    gammas: np.ndarray
    rates: np.ndarray

    def __post_init__(self):
        g = _check_gammas(self.gammas)
        L = np.atleast_2d(np.asarray(self.rates, dtype=float))
        if np.any(L < 0) or not np.all(np.isfinite(L)):
            raise ValueError("Poisson rates must be finite and non-negative")
        _check_square_symmetric("rate matrix", L, g.size)
        object.__setattr__(self, "gammas", g)
        object.__setattr__(self, "rates", L)

    @property
    def k(self) -> int:
        return self.gammas.size


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph stored as a dense symmetric 0/1 matrix."""

    adjacency: np.ndarray = field(repr=False)

    def __post_init__(self):
        A = np.asarray(self.adjacency)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("adjacency must be square")
        if not np.all((A == 0) | (A == 1)):
            raise ValueError("adjacency must be binary")
        A = A.astype(np.int8)
        if not np.array_equal(A, A.T):
            raise ValueError("adjacency must be symmetric")
        if np.any(np.diag(A)):
            raise ValueError("simple graphs have no self-loops")
        A.setflags(write=False)
        object.__setattr__(self, "adjacency", A)

    @classmethod
    def from_edges(cls, n: int, edges) -> "Graph":
        A = np.zeros((n, n), dtype=np.int8)
        edges = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
        A[edges[:, 0], edges[:, 1]] = 1
        A[edges[:, 1], edges[:, 0]] = 1
        return cls(A)

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @property
    def num_edges(self) -> int:
        return int(np.triu(self.adjacency, 1).sum())

    def edges(self) -> np.ndarray:
        """Sorted (u, v) pairs with u < v."""
        iu, ju = np.nonzero(np.triu(self.adjacency, 1))
        return np.column_stack([iu, ju])


@dataclass(frozen=True)
class CountMatrix:
    """Symmetric non-negative integer matrix with zero diagonal."""

    entries: np.ndarray = field(repr=False)

    def __post_init__(self):
        E = np.asarray(self.entries)
        if E.ndim != 2 or E.shape[0] != E.shape[1]:
            raise ValueError("count matrix must be square")
        if not np.all(np.equal(np.mod(E, 1), 0)) or np.any(E < 0):
            raise ValueError("entries must be non-negative integers")
        E = E.astype(np.int64)
        if not np.array_equal(E, E.T):
            raise ValueError("count matrix must be symmetric")
        if np.any(np.diag(E)):
            raise ValueError("diagonal entries must be zero")
        E.setflags(write=False)
        object.__setattr__(self, "entries", E)

    @property
    def n(self) -> int:
        return self.entries.shape[0]


def deterministic_partition(n: int, gammas) -> Partition:
    """Item j (1-based) goes to block i iff j/n lies in the i-th segment of (0, 1].

    The segments have lengths ``gammas``.  Raises if some block would be empty.
    """
    if n < 1:
        raise ValueError("n must be positive")
    g = _check_gammas(gammas)
    bounds = np.cumsum(g) * n
    j = np.arange(1, n + 1, dtype=float)
    # block of j = first i with j <= n * (g_1 + ... + g_i); tolerate rounding in the cumsum
    labels = np.searchsorted(bounds, j - 1e-9 * n, side="left")
    labels = np.minimum(labels, g.size - 1)
    counts = np.bincount(labels, minlength=g.size)
    if np.any(counts == 0):
        raise ValueError(f"n too small for gammas: n={n} leaves a block empty")
    return Partition(labels, g.size)


def _upper_pair_params(labels, block_matrix):
    iu, ju = np.triu_indices(labels.size, 1)
    return iu, ju, block_matrix[labels[iu], labels[ju]]


def sample_graph(spec: BlockModelSpec, n: int, seed) -> tuple[Graph, Partition]:
    """Stochastic block model on ``n`` nodes with the deterministic block layout."""
    part = deterministic_partition(n, spec.gammas)
    rng = make_rng(seed)
    iu, ju, d = _upper_pair_params(part.labels, spec.densities)
    present = rng.random(d.size) < d
    A = np.zeros((n, n), dtype=np.int8)
    A[iu[present], ju[present]] = 1
    A[ju[present], iu[present]] = 1
    return Graph(A), part


def sample_poisson(spec: PoissonBlockSpec, n: int, seed) -> tuple[CountMatrix, Partition]:
    """Symmetric Poissonian block model: Poisson entries above the diagonal, mirrored."""
    part = deterministic_partition(n, spec.gammas)
    rng = make_rng(seed)
    iu, ju, lam = _upper_pair_params(part.labels, spec.rates)
    draws = rng.poisson(lam)
    E = np.zeros((n, n), dtype=np.int64)
    E[iu, ju] = draws
    E[ju, iu] = draws
    return CountMatrix(E), part


def sample_bipartite_poisson(rates, row_partition: Partition, col_partition: Partition,
                             seed) -> np.ndarray:
    """Rectangular matrix with independent Poisson(rates[row block, col block]) entries."""
    rates = np.asarray(rates, dtype=float)
    if rates.shape != (row_partition.k, col_partition.k):
        raise ValueError("rate matrix shape must be (row blocks, column blocks)")
    if np.any(rates < 0):
        raise ValueError("Poisson rates must be non-negative")
    rng = make_rng(seed)
    lam = rates[np.ix_(row_partition.labels, col_partition.labels)]
    return rng.poisson(lam).astype(np.int64)


def poisson_blowup(C, N: int, seed) -> tuple[np.ndarray, Partition, Partition]:
    """Blow an m x n mean matrix up into an (mN) x (nN) Poisson count matrix.

    Row i of ``C`` becomes N consecutive rows, column j becomes N consecutive
    columns; every entry in the (i, j) block is Poisson(c_ij).  Returns the
    counts together with the row and column blow-up partitions.
    """
    C = np.atleast_2d(np.asarray(C, dtype=float))
    if N < 1:
        raise ValueError("N must be a positive integer")
    if np.any(C < 0):
        raise ValueError("mean matrix entries must be non-negative")
    m, n = C.shape
    rows = Partition(np.repeat(np.arange(m), N), m)
    cols = Partition(np.repeat(np.arange(n), N), n)
    return sample_bipartite_poisson(C, rows, cols, seed), rows, cols


@dataclass(frozen=True)
class Counterexample:
    """Bipartite graph whose block pairs are all-or-nothing."""

    graph: Graph
    fine: Partition
    coarse: Partition
    block_size: int
    blocks_per_side: int
    block_links: np.ndarray = field(repr=False)

    def __iter__(self):
        # unpacks as (graph, fine partition)
        return iter((self.graph, self.fine))


def counterexample_layout(n: int, alpha: float) -> tuple[int, int]:
    """Block size floor(n^alpha) and the side length truncated to a multiple of it."""
    if not 0.0 < alpha < 0.5:
        raise ValueError("alpha must lie in (0, 1/2)")
    if n < 2:
        raise ValueError("n must be at least 2")
    b = max(1, int(np.floor(n ** alpha + 1e-9)))
    return b, (n // b) * b


def sample_regularity_counterexample(n: int, alpha: float, p: float, seed) -> Counterexample:
    """Bipartite (X, Y) graph with blocks of size n^alpha, each block pair complete w.p. p.

    X occupies nodes ``0..n'-1`` and Y nodes ``n'..2n'-1`` where n' is n
    truncated to a multiple of the block size.  ``fine`` is the partition into
    the 2 n'/b small blocks, ``coarse`` the two sides.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    b, side = counterexample_layout(n, alpha)
    per_side = side // b
    rng = make_rng(seed)
    links = rng.random((per_side, per_side)) < p
    block_of = np.repeat(np.arange(per_side), b)
    cross = links[np.ix_(block_of, block_of)].astype(np.int8)
    A = np.zeros((2 * side, 2 * side), dtype=np.int8)
    A[:side, side:] = cross
    A[side:, :side] = cross.T
    fine = Partition(np.concatenate([block_of, block_of + per_side]), 2 * per_side)
    coarse = Partition(np.repeat([0, 1], side), 2)
    return Counterexample(Graph(A), fine, coarse, b, per_side, links)
