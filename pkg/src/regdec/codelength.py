"""Description lengths of graphs and matrices under block models.

Covers the five-part block-model codes for graphs and Poisson count
matrices, the two-part objectives driven by the search algorithms, the
expected description length of a Poisson mean matrix, and the bounds on
the parametric complexity of the model space.  All values are in nats.

Two partition-cost conventions coexist and are selected by name:

``"block-code"``
    ``|V| H(xi)`` -- the Shannon entropy of the block-size distribution.
``"two-part"``
    ``sum_i n_i H(n_i / n)`` with the binary entropy ``H``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from .blockmodels import CountMatrix, Graph, Partition
from .infotheory import (
    LN2,
    binary_entropy,
    log_star,
    partition_entropy,
    poisson_entropy,
    poisson_kl,
)

FORMULA_VARIANTS = ("block-code", "two-part")
INTEGER_CODES = ("lstar", "log")
DEFAULT_PRECISION = math.log(1e6)


@dataclass(frozen=True)
class CodeLengthBreakdown:
    L1: float
    L2: float
    L3: float
    L4: float
    L5: float
    formula_variant: str = "block-code"

    @property
    def total(self) -> float:
        return self.L1 + self.L2 + self.L3 + self.L4 + self.L5

    @property
    def edge_part(self) -> float:
        """L4 + L5, the likelihood part of the code."""
        return self.L4 + self.L5

    def to_dict(self, units: str = "nats") -> dict:
        if units not in ("nats", "bits"):
            raise ValueError("units must be 'nats' or 'bits'")
        scale = 1.0 if units == "nats" else 1.0 / LN2
        parts = {name: getattr(self, name) * scale for name in ("L1", "L2", "L3", "L4", "L5")}
        parts["total"] = self.total * scale
        parts["units"] = units
        parts["formula_variant"] = self.formula_variant
        return parts


@dataclass(frozen=True)
class BlockSummary:
    """Block sizes, link counts and densities of a (bi)partitioned matrix.

    For the symmetric case the diagonal of ``edge_counts`` holds the number of
    links inside each block and ``pair_counts`` the number of available pairs,
    ``C(n_i, 2)`` on the diagonal and ``n_i n_j`` off it.  For rectangular
    matrices ``col_sizes`` is set and ``pair_counts[a, b] = n_a m_b``.
    """

    sizes: np.ndarray
    edge_counts: np.ndarray
    pair_counts: np.ndarray
    densities: np.ndarray
    col_sizes: np.ndarray | None = None

    @property
    def symmetric(self) -> bool:
        return self.col_sizes is None


def _matrix_of(A) -> np.ndarray:
    if isinstance(A, Graph):
        return A.adjacency.astype(float)
    if isinstance(A, CountMatrix):
        return A.entries.astype(float)
    M = np.asarray(A, dtype=float)
    if M.ndim != 2:
        raise ValueError("expected a 2-d matrix")
    return M


def _as_partition(part, n: int) -> Partition:
    if not isinstance(part, Partition):
        part = np.asarray(part)
        if part.ndim == 2:
            if not np.all(part.sum(axis=1) == 1):
                raise ValueError("assignment matrix rows must sum to one")
            part = Partition(np.argmax(part, axis=1), part.shape[1])
        else:
            part = Partition(part)
    if part.n != n:
        raise ValueError(f"partition covers {part.n} items, matrix has {n}")
    return part


def _safe_divide(num, den):
    out = np.zeros_like(num, dtype=float)
    np.divide(num, den, out=out, where=den > 0)
    return out


def summarize(A, partition, col_partition=None) -> BlockSummary:
    """Per-block counts and densities of ``A`` under the given partition(s)."""
    M = _matrix_of(A)
    if col_partition is None:
        if M.shape[0] != M.shape[1]:
            raise ValueError("a rectangular matrix needs a column partition")
        part = _as_partition(partition, M.shape[0])
        R = part.matrix()
        P1 = R.T @ M @ R
        counts = P1.copy()
        counts[np.diag_indices_from(counts)] *= 0.5
        sizes = part.sizes.astype(float)
        pairs = np.outer(sizes, sizes)
        pairs[np.diag_indices_from(pairs)] = sizes * (sizes - 1) / 2.0
        return BlockSummary(part.sizes, counts, pairs, _safe_divide(counts, pairs))
    rows = _as_partition(partition, M.shape[0])
    cols = _as_partition(col_partition, M.shape[1])
    counts = rows.matrix().T @ M @ cols.matrix()
    pairs = np.outer(rows.sizes, cols.sizes).astype(float)
    return BlockSummary(rows.sizes, counts, pairs, _safe_divide(counts, pairs), cols.sizes)


def partition_cost(sizes, variant: str = "block-code") -> float:
    """Code length of the node-to-block membership under either convention."""
    sizes = np.asarray(sizes, dtype=float)
    if variant == "block-code":
        return float(sizes.sum() * partition_entropy(sizes))
    if variant == "two-part":
        return float(np.sum(sizes * binary_entropy(sizes / sizes.sum())))
    raise ValueError(f"unknown formula variant {variant!r}; choose from {FORMULA_VARIANTS}")


def count_code(x, integer_code: str = "lstar") -> float:
    """Code length of a non-negative count; zero costs nothing.

    Counts are rounded to the nearest integer first, since they are exact
    link counts that floating arithmetic may have blurred.
    """
    m = int(round(float(x)))
    if m < 0:
        raise ValueError("counts must be non-negative")
    if m == 0:
        return 0.0
    if integer_code == "lstar":
        return log_star(m)
    if integer_code == "log":
        return math.log(m)
    raise ValueError(f"unknown integer code {integer_code!r}; choose from {INTEGER_CODES}")


def _upper_triangle(M):
    iu = np.triu_indices(M.shape[0], 1)
    return M[iu]


def _symmetric_summary(A, partition) -> tuple[BlockSummary, Partition]:
    M = _matrix_of(A)
    part = _as_partition(partition, M.shape[0])
    return summarize(M, part), part


def graph_block_code(G, partition, variant: str = "block-code",
                     integer_code: str = "lstar") -> CodeLengthBreakdown:
    """Five-part block-model code length L(G | xi) of a simple graph."""
    s, part = _symmetric_summary(G, partition)
    diag_counts = np.diag(s.edge_counts)
    off_counts = _upper_triangle(s.edge_counts)
    L1 = sum(count_code(b, integer_code) for b in part.sizes)
    L2 = (sum(count_code(e, integer_code) for e in diag_counts)
          + sum(count_code(e, integer_code) for e in off_counts))
    L3 = partition_cost(part.sizes, variant)
    L4 = float(np.sum(np.diag(s.pair_counts) * binary_entropy(np.diag(s.densities))))
    L5 = float(np.sum(_upper_triangle(s.pair_counts) * binary_entropy(_upper_triangle(s.densities))))
    return CodeLengthBreakdown(L1, L2, L3, L4, L5, variant)


def poisson_block_code(E, partition, variant: str = "block-code",
                       integer_code: str = "log") -> CodeLengthBreakdown:
    """Five-part code length L(E | eta) of a symmetric count matrix.

    Block means a(B) and a(B, B') replace the link densities and the Poisson
    entropy replaces the binary one.  Sizes and block sums are coded with
    plain logarithms by default.
    """
    s, part = _symmetric_summary(E, partition)
    L1 = sum(count_code(b, integer_code) for b in part.sizes)
    L2 = (sum(count_code(e, integer_code) for e in np.diag(s.edge_counts))
          + sum(count_code(e, integer_code) for e in _upper_triangle(s.edge_counts)))
    L3 = partition_cost(part.sizes, variant)
    L4 = float(np.sum(np.diag(s.pair_counts) * poisson_entropy(np.diag(s.densities))))
    L5 = float(np.sum(_upper_triangle(s.pair_counts) * poisson_entropy(_upper_triangle(s.densities))))
    return CodeLengthBreakdown(L1, L2, L3, L4, L5, variant)


def edge_code(G, partition) -> float:
    """L4 + L5: the binomial log-likelihood part of the graph code."""
    s, _ = _symmetric_summary(G, partition)
    return float(np.sum(np.triu(s.pair_counts) * binary_entropy(np.triu(s.densities))))


def two_part_terms(G, partition, variant: str = "two-part") -> tuple[float, float]:
    """(likelihood, model) parts of the algorithmic two-part code l_k(G | R).

    likelihood = sum_{i<j} n_i n_j H(P_ij) + sum_i C(n_i, 2) H(P_ii)
    model      = sum_i n_i H(n_i / n) + sum_{i<=j} l*(e_ij)

    ``variant="block-code"`` swaps the first model term for ``n H(xi)``.
    """
    s, part = _symmetric_summary(G, partition)
    likelihood = float(np.sum(np.triu(s.pair_counts) * binary_entropy(np.triu(s.densities))))
    model = partition_cost(part.sizes, variant)
    model += sum(count_code(e) for e in s.edge_counts[np.triu_indices(part.k)])
    return likelihood, model


def two_part_objective(G, partition, ceil_likelihood: bool = False,
                       variant: str = "two-part") -> float:
    """l_k(G | R): likelihood part plus model part.

    With ``ceil_likelihood=True`` the likelihood part is rounded up first,
    which is the score the greedy model-order search compares across k.
    """
    likelihood, model = two_part_terms(G, partition, variant)
    if ceil_likelihood:
        likelihood = math.ceil(likelihood)
    return likelihood + model


def matrix_terms(A, row_partition, col_partition,
                 precision: float = DEFAULT_PRECISION) -> dict[str, float]:
    """The separate terms of the two-part matrix code l_{k1,k2}(A | R, C)."""
    s = summarize(A, row_partition, col_partition)
    if np.any(_matrix_of(A) < 0):
        raise ValueError("matrix entries must be non-negative")
    e = s.edge_counts
    with np.errstate(divide="ignore", invalid="ignore"):
        likelihood = float(np.sum(e - xlogy(e, s.densities)))
    counts = sum(count_code(math.floor(x + 1e-9)) for x in e.ravel())
    n_rows, n_cols = s.sizes.sum(), s.col_sizes.sum()
    rows = float(np.sum(s.sizes * binary_entropy(s.sizes / n_rows)))
    cols = float(np.sum(s.col_sizes * binary_entropy(s.col_sizes / n_cols)))
    return {
        "likelihood": likelihood,
        "block_sums": counts,
        "row_partition": rows,
        "col_partition": cols,
        "precision": e.size * precision,
    }


def matrix_objective(A, row_partition, col_partition,
                     precision: float = DEFAULT_PRECISION) -> float:
    """Two-part code length of a non-negative matrix under a bi-partition.

    ``sum e_ab (1 - ln P_ab) + l*([e_ab]) + sum n_a H(n_a/n) + sum m_b H(m_b/m)
    + k1 k2 c`` where ``c = precision`` nats is the cost of one block sum's
    decimals.  The Poisson likelihood term omits ``sum ln a_ij!``, which does
    not depend on the partitions, so the value can be negative; only
    differences between bi-partitions are meaningful.
    """
    return sum(matrix_terms(A, row_partition, col_partition, precision).values())


def block_poisson_divergence(A_mean, row_partition, col_partition) -> float:
    """sum_ij I_P(a_ij : P_{block(i), block(j)}) for a Poisson mean matrix."""
    M = _matrix_of(A_mean)
    s = summarize(M, row_partition, col_partition)
    rows = _as_partition(row_partition, M.shape[0])
    cols = _as_partition(col_partition, M.shape[1])
    fitted = s.densities[np.ix_(rows.labels, cols.labels)]
    return float(np.sum(poisson_kl(M, fitted)))


def expected_matrix_code(A_mean, row_partition, col_partition) -> float:
    """Expected description length of Poisson(A_mean) samples under (R, C).

    Divergence of the entrywise model from the block-averaged one, plus the
    two partition costs, plus ``sum ln(a_ab + 1)`` over the block sums.
    """
    M = _matrix_of(A_mean)
    if np.any(M < 0):
        raise ValueError("mean matrix entries must be non-negative")
    s = summarize(M, row_partition, col_partition)
    div = block_poisson_divergence(M, row_partition, col_partition)
    rows = partition_cost(s.sizes, "two-part")
    cols = partition_cost(s.col_sizes, "two-part")
    return div + rows + cols + float(np.sum(np.log1p(s.edge_counts)))


def _build_log_stirling2(n_max: int, k_max: int) -> np.ndarray:
    table = np.full((n_max + 1, k_max + 1), -np.inf)
    table[0, 0] = 0.0
    log_j = np.log(np.arange(1, k_max + 1, dtype=float))
    for n in range(1, n_max + 1):
        prev = table[n - 1]
        table[n, 1:] = np.logaddexp(log_j + prev[1:], prev[:-1])
    table.setflags(write=False)
    return table


_LS2 = _build_log_stirling2(64, 16)


def log_stirling2_table(n_max: int, k_max: int) -> np.ndarray:
    """ln S2(n, k) for all 0 <= n <= n_max, 0 <= k <= k_max (-inf where S2 = 0).

    A single table is kept and grown geometrically, so repeated queries are
    lookups.
    """
    global _LS2
    rows, cols = _LS2.shape
    if n_max >= rows or k_max >= cols:
        # grow only the axis that is too short, doubling it
        n_new = max(int(n_max), 2 * (rows - 1)) if n_max >= rows else rows - 1
        k_new = max(int(k_max), 2 * (cols - 1)) if k_max >= cols else cols - 1
        _LS2 = _build_log_stirling2(n_new, k_new)
    return _LS2[: n_max + 1, : k_max + 1]


def stirling2_exact(n: int, k: int) -> int:
    """Stirling number of the second kind by the integer recurrence."""
    if not 0 <= k <= n:
        return 0
    row = [1] + [0] * k
    for m in range(1, n + 1):
        for j in range(min(m, k), 0, -1):
            row[j] = j * row[j] + row[j - 1]
        row[0] = 0
    return row[k]


def log_stirling2(n: int, k: int, exact: bool = False) -> float:
    """ln S2(n, k) by the triangular recurrence S(n,k) = k S(n-1,k) + S(n-1,k-1)."""
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    if exact:
        return math.log(stirling2_exact(n, k))
    return float(log_stirling2_table(n, k)[n, k])


def _bound_pieces(n: int, k: int):
    base = math.comb(n - k + 2, 2) + 1
    exponent = math.comb(k, 2) + k
    return base, exponent


def parametric_bound(n: int, k: int, exact: bool = False) -> float:
    """m_k = l*(n) + l*(S2(n,k) (C(n-k+2, 2) + 1)^(C(k,2)+k) + 1) + one bit.

    The inner integer can have thousands of digits, so by default its
    logarithm is assembled as ln S2 + exponent * ln(base), and ``+ 1`` is
    added with ``logaddexp``.  ``exact=True`` forms the integer itself.
    The trailing bit (the ceiling allowance) is ``ln 2`` nats.
    """
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= n")
    base, exponent = _bound_pieces(n, k)
    if exact:
        inner = log_star(stirling2_exact(n, k) * base ** exponent + 1)
    else:
        y = np.logaddexp(log_stirling2(n, k) + exponent * math.log(base), 0.0)
        inner = log_star(float(y), log_domain=True)
    return log_star(n) + inner + LN2


def comp_bounds(n: int, k: int) -> tuple[float, float]:
    """Lower and upper bounds on the parametric complexity COMP(M_{n/k})."""
    return log_stirling2(n, k), parametric_bound(n, k) + LN2
