"""Greedy search for regular decompositions.

``phi_update`` moves every node to the block where its links would be
coded most cheaply if all other nodes stayed put; ``argmax_k`` iterates it
from random starts, and ``greedy_two_part_mdl`` scans the number of blocks.
The ``*_matrix`` / ``k1k2`` variants do the same for row and column
partitions of a non-negative matrix under the Poisson model.

Costs are computed with the convention ``0 * log 0 = 0``.  A placement
that would put a link into a block pair of density 0 (or a non-link into
one of density 1) costs ``+inf``; pass ``literal_log0=True`` to charge it
nothing instead, i.e. to read ``log 0`` as ``0`` everywhere.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import xlogy

from .blockmodels import Partition, make_rng
from .codelength import (
    DEFAULT_PRECISION,
    _matrix_of,
    matrix_objective,
    summarize,
    two_part_objective,
)

MATRIX_STRATEGIES = ("diagonal-then-local", "full-grid", "alternating")
_MAX_REDRAWS = 10_000
# fresh starts per restart after Phi empties a block, before giving up
_MAX_RESTARTS_AFTER_EMPTY = 50


class SearchFailed(RuntimeError):
    """Every restart was abandoned, so no partition of the requested size was found."""


@dataclass
class RestartRecord:
    index: int
    status: str
    iterations: int
    score: float
    redraws: int = 0

    def to_dict(self):
        return {"index": self.index, "status": self.status, "iterations": self.iterations,
                "redraws": self.redraws, "score": _jsonable(self.score)}


@dataclass
class FitResult:
    """Outcome of a search; ``objective`` is the code length of the returned partition(s)."""

    partition: Partition
    k: int | tuple[int, int]
    objective: float
    score: float
    restart_index: int
    iterations: int
    converged: bool
    seed: int
    col_partition: Partition | None = None
    restarts: list[RestartRecord] = field(default_factory=list)
    formula_variant: str = "two-part"
    scores_by_k: dict = field(default_factory=dict)

    @property
    def failed_restarts(self) -> int:
        return sum(r.status.startswith("failed") for r in self.restarts)

    def to_dict(self) -> dict:
        k = list(self.k) if isinstance(self.k, tuple) else self.k
        out = {
            "k": k,
            "objective_nats": self.objective,
            "objective_bits": self.objective / math.log(2.0),
            "score_nats": _jsonable(self.score),
            "restart_index": self.restart_index,
            "restarts": len(self.restarts),
            "failed_restarts": self.failed_restarts,
            "iterations": self.iterations,
            "converged": self.converged,
            "seed": self.seed,
            "formula_variant": self.formula_variant,
        }
        if self.scores_by_k:
            out["scores_by_k"] = {_key(k_): _jsonable(v) for k_, v in self.scores_by_k.items()}
        return out


def _key(k):
    return ",".join(map(str, k)) if isinstance(k, tuple) else str(k)


def _jsonable(x):
    x = float(x)
    return x if math.isfinite(x) else None


def _restart_rng(seed: int, key: tuple, restart: int):
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(*key, restart))
    return make_rng(ss)


def _one_hot(labels, k):
    R = np.zeros((labels.size, k))
    R[np.arange(labels.size), labels] = 1.0
    return R


def _log0(P, literal_log0):
    with np.errstate(divide="ignore"):
        out = np.log(P)
    if literal_log0:
        out[P == 0] = 0.0
    return out


def _neg_weighted_log(counts, logs):
    """-counts @ logs.T with 0 * (-inf) = 0 and c * (-inf) = +inf for c > 0."""
    finite = np.where(np.isfinite(logs), logs, 0.0)
    out = -(counts @ finite.T)
    impossible = (counts > 0).astype(float) @ (~np.isfinite(logs)).astype(float).T
    out[impossible > 0] = np.inf
    return out


def node_costs(A, labels, k: int, literal_log0: bool = False) -> np.ndarray:
    """The n x k matrix L(R): cost of coding node i's pairs if it sat in block alpha.

    ``L(R) = -A R (Log P)^T - (J - I - A) R (Log(1 - P))^T`` where ``P`` is the
    block density matrix of the current partition.
    """
    M = _matrix_of(A)
    labels = np.asarray(labels)
    R = _one_hot(labels, k)
    P = summarize(M, Partition(labels, k)).densities
    links = M @ R
    non_links = R.sum(axis=0)[None, :] - R - links
    logP, log1mP = _log0(P, literal_log0), _log0(1.0 - P, literal_log0)
    return _neg_weighted_log(links, logP) + _neg_weighted_log(non_links, log1mP)


def _phi(M, labels, k, literal_log0):
    L = node_costs(M, labels, k, literal_log0)
    best = L.min(axis=1)
    score = float(best.sum())
    # np.argmin returns the smallest index among ties
    return np.argmin(L, axis=1), score


def phi_update(A, partition, literal_log0: bool = False) -> np.ndarray:
    """One synchronous reassignment step; returns the new label array.

    Every node is scored against the old partition.  The result may leave a
    block empty, in which case the labels are returned as they are.
    """
    part = partition if isinstance(partition, Partition) else Partition(partition)
    new, _ = _phi(_matrix_of(A), part.labels, part.k, literal_log0)
    return new


def phi_score(A, partition, literal_log0: bool = False) -> float:
    """sum_i min_alpha L(R)_{i alpha}, the per-restart score of ARGMAX k."""
    part = partition if isinstance(partition, Partition) else Partition(partition)
    return _phi(_matrix_of(A), part.labels, part.k, literal_log0)[1]


def _random_labels(rng, n, k):
    for _ in range(_MAX_REDRAWS):
        labels = rng.integers(0, k, size=n)
        if np.bincount(labels, minlength=k).min() > 0:
            return labels
    return None


def _better(a: float, b: float) -> bool:
    """a < b beyond rounding noise, so float ties resolve to the earlier candidate."""
    return a < b - 1e-12 * max(1.0, abs(b)) if math.isfinite(b) else a < b


def _iterate(step, state, max_iters, same):
    """Run ``state -> step(state)`` to a fixed point; returns (status, best_state, best_score, iters).

    ``step`` returns ``(next_state, score_of_state)`` or ``(None, score)``
    when the next state leaves a block empty.
    """
    previous = None
    best_state, best_score = None, math.inf
    for it in range(1, max_iters + 1):
        nxt, score = step(state)
        if best_state is None or _better(score, best_score):
            best_state, best_score = state, score
        if nxt is None:
            return "failed-empty", None, math.inf, it
        if same(nxt, state):
            return "converged", state, score, it
        if previous is not None and same(nxt, previous):
            return "cycle", best_state, best_score, it
        previous, state = state, nxt
    return "capped", best_state, best_score, max_iters


def _restart(step, draw, max_iters, same, index, fixed=None):
    """One restart: draw a start, iterate, and start afresh whenever Phi empties a block.

    Returns (RestartRecord, final_state).  With ``fixed`` the given start is
    used once and an emptied block fails the restart.
    """
    attempts = 1 if fixed is not None else _MAX_RESTARTS_AFTER_EMPTY
    its = 0
    for redraw in range(attempts):
        state = fixed if fixed is not None else draw()
        if state is None:
            return RestartRecord(index, "failed-init", its, math.inf, redraw), None
        status, best, score, used = _iterate(step, state, max_iters, same)
        its += used
        if status != "failed-empty":
            return RestartRecord(index, status, its, score, redraw), best
    return RestartRecord(index, "failed-empty", its, math.inf, attempts - 1), None


def _pick(results):
    """Smallest score wins; ties (up to rounding) go to the smallest restart index."""
    best = None
    for rec, state in results:
        if state is None:
            continue
        if best is None or _better(rec.score, best[0].score):
            best = (rec, state)
    return best


def _run_restarts(job, restarts, workers):
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(job, range(restarts)))
    return [job(r) for r in range(restarts)]


def argmax_k(A, k: int, restarts: int = 10, seed: int = 0, max_iters: int = 200,
             literal_log0: bool = False, workers: int = 1, initial=None,
             variant: str = "block-code") -> FitResult:
    """Best partition into ``k`` blocks found by iterating Phi from random starts.

    Each restart draws uniform labels (redrawing while a block is empty) and
    applies :func:`phi_update` until nothing changes, a 2-cycle appears or
    ``max_iters`` is reached.  When an update empties a block the restart
    begins again from a fresh draw, up to 50 times before it is given up.
    The restart with the smallest :func:`phi_score` is returned.

    ``initial`` optionally supplies the starting label arrays, one per restart.
    ``variant`` selects the partition cost inside the reported objective.
    """
    M = _matrix_of(A)
    n = M.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    if restarts < 1:
        raise ValueError("need at least one restart")
    if initial is not None:
        initial = [np.asarray(x, dtype=np.int64) for x in initial]
        restarts = len(initial)

    def step(labels):
        new, score = _phi(M, labels, k, literal_log0)
        if np.bincount(new, minlength=k).min() == 0:
            return None, score
        return new, score

    def job(r):
        if initial is not None:
            return _restart(step, None, max_iters, np.array_equal, r, fixed=initial[r])
        rng = _restart_rng(seed, (k,), r)
        return _restart(step, lambda: _random_labels(rng, n, k), max_iters, np.array_equal, r)

    results = _run_restarts(job, restarts, workers)
    records = [rec for rec, _ in results]
    best = _pick(results)
    if best is None:
        raise SearchFailed(f"all {restarts} restarts failed for k={k}")
    rec, labels = best
    part = Partition(labels, k)
    return FitResult(
        partition=part, k=k,
        objective=two_part_objective(M, part, ceil_likelihood=True, variant=variant),
        score=rec.score, restart_index=rec.index, iterations=rec.iterations,
        converged=rec.status == "converged", seed=seed, restarts=records,
        formula_variant=variant,
    )


def greedy_two_part_mdl(A, k_range, restarts: int = 10, seed: int = 0, max_iters: int = 200,
                        early_stop: bool = False, literal_log0: bool = False,
                        workers: int = 1, variant: str = "block-code") -> FitResult:
    """Choose the number of blocks by the two-part code ceil(likelihood) + model.

    Runs :func:`argmax_k` for each k in ``k_range`` and keeps the global
    minimiser, preferring the smaller k on ties.  With ``early_stop`` the scan
    stops at the first k whose code is longer than the previous one.  A k
    for which every restart failed is recorded with an infinite score.
    """
    ks = [int(k) for k in k_range]
    if not ks:
        raise ValueError("empty k range")
    n = _matrix_of(A).shape[0]
    if min(ks) < 1 or max(ks) > n:
        raise ValueError(f"k range must lie within [1, {n}]")
    best, scores = None, {}
    previous = math.inf
    for k in ks:
        try:
            fit = argmax_k(A, k, restarts, seed, max_iters, literal_log0, workers,
                           variant=variant)
            value = fit.objective
        except SearchFailed:
            fit, value = None, math.inf
        scores[k] = value
        if fit is not None and (best is None or value < best.objective):
            best = fit
        if early_stop and value > previous:
            break
        previous = value
    if best is None:
        raise SearchFailed("no k in the range produced a valid partition")
    best.scores_by_k = scores
    return best


# ---------------------------------------------------------------------------
# matrices


def _matrix_costs(M, rows, k1, cols, k2, literal_log0):
    R, C = _one_hot(rows, k1), _one_hot(cols, k2)
    s = summarize(M, Partition(rows, k1), Partition(cols, k2))
    P = s.densities
    logP = _log0(P, literal_log0)
    row_cost = (C.sum(axis=0) @ P.T)[None, :] + _neg_weighted_log(M @ C, logP)
    col_cost = (R.sum(axis=0) @ P)[None, :] + _neg_weighted_log(M.T @ R, logP.T)
    return row_cost, col_cost, s


def matrix_score(A, row_partition, col_partition) -> float:
    """sum_{ab} e_ab (1 - ln(e_ab / N_ab)), the per-restart score of ARGMAX (k1, k2)."""
    s = summarize(A, row_partition, col_partition)
    e = s.edge_counts
    return float(np.sum(e - xlogy(e, s.densities)))


def phi_update_matrix(A, row_partition, col_partition, literal_log0: bool = False):
    """One simultaneous update of row and column labels from the old (R, C)."""
    M = _matrix_of(A)
    rows = row_partition if isinstance(row_partition, Partition) else Partition(row_partition)
    cols = col_partition if isinstance(col_partition, Partition) else Partition(col_partition)
    row_cost, col_cost, _ = _matrix_costs(M, rows.labels, rows.k, cols.labels, cols.k, literal_log0)
    return np.argmin(row_cost, axis=1), np.argmin(col_cost, axis=1)


def argmax_k1k2(A, k1: int, k2: int, restarts: int = 10, seed: int = 0, max_iters: int = 200,
                literal_log0: bool = False, workers: int = 1,
                precision: float = DEFAULT_PRECISION, initial=None) -> FitResult:
    """Best (row, column) partition into (k1, k2) blocks from random restarts.

    Rows and columns are updated together from the previous pair.  As for
    :func:`argmax_k`, an update that empties a row or column block sends the
    restart back to a fresh random draw.
    """
    M = _matrix_of(A)
    n, m = M.shape
    if not (1 <= k1 <= n and 1 <= k2 <= m):
        raise ValueError(f"need 1 <= k1 <= {n} and 1 <= k2 <= {m}, got ({k1}, {k2})")
    if restarts < 1:
        raise ValueError("need at least one restart")
    if initial is not None:
        initial = [(np.asarray(r, dtype=np.int64), np.asarray(c, dtype=np.int64)) for r, c in initial]
        restarts = len(initial)

    def step(state):
        rows, cols = state
        row_cost, col_cost, s = _matrix_costs(M, rows, k1, cols, k2, literal_log0)
        e = s.edge_counts
        score = float(np.sum(e - xlogy(e, s.densities)))
        new = (np.argmin(row_cost, axis=1), np.argmin(col_cost, axis=1))
        if (np.bincount(new[0], minlength=k1).min() == 0
                or np.bincount(new[1], minlength=k2).min() == 0):
            return None, score
        return new, score

    def same(a, b):
        return np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])

    def job(r):
        if initial is not None:
            return _restart(step, None, max_iters, same, r, fixed=initial[r])
        rng = _restart_rng(seed, (k1, k2), r)

        def draw():
            rows, cols = _random_labels(rng, n, k1), _random_labels(rng, m, k2)
            return None if rows is None or cols is None else (rows, cols)

        return _restart(step, draw, max_iters, same, r)

    results = _run_restarts(job, restarts, workers)
    records = [rec for rec, _ in results]
    best = _pick(results)
    if best is None:
        raise SearchFailed(f"all {restarts} restarts failed for (k1, k2)=({k1}, {k2})")
    rec, (rows, cols) = best
    rp, cp = Partition(rows, k1), Partition(cols, k2)
    return FitResult(
        partition=rp, col_partition=cp, k=(k1, k2),
        objective=matrix_objective(M, rp, cp, precision),
        score=rec.score, restart_index=rec.index, iterations=rec.iterations,
        converged=rec.status == "converged", seed=seed, restarts=records,
        formula_variant="matrix-two-part",
    )


def matrix_mdl_search(A, k1_max: int, k2_max: int, strategy: str = "diagonal-then-local",
                      restarts: int = 10, seed: int = 0, max_iters: int = 200,
                      precision: float = DEFAULT_PRECISION, literal_log0: bool = False,
                      workers: int = 1) -> FitResult:
    """Search block counts (k1, k2) for the shortest two-part matrix code.

    Strategies:

    ``full-grid``
        every pair in [1, k1_max] x [1, k2_max].
    ``diagonal-then-local``
        walk (k, k) upwards until the code stops shrinking, then descend
        through the eight neighbours of the incumbent until none is better.
    ``alternating``
        from (1, 1), minimise over k1 with k2 held fixed, then over k2 with
        k1 held fixed, and repeat until the pair stops changing.

    The returned result's ``scores_by_k`` holds every visited pair.
    """
    if strategy not in MATRIX_STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}; choose from {MATRIX_STRATEGIES}")
    if k1_max < 1 or k2_max < 1:
        raise ValueError("block-count bounds must be at least 1")
    M = _matrix_of(A)
    k1_max, k2_max = min(k1_max, M.shape[0]), min(k2_max, M.shape[1])
    fits: dict[tuple[int, int], FitResult | None] = {}
    scores: dict[tuple[int, int], float] = {}

    def value(k1, k2):
        key = (k1, k2)
        if not (1 <= k1 <= k1_max and 1 <= k2 <= k2_max):
            return math.inf
        if key not in scores:
            try:
                fit = argmax_k1k2(M, k1, k2, restarts, seed, max_iters, literal_log0,
                                  workers, precision)
                fits[key], scores[key] = fit, fit.objective
            except SearchFailed:
                fits[key], scores[key] = None, math.inf
        return scores[key]

    if strategy == "full-grid":
        for k1 in range(1, k1_max + 1):
            for k2 in range(1, k2_max + 1):
                value(k1, k2)
    elif strategy == "diagonal-then-local":
        k = 1
        best = value(1, 1)
        while k < min(k1_max, k2_max) and value(k + 1, k + 1) < best:
            k += 1
            best = value(k, k)
        current = (k, k)
        while True:
            neighbours = [(current[0] + a, current[1] + b)
                          for a in (-1, 0, 1) for b in (-1, 0, 1) if a or b]
            cand = min(neighbours, key=lambda kk: (value(*kk), kk))
            if value(*cand) < value(*current):
                current = cand
            else:
                break
    else:
        current = (1, 1)
        while True:
            k1 = min(range(1, k1_max + 1), key=lambda a: (value(a, current[1]), a))
            k2 = min(range(1, k2_max + 1), key=lambda b: (value(k1, b), b))
            if (k1, k2) == current or not _better(value(k1, k2), value(*current)):
                break
            current = (k1, k2)

    finite = [(v, kk) for kk, v in scores.items() if fits.get(kk) is not None]
    if not finite:
        raise SearchFailed("no (k1, k2) pair produced a valid bi-partition")
    _, best_key = min(finite)
    result = fits[best_key]
    result.scores_by_k = dict(sorted(scores.items()))
    return result
