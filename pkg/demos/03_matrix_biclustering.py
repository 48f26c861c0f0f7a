"""Bi-cluster a Poisson count matrix and pick (k1, k2) by code length."""
import numpy as np

from regdec.blockmodels import Partition, poisson_blowup
from regdec.optimizer import MATRIX_STRATEGIES, argmax_k1k2, matrix_mdl_search

# a 2 x 3 rate pattern, each cell blown up to a 30 x 30 block
rates = np.array([[16.0, 4.0, 1.0],
                  [1.0, 16.0, 4.0]])
A, rows, cols = poisson_blowup(rates, 30, seed=0)
print("matrix", A.shape, "total count", int(A.sum()))

# shuffle rows and columns so the structure is hidden
rng = np.random.default_rng(1)
pr, pc = rng.permutation(A.shape[0]), rng.permutation(A.shape[1])
B = A[np.ix_(pr, pc)]

fit = argmax_k1k2(B, 2, 3, restarts=10, seed=0)
print("rows recovered:", fit.partition.same_blocks(Partition(rows.labels[pr])))
print("cols recovered:", fit.col_partition.same_blocks(Partition(cols.labels[pc])))

# estimated block means, rows and columns in fitted block order
R, C = fit.partition.matrix(), fit.col_partition.matrix()
means = (R.T @ B @ C) / np.outer(R.sum(0), C.sum(0))
print(np.round(means, 2))

for strategy in MATRIX_STRATEGIES:
    found = matrix_mdl_search(B, 5, 5, strategy=strategy, restarts=10, seed=0)
    print(f"{strategy:>20}: (k1, k2) = {found.k}, visited {len(found.scores_by_k)} pairs")
