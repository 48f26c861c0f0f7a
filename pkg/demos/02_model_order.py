"""Code length as a function of k, with and without structure.

A planted graph has a clear minimum at its true k.  An Erdos-Renyi graph
has nothing to find, and the shortest code is the single block.
"""
from regdec import BlockModelSpec, sample_graph
from regdec.optimizer import greedy_two_part_mdl

planted = BlockModelSpec([0.3, 0.3, 0.4], [[0.7, 0.1, 0.05],
                                           [0.1, 0.6, 0.1],
                                           [0.05, 0.1, 0.5]])
flat = BlockModelSpec([1.0], [[0.3]])

for name, spec, n in (("three blocks", planted, 150), ("Erdos-Renyi", flat, 60)):
    G, _ = sample_graph(spec, n, seed=7)
    fit = greedy_two_part_mdl(G, range(1, 7), restarts=8, seed=3)
    best = min(fit.scores_by_k.values())
    print(name)
    for k, nats in sorted(fit.scores_by_k.items()):
        bar = "#" * int(min(60, (nats - best) / 20))
        print(f"  k={k}  +{nats - best:8.1f} nats  {bar}")
    print("  selected k =", fit.k)

# early stopping halts at the first k whose code grows
G, _ = sample_graph(planted, 150, seed=7)
quick = greedy_two_part_mdl(G, range(1, 7), restarts=8, seed=3, early_stop=True)
print("early stop visited k =", sorted(quick.scores_by_k), "-> k =", quick.k)
