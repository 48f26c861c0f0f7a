"""How much does over-refining the planted partition shorten the data code?

Splitting true blocks at random always reduces L4 + L5 a little, but the
gain stays bounded as n grows: its distribution is dominated by a sum of
M(m) - M(k) independent ln 2 + Exp(1) terms, M(x) = x(x+1)/2.
"""
import numpy as np

from regdec import BlockModelSpec
from regdec.harness import dominance_check_appendix, refinement_gain_experiment

spec = BlockModelSpec([0.5, 0.5], [[0.8, 0.05], [0.05, 0.8]])
report = refinement_gain_experiment(spec, [100, 200, 400], m=4, trials=200, seed=5)
print("bound mean:", round(report.summary["bound_mean"], 2), "nats")
for n in (100, 200, 400):
    s = report.summary[str(n)]
    print(f"n={n:4d}  median {s['median']:.2f}  IQR [{s['q1']:.2f}, {s['q3']:.2f}]  max {s['max']:.2f}")

# empirical survival at the quantiles of the bound
for row in report.checks["400"]["dominance"]:
    print("  q={q:.2f}  t={threshold:6.2f}  empirical {empirical_survival:.3f}"
          "  bound {bound_survival:.3f}".format(**row))
print("PASS" if report.passed else "FAIL")

# the same kind of bound for pooling binomial and Poisson samples
for family, p in (("binomial", 0.3), ("poisson", 1.5)):
    r = dominance_check_appendix(3, [20, 30, 40], p, 50_000, seed=2, family=family)
    print(f"{family:>9}: mean {r.summary['mean']:.3f} vs bound mean "
          f"{r.summary['bound_mean']:.3f} -> {'PASS' if r.passed else 'FAIL'}")
