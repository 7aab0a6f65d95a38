"""Estimating the inefficiency of equilibria on random graphs.

For each instance the worst equilibrium found by randomized dynamics is compared with the
pooled-budget optimum; the table reports the mean ratio and the maximum ratio.
"""
from dspi import experiments as ex

instances = ex.random_instances(6, 3, 0.3, count=8, seed=5)
report = ex.efficiency_study(instances, runs_per_instance=5, seed=5)
for row in report.rows:
    print(f"{row.name}: central {row.central:.3f}  worst equilibrium {row.worst:.3f}  ratio {ex.fmt(row.p)}")
print(f"\nmean ratio {report.ael:.3f}, max ratio {report.poa:.3f}")
