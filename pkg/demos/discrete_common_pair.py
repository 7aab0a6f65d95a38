"""Binary interdiction with a shared source and target: dynamics always stop, and at a true equilibrium.

Every profile is checked against exhaustive enumeration of pure equilibria.
"""
import numpy as np

from dspi import DISCRETE, RandomSpec, gauss_seidel, gen_random
from dspi import experiments as ex
from dspi.solvers import centralized_discrete

for i in range(5):
    inst = gen_random(RandomSpec(6, 0.3, 2, seed=1, index=i, mode=DISCRETE, common_pair=True,
                                 integral=True, budget_fraction=(0.04, 0.1)))
    trace = gauss_seidel(inst)
    pne = ex.pne_exhaustive(inst)
    hit = any(np.array_equal(p, trace.final) for p in pne)
    central, _ = centralized_discrete(inst)
    print(f"instance {i}: {trace.status} in {trace.n_outer} sweeps, "
          f"{len(pne)} pure equilibria, reached one: {hit}, central optimum {central:g}")
