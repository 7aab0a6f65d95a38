"""Two ways to an equilibrium on a small ladder: Lemke's method and best-response dynamics.

Both should land on profiles that no agent can improve, though not necessarily the same one.
"""
import numpy as np

from dspi import gen_ladder, gauss_seidel, solve_lcp, verify_equilibrium
from dspi.instance import obstruction_values, social_welfare
from dspi.solvers import centralized_continuous

inst = gen_ladder(3)
print(f"ladder with {inst.n_agents} agents, {inst.n_arcs} arcs")

stacked, sol, x_lcp = solve_lcp(inst)
print(f"\nLemke: dimension {stacked.problem.dim}, {sol.pivots} pivots, status {sol.status}")
print("  path lengths", np.round(obstruction_values(inst, x_lcp), 4))
print("  max gain from deviating", f"{verify_equilibrium(inst, x_lcp).max_gap:.1e}")

trace = gauss_seidel(inst)
print(f"\nGauss-Seidel: {trace.status} after {trace.n_outer} sweeps")
print("  path lengths", np.round(obstruction_values(inst, trace.final), 4))
print("  max gain from deviating", f"{verify_equilibrium(inst, trace.final).max_gap:.1e}")

central, _ = centralized_continuous(inst)
worst = min(social_welfare(inst, x_lcp), social_welfare(inst, trace.final))
print(f"\npooled-budget optimum {central:.4f} vs worst equilibrium seen {worst:.4f}")
