"""A two-player payoff table with no pure equilibrium, and the deviation loop that proves it."""
from dspi import experiments as ex

arr = ex.payoff_array(ex.EXAMPLE1_PAYOFFS)
print("rows", ex.EXAMPLE1_ROWS, "cols", ex.EXAMPLE1_COLS)
print("pure equilibria:", ex.check_pne_bimatrix(arr) or "none")

cycle = ex.deviation_cycle(arr)
print("deviation loop:", " -> ".join(f"({ex.EXAMPLE1_ROWS[i]}; {ex.EXAMPLE1_COLS[j]})" for i, j in cycle))
