"""Numerical tolerances shared by the LP solver, B&B engine and branching rules."""

FEAS_TOL = 1e-6
PIVOT_TOL = 1e-9
INTEGRALITY_TOL = 1e-6

# Strong-branching product score guards.
SB_EPSILON = 1e-6
SB_INFEASIBLE_GAIN = 1e7

INF = float('inf')
