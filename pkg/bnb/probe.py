import math

from lp.problem import LpStatus
from lp.simplex import solve_lp


class SolverProbe:
    """Read-only window onto a running solve for branching rules.

    Tentative child LPs solved through the probe never touch the solver's
    bounds, incumbent or node statuses.
    """

    def __init__(self, instance, relaxation, pseudocosts, gub_getter):
        self.instance = instance
        self.relaxation = relaxation
        self.pseudocosts = pseudocosts
        self._gub = gub_getter

    @property
    def gub(self):
        return self._gub()

    def child_lp(self, node, var_index, split_value, is_left):
        lower, upper = node.lower.copy(), node.upper.copy()
        if is_left:
            upper[var_index] = math.floor(split_value)
        else:
            lower[var_index] = math.ceil(split_value)
        return solve_lp(self.relaxation.with_bounds(lower, upper))

    def child_gains(self, node, var_index, split_value):
        """Objective gains of both children over the node's bound; ``inf`` for an infeasible child."""
        gains = []
        for is_left in (True, False):
            result = self.child_lp(node, var_index, split_value, is_left)
            if result.status == LpStatus.OPTIMAL:
                gains.append(max(result.obj_value - node.local_lb, 0.0))
            else:
                gains.append(math.inf)
        return tuple(gains)
