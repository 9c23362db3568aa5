"""Dense bounded-variable primal simplex.

Rows are brought to equality form ``A x + s = b`` with slacks ``s ≥ 0``.
Structural variables start nonbasic at a finite bound (or at zero when free);
rows violated by that starting point get an artificial column and a Phase-1
objective minimising the artificials. Phase 2 then optimises the real
objective with the artificials fixed at zero.

Entering variables follow Dantzig's largest-reduced-cost rule until a run of
degenerate pivots exceeds ``DEGENERATE_LIMIT``, after which Bland's
smallest-index rule takes over for the rest of the phase.
"""

import logging

import numpy as np

from core.constants import FEAS_TOL, PIVOT_TOL
from core.exceptions import NumericalBreakdown

from .problem import LpResult, LpStatus

logger = logging.getLogger(__name__)

DUAL_TOL = 1e-9
RATIO_TIE_TOL = 1e-12
DEGENERATE_LIMIT = 50
REINVERT_EVERY = 50


def solve_lp(problem):
    """Solve ``problem`` and return an :class:`LpResult`.

    Deterministic for a fixed input. Raises :class:`NumericalBreakdown` when no
    acceptable pivot can be found even after re-inverting the basis and
    switching to Bland's rule.
    """
    if problem.has_crossed_bounds():
        return LpResult(LpStatus.INFEASIBLE)
    return _BoundedSimplex(problem).run()


class _BoundedSimplex:

    def __init__(self, problem):
        self.problem = problem
        m, n = problem.n_rows, problem.n_vars
        a = problem.dense_rows()
        b = problem.rhs
        lower, upper = problem.lower, problem.upper

        start = np.where(np.isfinite(lower), lower, np.where(np.isfinite(upper), upper, 0.0))
        residual = b - a @ start if m else np.zeros(0)
        violated = np.flatnonzero(residual < 0)
        k = violated.size

        self.m, self.n, self.k = m, n, k
        self.n_total = n + m + k
        self.matrix = np.zeros((m, self.n_total))
        self.matrix[:, :n] = a
        self.matrix[:, n:n + m] = np.eye(m)
        self.matrix[violated, n + m + np.arange(k)] = -1.0
        self.b = b

        self.lo = np.concatenate([lower, np.zeros(m + k)])
        self.up = np.concatenate([upper, np.full(m + k, np.inf)])
        self.x = np.concatenate([start, np.zeros(m + k)])
        self.at_upper = np.zeros(self.n_total, dtype=bool)
        self.at_upper[:n] = ~np.isfinite(lower) & np.isfinite(upper)

        basis = np.arange(n, n + m)
        basis[violated] = n + m + np.arange(k)
        self.basis = basis
        self.is_basic = np.zeros(self.n_total, dtype=bool)
        self.is_basic[basis] = True

        self.iterations = 0
        self.max_iterations = max(1000, 20 * (m + self.n_total))
        self._reinvert()

    # -- linear algebra -------------------------------------------------

    def _reinvert(self):
        """Rebuild the tableau and basic values from the original matrix."""
        if self.m == 0:
            self.tableau = np.zeros((0, self.n_total))
            return
        basis_matrix = self.matrix[:, self.basis]
        try:
            self.tableau = np.linalg.solve(basis_matrix, self.matrix)
            basic_rhs = np.linalg.solve(basis_matrix, self.b)
        except np.linalg.LinAlgError as exc:
            raise NumericalBreakdown(f"singular basis after {self.iterations} iterations") from exc
        if not (np.all(np.isfinite(self.tableau)) and np.all(np.isfinite(basic_rhs))):
            raise NumericalBreakdown(f"non-finite tableau after {self.iterations} iterations")
        nonbasic = ~self.is_basic
        self.x[self.basis] = basic_rhs - self.tableau[:, nonbasic] @ self.x[nonbasic]

    def _pivot(self, row, col):
        tableau = self.tableau
        tableau[row] /= tableau[row, col]
        factors = tableau[:, col].copy()
        factors[row] = 0.0
        tableau -= np.outer(factors, tableau[row])
        leaving = self.basis[row]
        self.is_basic[leaving] = False
        self.is_basic[col] = True
        self.at_upper[col] = False
        self.basis[row] = col

    # -- pricing --------------------------------------------------------

    def _entering(self, reduced, bland):
        """Return (column, direction) of the entering variable or (None, 0)."""
        movable = ~self.is_basic & (self.lo < self.up)
        finite_lo = np.isfinite(self.lo)
        finite_up = np.isfinite(self.up)
        free = movable & ~finite_lo & ~finite_up
        at_up = movable & self.at_upper & finite_up
        at_lo = movable & ~at_up & ~free

        gain = np.zeros(self.n_total)
        gain[at_lo] = np.maximum(-reduced[at_lo], 0.0)
        gain[at_up] = np.maximum(reduced[at_up], 0.0)
        gain[free] = np.abs(reduced[free])
        eligible = np.flatnonzero(gain > DUAL_TOL)
        if eligible.size == 0:
            return None, 0
        col = int(eligible[0]) if bland else int(eligible[np.argmax(gain[eligible])])
        if free[col]:
            direction = 1 if reduced[col] < 0 else -1
        else:
            direction = -1 if at_up[col] else 1
        return col, direction

    def _ratio_test(self, col, direction, bland):
        """Return (step, leaving row or None for a bound flip, leaves at upper, ambiguous).

        ``ambiguous`` is set when the only possible blockers have sub-tolerance
        pivot elements.
        """
        step_flip = self.up[col] - self.lo[col]
        if not np.isfinite(step_flip):
            step_flip = np.inf

        if self.m == 0:
            return step_flip, None, False, False

        alpha = self.tableau[:, col] * direction
        basic = self.basis
        values = self.x[basic]
        ratios = np.full(self.m, np.inf)
        to_upper = np.zeros(self.m, dtype=bool)

        falling = (alpha > PIVOT_TOL) & np.isfinite(self.lo[basic])
        ratios[falling] = (values[falling] - self.lo[basic][falling]) / alpha[falling]
        rising = (alpha < -PIVOT_TOL) & np.isfinite(self.up[basic])
        ratios[rising] = (self.up[basic][rising] - values[rising]) / -alpha[rising]
        to_upper[rising] = True
        ratios = np.maximum(ratios, 0.0)

        tiny = (np.abs(alpha) > 0) & (np.abs(alpha) <= PIVOT_TOL)
        best = ratios.min()
        if step_flip <= best:
            return step_flip, None, False, bool(tiny.any()) and not np.isfinite(step_flip)
        if not np.isfinite(best):
            return np.inf, None, False, bool(tiny.any())

        ties = np.flatnonzero(ratios <= best + RATIO_TIE_TOL)
        if bland:
            row = int(ties[np.argmin(basic[ties])])
        else:
            row = int(ties[np.argmax(np.abs(alpha[ties]))])
        return best, row, bool(to_upper[row]), False

    # -- driver ---------------------------------------------------------

    def _optimise(self, cost):
        bland = False
        degenerate_run = 0
        escalated = False
        since_reinvert = 0
        while True:
            if self.iterations >= self.max_iterations:
                raise NumericalBreakdown(f"iteration limit {self.max_iterations} reached")
            if since_reinvert >= REINVERT_EVERY:
                self._reinvert()
                since_reinvert = 0

            reduced = cost - cost[self.basis] @ self.tableau if self.m else cost.copy()
            reduced[self.is_basic] = 0.0
            col, direction = self._entering(reduced, bland)
            if col is None:
                return LpStatus.OPTIMAL

            step, row, leaves_upper, ambiguous = self._ratio_test(col, direction, bland)
            if ambiguous:
                # Only sub-tolerance pivots could block this ray: re-invert, go Bland, retry once.
                if escalated:
                    raise NumericalBreakdown(
                        f"pivot magnitude below {PIVOT_TOL} on column {col} after rule escalation"
                    )
                escalated = True
                bland = True
                self._reinvert()
                since_reinvert = 0
                continue
            if not np.isfinite(step):
                return LpStatus.UNBOUNDED
            escalated = False

            if self.m:
                self.x[self.basis] -= step * direction * self.tableau[:, col]
            if row is None:
                self.at_upper[col] = direction > 0
                self.x[col] = self.up[col] if direction > 0 else self.lo[col]
            else:
                self.x[col] += direction * step
                leaving = self.basis[row]
                self._pivot(row, col)
                self.at_upper[leaving] = leaves_upper
                self.x[leaving] = self.up[leaving] if leaves_upper else self.lo[leaving]

            self.iterations += 1
            since_reinvert += 1
            if step <= RATIO_TIE_TOL:
                degenerate_run += 1
                if degenerate_run > DEGENERATE_LIMIT and not bland:
                    logger.debug("switching to Bland's rule after %d degenerate pivots", degenerate_run)
                    bland = True
            else:
                degenerate_run = 0

    def run(self):
        n, m, k = self.n, self.m, self.k
        if k:
            phase_one = np.zeros(self.n_total)
            phase_one[n + m:] = 1.0
            status = self._optimise(phase_one)
            if status != LpStatus.OPTIMAL:
                raise NumericalBreakdown("phase 1 reported an unbounded auxiliary problem")
            self._reinvert()
            infeasibility = float(self.x[n + m:].sum())
            scale = max(1.0, float(np.abs(self.b).max()) if m else 1.0)
            if infeasibility > FEAS_TOL * scale:
                return LpResult(LpStatus.INFEASIBLE, iterations=self.iterations)
            self.up[n + m:] = 0.0
            self.x[n + m:] = np.where(self.is_basic[n + m:], self.x[n + m:], 0.0)

        phase_two = np.zeros(self.n_total)
        phase_two[:n] = self.problem.obj
        status = self._optimise(phase_two)
        if status == LpStatus.UNBOUNDED:
            return LpResult(LpStatus.UNBOUNDED, iterations=self.iterations)

        self._reinvert()
        x_star = np.clip(self.x[:n], self.problem.lower, self.problem.upper)
        obj_value = float(self.problem.obj @ x_star)
        logger.debug("LP optimal after %d iterations: %.9g", self.iterations, obj_value)
        return LpResult(LpStatus.OPTIMAL, x_star=x_star, obj_value=obj_value, iterations=self.iterations)
