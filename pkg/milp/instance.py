import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from core.constants import FEAS_TOL, INTEGRALITY_TOL
from core.exceptions import DimensionMismatch, InvalidInstance
from lp.problem import LpProblem, as_csr

FORMAT_VERSION = 1


@dataclass(frozen=True, eq=False)
class MilpInstance:
    """``min obj·x  s.t.  rows·x ≤ rhs,  lower ≤ x ≤ upper,  x_j ∈ ℤ for j ∈ int_set``.

    Maximisation problems are stored negated; the name records the flip.
    Instances are immutable once built.
    """

    name: str
    obj: np.ndarray
    rows: sp.csr_matrix
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    int_set: tuple = ()
    _dense: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        obj = np.asarray(self.obj, dtype=float).reshape(-1)
        n_vars = obj.size
        rows = as_csr(self.rows, n_vars)
        rhs = np.asarray(self.rhs, dtype=float).reshape(-1)
        lower = np.asarray(self.lower, dtype=float).reshape(-1)
        upper = np.asarray(self.upper, dtype=float).reshape(-1)
        int_set = tuple(int(j) for j in self.int_set)

        if rows.shape[1] != n_vars or lower.size != n_vars or upper.size != n_vars:
            raise DimensionMismatch(f"instance '{self.name}': inconsistent variable count")
        if rhs.size != rows.shape[0]:
            raise DimensionMismatch(f"instance '{self.name}': {rows.shape[0]} rows, {rhs.size} rhs")
        if any(b <= a for a, b in zip(int_set, int_set[1:])):
            raise InvalidInstance(f"instance '{self.name}': int_set must be strictly increasing")
        if int_set and (int_set[0] < 0 or int_set[-1] >= n_vars):
            raise InvalidInstance(f"instance '{self.name}': int_set index out of range")
        for j in int_set:
            for bound in (lower[j], upper[j]):
                if math.isfinite(bound) and bound != math.floor(bound):
                    raise InvalidInstance(
                        f"instance '{self.name}': integer variable {j} has fractional bound {bound}"
                    )

        object.__setattr__(self, 'obj', obj)
        object.__setattr__(self, 'rows', rows)
        object.__setattr__(self, 'rhs', rhs)
        object.__setattr__(self, 'lower', lower)
        object.__setattr__(self, 'upper', upper)
        object.__setattr__(self, 'int_set', int_set)

    @property
    def n_vars(self):
        return self.obj.size

    @property
    def n_rows(self):
        return self.rhs.size

    @property
    def int_mask(self):
        mask = np.zeros(self.n_vars, dtype=bool)
        mask[list(self.int_set)] = True
        return mask

    def dense_rows(self):
        if self._dense is None:
            object.__setattr__(self, '_dense', self.rows.toarray())
        return self._dense

    def __eq__(self, other):
        if not isinstance(other, MilpInstance):
            return NotImplemented
        return (
            self.name == other.name
            and self.int_set == other.int_set
            and self.rows.shape == other.rows.shape
            and np.array_equal(self.obj, other.obj)
            and np.array_equal(self.rhs, other.rhs)
            and np.array_equal(self.lower, other.lower)
            and np.array_equal(self.upper, other.upper)
            and (self.rows != other.rows).nnz == 0
        )

    __hash__ = None


class MilpSolution(NamedTuple):
    x: np.ndarray
    obj_value: float
    is_feasible: bool

    @property
    def is_unbounded(self):
        return self.obj_value == -math.inf

    @classmethod
    def unbounded(cls):
        """Feasible with no finite optimum; there is no point to report."""
        return cls(None, -math.inf, True)


class FeasibilityCheck(NamedTuple):
    is_feasible: bool
    max_violation: float


def lp_relaxation(inst):
    """The instance with integrality dropped."""
    return LpProblem(inst.obj, inst.rows, inst.rhs, inst.lower, inst.upper, dense=inst.dense_rows())


def check_feasible(inst, x):
    """Row, bound and integrality residuals of ``x``; feasible iff all within tolerance.

    ``max_violation`` is the worst residual of any kind.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != inst.n_vars:
        raise DimensionMismatch(f"point has {x.size} entries, instance has {inst.n_vars} variables")

    row_violation = np.maximum(inst.rows @ x - inst.rhs, 0.0)
    bound_violation = np.maximum(np.maximum(inst.lower - x, x - inst.upper), 0.0)
    int_values = x[list(inst.int_set)]
    int_violation = np.abs(int_values - np.round(int_values))

    worst_row = float(row_violation.max(initial=0.0))
    worst_bound = float(bound_violation.max(initial=0.0))
    worst_int = float(int_violation.max(initial=0.0))
    feasible = worst_row <= FEAS_TOL and worst_bound <= FEAS_TOL and worst_int <= INTEGRALITY_TOL
    return FeasibilityCheck(feasible, max(worst_row, worst_bound, worst_int))


def make_solution(inst, x):
    x = np.asarray(x, dtype=float)
    return MilpSolution(x, float(inst.obj @ x), check_feasible(inst, x).is_feasible)
