from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from django.db import models

from core.exceptions import DimensionMismatch, InvalidInstance


class LpStatus(models.TextChoices):
    OPTIMAL = 'optimal', 'Optimal'
    INFEASIBLE = 'infeasible', 'Infeasible'
    UNBOUNDED = 'unbounded', 'Unbounded'


def as_csr(rows, n_vars=None):
    if sp.issparse(rows):
        matrix = rows.tocsr()
    else:
        dense = np.asarray(rows, dtype=float)
        if dense.size == 0:
            dense = dense.reshape(0, n_vars or 0)
        matrix = sp.csr_matrix(dense)
    if matrix.dtype != np.float64:
        matrix = matrix.astype(np.float64)
    return matrix


@dataclass(frozen=True, eq=False)
class LpProblem:
    """min obj·x  s.t.  rows·x ≤ rhs,  lower ≤ x ≤ upper.

    Infinite bounds are ``±inf``. ``dense`` caches the dense constraint matrix so
    that the many bound-only variants solved during branch-and-bound share it.
    """

    obj: np.ndarray
    rows: sp.csr_matrix
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    dense: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        obj = np.asarray(self.obj, dtype=float).reshape(-1)
        n_vars = obj.size
        rows = as_csr(self.rows, n_vars)
        rhs = np.asarray(self.rhs, dtype=float).reshape(-1)
        lower = np.asarray(self.lower, dtype=float).reshape(-1)
        upper = np.asarray(self.upper, dtype=float).reshape(-1)

        if rows.shape[1] != n_vars or lower.size != n_vars or upper.size != n_vars:
            raise DimensionMismatch(
                f"{n_vars} objective coefficients but rows have {rows.shape[1]} columns, "
                f"{lower.size} lower and {upper.size} upper bounds"
            )
        if rhs.size != rows.shape[0]:
            raise DimensionMismatch(f"{rows.shape[0]} rows but {rhs.size} right-hand sides")
        if not (np.all(np.isfinite(obj)) and np.all(np.isfinite(rows.data)) and np.all(np.isfinite(rhs))):
            raise InvalidInstance("objective, constraint and right-hand-side coefficients must be finite")
        if np.any(np.isnan(lower)) or np.any(np.isnan(upper)):
            raise InvalidInstance("bounds must not be NaN")

        object.__setattr__(self, 'obj', obj)
        object.__setattr__(self, 'rows', rows)
        object.__setattr__(self, 'rhs', rhs)
        object.__setattr__(self, 'lower', lower)
        object.__setattr__(self, 'upper', upper)

    @property
    def n_vars(self):
        return self.obj.size

    @property
    def n_rows(self):
        return self.rhs.size

    def dense_rows(self):
        if self.dense is None:
            object.__setattr__(self, 'dense', self.rows.toarray())
        return self.dense

    def with_bounds(self, lower, upper):
        return LpProblem(self.obj, self.rows, self.rhs, lower, upper, dense=self.dense_rows())

    def has_crossed_bounds(self):
        return bool(np.any(self.lower > self.upper))


@dataclass(frozen=True, eq=False)
class LpResult:
    status: LpStatus
    x_star: np.ndarray = None
    obj_value: float = None
    iterations: int = 0

    @property
    def is_optimal(self):
        return self.status == LpStatus.OPTIMAL
