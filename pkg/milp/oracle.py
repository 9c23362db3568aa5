"""Exhaustive integer enumeration: the correctness oracle for small instances."""

import itertools
import logging
import math

import numpy as np

from core.constants import FEAS_TOL
from core.exceptions import InvalidInstance, TooLarge
from lp.problem import LpStatus
from lp.simplex import solve_lp

from .instance import MilpSolution, lp_relaxation, make_solution

logger = logging.getLogger(__name__)

CHUNK = 1 << 15


def enumeration_size(inst):
    size = 1
    for j in inst.int_set:
        if not (math.isfinite(inst.lower[j]) and math.isfinite(inst.upper[j])):
            raise InvalidInstance(f"integer variable {j} of '{inst.name}' is not finitely bounded")
        size *= int(inst.upper[j] - inst.lower[j]) + 1
    return size


def brute_force_solve(inst, enum_cap):
    """Global minimum over every integer assignment, or ``None`` if there is none.

    An instance whose objective is unbounded below returns
    :meth:`MilpSolution.unbounded`.

    Pure integer instances are enumerated in vectorised chunks; otherwise each
    assignment fixes the integers and the continuous remainder goes to the LP
    solver. No pruning is applied. Raises :class:`TooLarge` when the
    assignment space exceeds ``enum_cap``.
    """
    size = enumeration_size(inst)
    if size > enum_cap:
        raise TooLarge(size, enum_cap)
    if not inst.int_set:
        result = solve_lp(lp_relaxation(inst))
        if result.status == LpStatus.UNBOUNDED:
            return MilpSolution.unbounded()
        return make_solution(inst, result.x_star) if result.status == LpStatus.OPTIMAL else None
    if len(inst.int_set) == inst.n_vars:
        return _enumerate_pure(inst, size)
    return _enumerate_mixed(inst)


def _enumerate_pure(inst, size):
    lower = inst.lower.astype(np.int64)
    radix = (inst.upper - inst.lower).astype(np.int64) + 1
    dense = inst.dense_rows()
    best_x, best_obj = None, math.inf
    for start in range(0, size, CHUNK):
        codes = np.arange(start, min(start + CHUNK, size), dtype=np.int64)
        points = np.stack(np.unravel_index(codes, tuple(int(r) for r in radix)), axis=1) + lower
        feasible = np.all(points @ dense.T <= inst.rhs + FEAS_TOL, axis=1)
        if not feasible.any():
            continue
        values = points[feasible] @ inst.obj
        pick = int(np.argmin(values))
        if values[pick] < best_obj - FEAS_TOL:
            best_obj = float(values[pick])
            best_x = points[feasible][pick].astype(float)
    logger.debug("enumerated %d assignments of '%s'", size, inst.name)
    return make_solution(inst, best_x) if best_x is not None else None


def _enumerate_mixed(inst):
    relaxation = lp_relaxation(inst)
    int_set = list(inst.int_set)
    ranges = [range(int(inst.lower[j]), int(inst.upper[j]) + 1) for j in int_set]
    best = None
    for assignment in itertools.product(*ranges):
        lower, upper = inst.lower.copy(), inst.upper.copy()
        lower[int_set] = assignment
        upper[int_set] = assignment
        result = solve_lp(relaxation.with_bounds(lower, upper))
        if result.status == LpStatus.UNBOUNDED:
            logger.debug("'%s' is unbounded with integers fixed at %s", inst.name, assignment)
            return MilpSolution.unbounded()
        if result.status != LpStatus.OPTIMAL:
            continue
        if best is None or result.obj_value < best.obj_value - FEAS_TOL:
            best = make_solution(inst, result.x_star)
    return best
