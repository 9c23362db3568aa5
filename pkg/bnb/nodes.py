import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from django.db import models

from core.constants import INTEGRALITY_TOL
from core.exceptions import InvalidConfig


class NodeStatus(models.TextChoices):
    OPEN = 'open', 'Open'
    BRANCHED = 'branched', 'Branched'
    LEAF_INFEASIBLE = 'infeasible', 'Leaf (infeasible)'
    LEAF_PRUNED = 'pruned', 'Leaf (pruned)'
    LEAF_INTEGER_FEASIBLE = 'integer', 'Leaf (integer feasible)'

    @classmethod
    def leaves(cls):
        return (cls.LEAF_INFEASIBLE, cls.LEAF_PRUNED, cls.LEAF_INTEGER_FEASIBLE)


@dataclass(frozen=True)
class Decision:
    """What a rule saw when it chose: candidate features, candidates and the pick.

    ``chosen`` indexes into ``candidate_vars``. ``probs`` is present for
    stochastic policies.
    """

    features: np.ndarray
    candidate_vars: tuple
    chosen: int
    probs: Optional[np.ndarray] = None


@dataclass(frozen=True)
class BranchAction:
    var_index: int
    split_value: float
    decision: Optional[Decision] = field(default=None, compare=False)


@dataclass(eq=False)
class NodeState:
    """One B&B node. ``local_lb`` holds the parent's bound until the node is processed."""

    node_id: int
    parent_id: Optional[int]
    is_left_child: Optional[bool]
    depth: int
    bound_changes: tuple
    lower: np.ndarray = field(repr=False)
    upper: np.ndarray = field(repr=False)
    local_lb: float = -math.inf
    gub_at_processing: Optional[float] = None
    lp_solution: Optional[np.ndarray] = field(default=None, repr=False)
    status: NodeStatus = NodeStatus.OPEN
    children: tuple = ()
    action: Optional[BranchAction] = None
    processing_index: Optional[int] = None

    @property
    def is_processed(self):
        return self.processing_index is not None

    def times_branched_on(self, var_index):
        return sum(1 for j, _, _ in self.bound_changes if j == var_index)


def fractional_candidates(node, int_set):
    """Integer variables whose LP value is fractional beyond tolerance, ascending by index."""
    x = node.lp_solution
    if x is None:
        return []
    candidates = []
    for j in int_set:
        value = float(x[j])
        if abs(value - round(value)) > INTEGRALITY_TOL:
            candidates.append((j, value))
    return candidates


def child_states(parent, action, left_id, right_id):
    """Left child gets ``x_j ≤ ⌊v⌋``, right child ``x_j ≥ ⌈v⌉``; everything else is inherited."""
    j, value = action.var_index, action.split_value
    floor, ceil = math.floor(value), math.ceil(value)
    if abs(value - round(value)) <= INTEGRALITY_TOL:
        raise InvalidConfig(f"cannot branch on x{j} = {value}: value is integral")
    if not (parent.lower[j] <= floor and ceil <= parent.upper[j]):
        raise InvalidConfig(f"split value {value} of x{j} lies outside [{parent.lower[j]}, {parent.upper[j]}]")

    left_upper = parent.upper.copy()
    left_upper[j] = floor
    right_lower = parent.lower.copy()
    right_lower[j] = ceil
    left = NodeState(
        left_id, parent.node_id, True, parent.depth + 1,
        parent.bound_changes + ((j, 'upper', float(floor)),),
        parent.lower, left_upper, local_lb=parent.local_lb,
    )
    right = NodeState(
        right_id, parent.node_id, False, parent.depth + 1,
        parent.bound_changes + ((j, 'lower', float(ceil)),),
        right_lower, parent.upper, local_lb=parent.local_lb,
    )
    return left, right
