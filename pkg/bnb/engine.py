"""Vanilla branch-and-bound: no cuts, presolve, heuristics or restarts.

Every created node is eventually processed (its LP solved) unless a limit
stops the solve, so branched nodes always have two processed children in a
complete run and the tree size is the number of LPs solved.
"""

import heapq
import logging
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from django.db import models

from core.constants import FEAS_TOL
from core.exceptions import InvalidConfig
from lp.problem import LpStatus
from lp.simplex import solve_lp
from milp.instance import lp_relaxation, make_solution

from .nodes import NodeState, NodeStatus, child_states, fractional_candidates
from .probe import SolverProbe
from .pseudocosts import PseudocostTracker

logger = logging.getLogger(__name__)


class NodeSelection(models.TextChoices):
    BEST_FIRST = 'best-first', 'Best first'
    DFS_LEFT_FIRST = 'dfs', 'Depth first, left first'


class ChildOrder(models.TextChoices):
    LEFT_FIRST = 'left-first', 'Left child first'
    RIGHT_FIRST = 'right-first', 'Right child first'


class SolveStatus(models.TextChoices):
    OPTIMAL = 'optimal', 'Optimal'
    INFEASIBLE = 'infeasible', 'Infeasible'
    UNBOUNDED = 'unbounded', 'Unbounded'
    OBJECTIVE_LIMIT = 'objective-limit', 'Nothing better than the objective limit'
    NODE_LIMIT = 'node-limit', 'Node limit reached'
    TIME_LIMIT = 'time-limit', 'Time limit reached'


@dataclass
class SolveConfig:
    branching_rule: object = None
    node_selection: NodeSelection = NodeSelection.BEST_FIRST
    objective_limit: Optional[float] = None
    node_limit: Optional[int] = None
    time_limit: Optional[float] = None
    rng_seed: int = 0
    child_order: ChildOrder = ChildOrder.LEFT_FIRST
    record_bounds: bool = False

    def validate(self):
        if self.branching_rule is None:
            raise InvalidConfig("a branching rule is required")
        NodeSelection(self.node_selection)
        ChildOrder(self.child_order)
        if self.node_limit is not None and self.node_limit < 1:
            raise InvalidConfig("node_limit must be at least 1")
        if self.time_limit is not None and self.time_limit <= 0:
            raise InvalidConfig("time_limit must be positive")
        if self.objective_limit is not None and not math.isfinite(self.objective_limit):
            raise InvalidConfig("objective_limit must be finite")

    def summary(self):
        return {
            'brancher': getattr(self.branching_rule, 'spec', type(self.branching_rule).__name__),
            'node_selection': NodeSelection(self.node_selection).value,
            'objective_limit': self.objective_limit,
            'node_limit': self.node_limit,
            'time_limit': self.time_limit,
            'rng_seed': self.rng_seed,
            'child_order': ChildOrder(self.child_order).value,
        }


@dataclass(eq=False)
class SolveReport:
    instance_name: str
    status: SolveStatus
    obj: Optional[float]
    glb: float
    incumbent: object
    nodes: list
    processed_order: list
    complete: bool
    config: dict
    wall_time: float = 0.0
    bound_trace: list = field(default_factory=list)

    @property
    def node_count(self):
        return len(self.processed_order)

    def processed_nodes(self):
        return [self.nodes[i] for i in self.processed_order]

    @property
    def tree(self):
        from treemdp.episode import record_episode

        return record_episode(self)


def solve(instance, config):
    config.validate()
    return _BranchAndBound(instance, config).run()


class _BranchAndBound:

    def __init__(self, instance, config):
        self.instance = instance
        self.config = config
        self.rule = config.branching_rule
        self.relaxation = lp_relaxation(instance)
        self.gub = math.inf if config.objective_limit is None else float(config.objective_limit)
        self.incumbent = None
        self.nodes = []
        self.processed_order = []
        self.pseudocosts = PseudocostTracker(instance.n_vars)
        self.probe = SolverProbe(instance, self.relaxation, self.pseudocosts, lambda: self.gub)
        self.bound_trace = []
        self.unbounded = False
        self._heap = []
        self._stack = []
        self._seq = 0
        self._best_first = NodeSelection(config.node_selection) == NodeSelection.BEST_FIRST
        self._left_first = ChildOrder(config.child_order) == ChildOrder.LEFT_FIRST

    def _push(self, node):
        if self._best_first:
            heapq.heappush(self._heap, (node.local_lb, self._seq, node.node_id))
            self._seq += 1
        else:
            self._stack.append(node.node_id)

    def _pop(self):
        if self._best_first:
            return self.nodes[heapq.heappop(self._heap)[2]]
        return self.nodes[self._stack.pop()]

    def _has_open(self):
        return bool(self._heap or self._stack)

    def _glb(self):
        if self._best_first:
            open_lb = self._heap[0][0] if self._heap else math.inf
        else:
            open_lb = min((self.nodes[i].local_lb for i in self._stack), default=math.inf)
        return min(open_lb, self.gub)

    def run(self):
        self.rule.begin_solve(self.instance, self.config.rng_seed)
        start = time.monotonic()
        root = NodeState(0, None, None, 0, (), self.instance.lower.copy(), self.instance.upper.copy())
        self.nodes.append(root)
        self._push(root)

        status = None
        while self._has_open():
            if self.config.node_limit is not None and len(self.processed_order) >= self.config.node_limit:
                status = SolveStatus.NODE_LIMIT
                break
            if self.config.time_limit is not None and time.monotonic() - start >= self.config.time_limit:
                status = SolveStatus.TIME_LIMIT
                break
            self._process(self._pop())
            if self.unbounded:
                status = SolveStatus.UNBOUNDED
                break
            if self.config.record_bounds:
                self.bound_trace.append((self._glb(), self.gub))

        complete = status is None
        if complete:
            if self.incumbent is not None:
                status = SolveStatus.OPTIMAL
            elif self.config.objective_limit is not None:
                status = SolveStatus.OBJECTIVE_LIMIT
            else:
                status = SolveStatus.INFEASIBLE
            glb = self.gub
        else:
            glb = -math.inf if status == SolveStatus.UNBOUNDED else self._glb()

        report = SolveReport(
            instance_name=self.instance.name,
            status=status,
            obj=self.gub if math.isfinite(self.gub) else None,
            glb=glb,
            incumbent=self.incumbent,
            nodes=self.nodes,
            processed_order=self.processed_order,
            complete=complete,
            config=self.config.summary(),
            wall_time=time.monotonic() - start,
            bound_trace=self.bound_trace,
        )
        logger.debug(
            "%s: %s after %d nodes (obj %s)", self.instance.name, status.value, report.node_count, report.obj
        )
        return report

    def _process(self, node):
        node.processing_index = len(self.processed_order)
        node.gub_at_processing = self.gub
        self.processed_order.append(node.node_id)

        result = solve_lp(self.relaxation.with_bounds(node.lower, node.upper))
        if node.parent_id is not None and result.status == LpStatus.OPTIMAL:
            parent = self.nodes[node.parent_id]
            self.pseudocosts.record(
                parent.action.var_index, node.is_left_child,
                result.obj_value - parent.local_lb, parent.action.split_value,
            )

        if result.status == LpStatus.INFEASIBLE:
            node.local_lb = math.inf
            node.status = NodeStatus.LEAF_INFEASIBLE
            return
        if result.status == LpStatus.UNBOUNDED:
            node.local_lb = -math.inf
            self.unbounded = True
            return

        node.local_lb = result.obj_value
        node.lp_solution = result.x_star
        if node.local_lb >= self.gub - FEAS_TOL:
            node.status = NodeStatus.LEAF_PRUNED
            return

        candidates = fractional_candidates(node, self.instance.int_set)
        if not candidates:
            node.status = NodeStatus.LEAF_INTEGER_FEASIBLE
            x = result.x_star.copy()
            int_set = list(self.instance.int_set)
            x[int_set] = np.round(x[int_set])
            solution = make_solution(self.instance, x)
            if not solution.is_feasible:
                logger.warning(
                    "%s: rounding the LP point at node %d breaks feasibility, keeping it unrounded",
                    self.instance.name, node.node_id,
                )
                solution = make_solution(self.instance, result.x_star)
            if not solution.is_feasible:
                logger.warning(
                    "%s: no feasible incumbent at node %d, solution rejected", self.instance.name, node.node_id,
                )
                return
            if solution.obj_value < self.gub - FEAS_TOL:
                self.gub = solution.obj_value
                self.incumbent = solution
                logger.debug("%s: incumbent %.6g at node %d", self.instance.name, self.gub, node.node_id)
            return

        action = self.rule.select(node, candidates, self.probe)
        if action.var_index not in {j for j, _ in candidates}:
            raise InvalidConfig(f"rule {self.rule!r} chose x{action.var_index}, which is not a candidate")
        left, right = child_states(node, action, len(self.nodes), len(self.nodes) + 1)
        self.nodes.extend((left, right))
        node.action = action
        node.children = (left.node_id, right.node_id)
        node.status = NodeStatus.BRANCHED

        first, second = (left, right) if self._left_first else (right, left)
        if self._best_first:
            # equal bounds pop in push order
            self._push(first)
            self._push(second)
        else:
            self._push(second)
            self._push(first)
