"""Checks that the recorded GUB sequence behaves as the tree-Markov conditions require."""

from typing import NamedTuple, Optional

from django.db import models

from core.exceptions import InvalidConfig

from .nodes import NodeStatus


class ProbeMode(models.TextChoices):
    OBJECTIVE_LIMIT = 'objlim', 'Constant GUB under an objective limit'
    DFS = 'dfs', 'Left child inherits the parent GUB'


class GubViolation(NamedTuple):
    node_id: int
    expected: float
    found: float
    parent_id: Optional[int] = None


def gub_invariant_probe(report, mode):
    """Every processed node whose GUB differs from what ``mode`` predicts.

    Objective-limit mode expects every node to see the limit as its GUB; DFS
    mode expects every processed left child to see its parent's GUB.
    """
    mode = ProbeMode(mode)
    violations = []
    processed = report.processed_nodes()
    if mode == ProbeMode.OBJECTIVE_LIMIT:
        limit = report.config['objective_limit']
        if limit is None:
            raise InvalidConfig("report was not solved with an objective limit")
        for node in processed:
            if node.gub_at_processing != limit:
                violations.append(GubViolation(node.node_id, limit, node.gub_at_processing))
        return violations

    for node in processed:
        if node.status != NodeStatus.BRANCHED:
            continue
        left = report.nodes[node.children[0]]
        if left.is_processed and left.gub_at_processing != node.gub_at_processing:
            violations.append(
                GubViolation(left.node_id, node.gub_at_processing, left.gub_at_processing, node.node_id)
            )
    return violations
