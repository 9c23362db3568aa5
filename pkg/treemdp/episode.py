"""Episodes as binary trees of states with a temporal processing order."""

import logging
from dataclasses import dataclass, field
from typing import Optional

from django.db import models

from bnb.nodes import NodeStatus
from core.exceptions import MalformedTree

logger = logging.getLogger(__name__)


class RewardKind(models.TextChoices):
    TREE_SIZE = 'tree-size', 'Tree size (-1 per node)'


@dataclass
class EpisodeNode:
    parent: Optional[int] = None
    left: Optional[int] = None
    right: Optional[int] = None
    reward: float = -1.0
    leaf: bool = True
    action: object = None
    decision: object = None
    state_ref: object = None

    @property
    def children(self):
        return tuple(c for c in (self.left, self.right) if c is not None)


@dataclass
class EpisodeTree:
    """Node 0 is the root. ``temporal_order`` lists node indices in processing order."""

    nodes: list = field(default_factory=list)
    temporal_order: list = field(default_factory=list)
    complete: bool = True

    def __len__(self):
        return len(self.nodes)

    def non_leaf_indices(self):
        return [i for i, node in enumerate(self.nodes) if not node.leaf]

    def validate(self):
        n = len(self.nodes)
        if n == 0:
            raise MalformedTree("empty episode")
        if self.nodes[0].parent is not None:
            raise MalformedTree("node 0 must be the root")
        if sorted(self.temporal_order) != list(range(n)):
            raise MalformedTree("temporal order is not a permutation of the nodes")

        position = {index: t for t, index in enumerate(self.temporal_order)}
        for i, node in enumerate(self.nodes):
            has_children = node.left is not None or node.right is not None
            if node.leaf and has_children:
                raise MalformedTree(f"leaf {i} has children")
            if not node.leaf and (node.left is None or node.right is None):
                raise MalformedTree(f"non-leaf {i} does not have two children")
            for child in node.children:
                if not 0 <= child < n:
                    raise MalformedTree(f"node {i} points at missing child {child}")
                if self.nodes[child].parent != i:
                    raise MalformedTree(f"child {child} does not point back at {i}")
                if position[child] < position[i]:
                    raise MalformedTree(f"child {child} is processed before its parent {i}")
            if i != 0 and node.parent is None:
                raise MalformedTree(f"node {i} has no parent")

        reached, frontier = 1, [0]
        while frontier:
            children = self.nodes[frontier.pop()].children
            reached += len(children)
            frontier.extend(children)
        if reached != n:
            raise MalformedTree(f"{n - reached} nodes are not reachable from the root")
        return self


def record_episode(report, reward_kind=RewardKind.TREE_SIZE):
    """One episode node per processed B&B node, indexed by processing position.

    Aborted solves leave branched nodes with unprocessed children; those
    episodes come back with ``complete = False`` and are not validated.
    """
    RewardKind(reward_kind)
    processed = report.processed_nodes()
    index_of = {node.node_id: k for k, node in enumerate(processed)}
    complete = report.complete
    nodes = []
    for node in processed:
        branched = node.status == NodeStatus.BRANCHED
        left = right = None
        if branched:
            left = index_of.get(node.children[0])
            right = index_of.get(node.children[1])
            if left is None or right is None:
                complete = False
        nodes.append(EpisodeNode(
            parent=index_of.get(node.parent_id),
            left=left,
            right=right,
            reward=-1.0,
            leaf=not branched,
            action=node.action,
            decision=node.action.decision if node.action is not None else None,
            state_ref=node.node_id,
        ))
    tree = EpisodeTree(nodes, list(range(len(nodes))), complete)
    if complete:
        tree.validate()
    else:
        logger.debug("%s: episode is incomplete (%s)", report.instance_name, report.status)
    return tree
