"""Credit assignment: descendant (tree) returns and suffix (temporal) returns.

Both return one value per non-leaf node, aligned with
``tree.non_leaf_indices()``.
"""

import numpy as np

from core.exceptions import MalformedTree


class OpCounter:
    def __init__(self):
        self.ops = 0


def _subtree_sums(tree, counter=None):
    n = len(tree.nodes)
    sums = np.zeros(n)
    ops = 0
    for i in reversed(tree.temporal_order):
        node = tree.nodes[i]
        total = node.reward
        ops += 1
        if not node.leaf:
            total += sums[node.left] + sums[node.right]
            ops += 2
        sums[i] = total
    if counter is not None:
        counter.ops += ops
    return sums


def _check(tree):
    if len(tree.temporal_order) != len(tree.nodes):
        raise MalformedTree("temporal order does not cover every node")
    if not tree.complete:
        raise MalformedTree("returns need a complete episode")


def tree_returns(tree, counter=None):
    """Sum of rewards over each non-leaf node's strict descendants, in one bottom-up pass.

    Children always follow their parent in temporal order, so walking that
    order backwards finishes both subtrees before their parent.
    """
    _check(tree)
    sums = _subtree_sums(tree, counter)
    return np.array([sums[i] - tree.nodes[i].reward for i in tree.non_leaf_indices()])


def temporal_returns(tree):
    """Sum of rewards of every node processed after each non-leaf node."""
    _check(tree)
    rewards = np.array([tree.nodes[i].reward for i in tree.temporal_order])
    after = np.concatenate([np.cumsum(rewards[::-1])[::-1][1:], [0.0]])
    position = np.empty(len(tree.nodes), dtype=int)
    position[tree.temporal_order] = np.arange(len(tree.nodes))
    return np.array([after[position[i]] for i in tree.non_leaf_indices()])


def tree_credit_set(tree, i):
    """Strict descendants of node ``i``."""
    found, frontier = set(), list(tree.nodes[i].children)
    while frontier:
        j = frontier.pop()
        found.add(j)
        frontier.extend(tree.nodes[j].children)
    return found


def temporal_credit_set(tree, i):
    t = tree.temporal_order.index(i)
    return set(tree.temporal_order[t + 1:])


def credit_subset_violations(tree):
    """Non-leaf nodes whose tree credit is not contained in their temporal credit."""
    return [
        i for i in tree.non_leaf_indices()
        if not tree_credit_set(tree, i) <= temporal_credit_set(tree, i)
    ]
