"""Finite synthetic tree MDPs with exact values, for checking policy-gradient estimators.

A state's action emits two child states drawn from the left and right
transition tables. The policy is the usual candidate network applied to a
fixed feature vector per (state, action).
"""

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from django.db import models

from core.exceptions import DepthCapExceeded, InvalidConfig
from core.seeding import make_rng
from policy.network import PolicyParams, logprob_grad, policy_forward, sample_index

from .episode import EpisodeNode, EpisodeTree
from .returns import temporal_returns, tree_returns

logger = logging.getLogger(__name__)

FD_STEP = 1e-6
# differences below this, relative to the largest exact component, are floating-point noise
NOISE_FLOOR = 1e-9


class Estimator(models.TextChoices):
    TREE = 'tree', 'Tree policy gradient'
    TEMPORAL = 'temporal', 'Temporal policy gradient'


@dataclass(frozen=True, eq=False)
class SyntheticTreeMdp:
    p_init: np.ndarray
    p_left: np.ndarray
    p_right: np.ndarray
    reward: np.ndarray
    leaf: np.ndarray
    features: np.ndarray
    depth_cap: int

    @property
    def n_states(self):
        return self.reward.size

    @property
    def n_actions(self):
        return self.p_left.shape[1]

    def validate(self):
        s, a = self.n_states, self.n_actions
        if self.p_init.shape != (s,) or self.p_left.shape != (s, a, s) or self.p_right.shape != (s, a, s):
            raise InvalidConfig("transition tables do not match the state and action counts")
        if self.leaf.shape != (s,) or self.features.shape[:2] != (s, a):
            raise InvalidConfig("leaf table or features do not match the state and action counts")
        for name, table in (('p_init', self.p_init), ('p_left', self.p_left), ('p_right', self.p_right)):
            if np.any(table < 0) or not np.allclose(table.sum(axis=-1), 1.0):
                raise InvalidConfig(f"{name} rows must be probability distributions")
        return self


def layered_mdp(seed, depth, width=2, n_actions=2, n_features=3, leaf_prob=0.3):
    """Random stochastic MDP whose states sit in ``depth + 1`` layers.

    Children are always drawn from the next layer and the last layer is all
    leaves, so every episode ends within ``depth`` branchings.
    """
    if depth < 0 or width < 1 or n_actions < 1:
        raise InvalidConfig("depth must be non-negative, width and n_actions positive")
    rng = make_rng(seed)
    n = width * (depth + 1)
    layer = np.repeat(np.arange(depth + 1), width)
    p_init = np.zeros(n)
    p_init[:width] = rng.dirichlet(np.ones(width))
    p_left = np.zeros((n, n_actions, n))
    p_right = np.zeros((n, n_actions, n))
    leaf = np.zeros(n, dtype=bool)
    for s in range(n):
        if layer[s] == depth:
            leaf[s] = True
            p_left[s, :, s] = p_right[s, :, s] = 1.0
            continue
        leaf[s] = layer[s] > 0 and rng.random() < leaf_prob
        nxt = slice(width * (layer[s] + 1), width * (layer[s] + 2))
        for a in range(n_actions):
            p_left[s, a, nxt] = rng.dirichlet(np.ones(width))
            p_right[s, a, nxt] = rng.dirichlet(np.ones(width))
    reward = -rng.integers(1, 4, size=n).astype(float)
    features = rng.normal(size=(n, n_actions, n_features))
    return SyntheticTreeMdp(p_init, p_left, p_right, reward, leaf, features, depth_cap=depth).validate()


def _state_value(mdp, params, s, depth, memo):
    if s in memo:
        return memo[s]
    if mdp.leaf[s]:
        memo[s] = float(mdp.reward[s])
        return memo[s]
    if depth >= mdp.depth_cap:
        raise DepthCapExceeded(f"state {s} is not a leaf at depth {depth}")
    probs, _ = policy_forward(params, mdp.features[s])
    value = float(mdp.reward[s])
    for a, p in enumerate(probs):
        for table in (mdp.p_left, mdp.p_right):
            for child in np.flatnonzero(table[s, a]):
                value += p * table[s, a, child] * _state_value(mdp, params, child, depth + 1, memo)
    memo[s] = value
    return value


def exact_value(mdp, params):
    """V = E_{s ~ p_init} V(s), V(s) = r(s) + Σ_a π(a|s) E[V(S⁻) + V(S⁺)] for non-leaves."""
    memo = {}
    return sum(
        p * _state_value(mdp, params, s, 0, memo) for s, p in enumerate(mdp.p_init) if p > 0
    )


def exact_value_and_gradient(mdp, params, h=FD_STEP):
    """Exact value and its central finite-difference gradient in every parameter."""
    value = exact_value(mdp, params)
    theta = params.flatten()
    grad = np.zeros_like(theta)
    for k in range(theta.size):
        step = np.zeros_like(theta)
        step[k] = h
        grad[k] = (exact_value(mdp, params.like(theta + step)) - exact_value(mdp, params.like(theta - step))) / (2 * h)
    return value, params.like(grad)


def analytic_value_gradient(mdp, params):
    """Exact gradient by the recursion
    ∇V(s) = Σ_a π(a|s) [∇log π(a|s) Q(s, a) + E ∇V(S⁻) + E ∇V(S⁺)].
    """
    values, grads = {}, {}

    def visit(s, depth):
        if s in values:
            return
        if mdp.leaf[s]:
            values[s], grads[s] = float(mdp.reward[s]), np.zeros(params.size)
            return
        if depth >= mdp.depth_cap:
            raise DepthCapExceeded(f"state {s} is not a leaf at depth {depth}")
        probs, _ = policy_forward(params, mdp.features[s])
        value, grad = float(mdp.reward[s]), np.zeros(params.size)
        for a, p in enumerate(probs):
            q, dq = 0.0, np.zeros(params.size)
            for table in (mdp.p_left, mdp.p_right):
                for child in np.flatnonzero(table[s, a]):
                    visit(child, depth + 1)
                    q += table[s, a, child] * values[child]
                    dq += table[s, a, child] * grads[child]
            _, dlogp = logprob_grad(params, mdp.features[s], a)
            value += p * q
            grad += p * (dlogp.flatten() * q + dq)
        values[s], grads[s] = value, grad

    total = np.zeros(params.size)
    for s, p in enumerate(mdp.p_init):
        if p > 0:
            visit(s, 0)
            total += p * grads[s]
    return params.like(total)


def sample_episode(mdp, params, rng, probs_table=None):
    """One episode unfolded depth-first, left child first.

    ``probs_table`` caches π(·|s) per state for repeated sampling under fixed parameters.
    """
    start = sample_index(mdp.p_init, rng)
    nodes = [EpisodeNode(state_ref=start)]
    order = []
    stack = [0]
    while stack:
        i = stack.pop()
        order.append(i)
        s = nodes[i].state_ref
        nodes[i].reward = float(mdp.reward[s])
        if mdp.leaf[s]:
            continue
        if len(_depth_chain(nodes, i)) > mdp.depth_cap:
            raise DepthCapExceeded(f"episode exceeded depth {mdp.depth_cap}")
        probs = probs_table[s] if probs_table is not None else policy_forward(params, mdp.features[s])[0]
        a = sample_index(probs, rng)
        left = sample_index(mdp.p_left[s, a], rng)
        right = sample_index(mdp.p_right[s, a], rng)
        nodes[i].leaf = False
        nodes[i].action = a
        nodes[i].left, nodes[i].right = len(nodes), len(nodes) + 1
        nodes.append(EpisodeNode(parent=i, state_ref=left))
        nodes.append(EpisodeNode(parent=i, state_ref=right))
        stack.extend((nodes[i].right, nodes[i].left))
    return EpisodeTree(nodes, order, complete=True)


def _depth_chain(nodes, i):
    chain = [i]
    while nodes[chain[-1]].parent is not None:
        chain.append(nodes[chain[-1]].parent)
    return chain


def score_table(mdp, params):
    """∇log π(a|s) for every (state, action), flattened."""
    table = np.zeros((mdp.n_states, mdp.n_actions, params.size))
    for s in range(mdp.n_states):
        if mdp.leaf[s]:
            continue
        for a in range(mdp.n_actions):
            table[s, a] = logprob_grad(params, mdp.features[s], a)[1].flatten()
    return table


class GradientEstimate(NamedTuple):
    mean: np.ndarray
    std_error: np.ndarray
    n_episodes: int

    def relative_error(self, exact):
        exact = np.asarray(exact)
        return float(np.linalg.norm(self.mean - exact) / max(np.linalg.norm(exact), 1e-12))

    def standard_scores(self, exact):
        """|mean − exact| in standard errors, with the error never taken below the noise floor."""
        exact = np.asarray(exact)
        floor = NOISE_FLOOR * max(1.0, float(np.abs(exact).max(initial=0.0)))
        return np.abs(self.mean - exact) / np.maximum(self.std_error, floor)

    def max_standard_scores(self, exact):
        return float(self.standard_scores(exact).max(initial=0.0))


def mc_gradient_statistics(mdp, params, estimator, n_episodes, rng):
    """Per-episode Σ_i ∇log π(a_i|s_i) G_i averaged over episodes, with standard errors."""
    if estimator not in Estimator.values:
        raise InvalidConfig(f"unknown estimator {estimator!r}")
    returns = tree_returns if estimator == Estimator.TREE else temporal_returns
    scores = score_table(mdp, params)
    probs_table = np.array([policy_forward(params, mdp.features[s])[0] for s in range(mdp.n_states)])
    total = np.zeros(params.size)
    total_sq = np.zeros(params.size)
    for _ in range(n_episodes):
        tree = sample_episode(mdp, params, rng, probs_table)
        g = np.zeros(params.size)
        for i, ret in zip(tree.non_leaf_indices(), returns(tree)):
            node = tree.nodes[i]
            g += scores[node.state_ref, node.action] * ret
        total += g
        total_sq += g * g
    mean = total / n_episodes
    if n_episodes > 1:
        variance = np.maximum(total_sq / n_episodes - mean ** 2, 0.0) * n_episodes / (n_episodes - 1)
        std_error = np.sqrt(variance / n_episodes)
    else:
        std_error = np.zeros_like(mean)
    logger.debug("%s estimator: %d episodes, mean standard error %.3g", estimator, n_episodes, std_error.mean())
    return GradientEstimate(mean, std_error, n_episodes)


def mc_gradient_estimate(mdp, params, estimator, n_episodes, rng):
    return params.like(mc_gradient_statistics(mdp, params, estimator, n_episodes, rng).mean)


def nine_node_mdp(n_features=3, seed=0):
    """Deterministic nine-node tree a..i: a → (b, c), b → (d, e), c → (f, g), f → (h, i).

    One state per node; non-leaf states have two actions with identical
    transitions, so the tree shape is fixed and only the credit differs.
    """
    rng = make_rng(seed)
    children = {0: (1, 2), 1: (3, 4), 2: (5, 6), 5: (7, 8)}
    n, n_actions = 9, 2
    p_init = np.zeros(n)
    p_init[0] = 1.0
    p_left = np.zeros((n, n_actions, n))
    p_right = np.zeros((n, n_actions, n))
    leaf = np.ones(n, dtype=bool)
    for s in range(n):
        if s in children:
            leaf[s] = False
            p_left[s, :, children[s][0]] = 1.0
            p_right[s, :, children[s][1]] = 1.0
        else:
            p_left[s, :, s] = p_right[s, :, s] = 1.0
    reward = -np.ones(n)
    features = rng.normal(size=(n, n_actions, n_features))
    return SyntheticTreeMdp(p_init, p_left, p_right, reward, leaf, features, depth_cap=3).validate()


def initial_params(mdp, seed, hidden=4):
    return PolicyParams.initial(seed, n_features=mdp.features.shape[2], hidden=hidden)
