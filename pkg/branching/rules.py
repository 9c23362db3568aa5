import math

import numpy as np

from bnb.nodes import BranchAction, Decision
from core.constants import SB_EPSILON, SB_INFEASIBLE_GAIN
from core.seeding import make_rng
from policy.features import featurize, instance_stats
from policy.network import policy_forward, sample_index

DEFAULT_RELIABILITY = 4


class BranchingRule:
    """Chooses one candidate ``(var_index, value)`` at a node that must be branched.

    ``begin_solve`` is called once per solve; rules keep no state across solves.
    """

    spec = None

    def begin_solve(self, instance, seed):
        self.instance = instance
        self.rng = make_rng(seed)

    def select(self, node, candidates, probe):
        raise NotImplementedError

    def __repr__(self):
        return f"<{type(self).__name__} {self.spec}>"


class RandomRule(BranchingRule):
    spec = 'random'

    def select(self, node, candidates, probe):
        j, value = candidates[int(self.rng.integers(len(candidates)))]
        return BranchAction(j, value)


def product_score(down_gain, up_gain):
    down = SB_INFEASIBLE_GAIN if math.isinf(down_gain) else down_gain
    up = SB_INFEASIBLE_GAIN if math.isinf(up_gain) else up_gain
    return max(down, SB_EPSILON) * max(up, SB_EPSILON)


def strong_branching_labels(node, candidates, probe):
    """``(var_index, score)`` per candidate from tentative child LPs; leaves the solve untouched."""
    return [(j, product_score(*probe.child_gains(node, j, value))) for j, value in candidates]


def best_scored(scored):
    """Position of the highest score, lowest variable index on ties."""
    return max(range(len(scored)), key=lambda k: (scored[k][1], -scored[k][0]))


class StrongBranchingRule(BranchingRule):
    """Full strong branching. With ``record_features`` each decision keeps the
    candidate features, which is what imitation learning trains on."""

    spec = 'strong'

    def __init__(self, record_features=False):
        self.record_features = record_features

    def begin_solve(self, instance, seed):
        super().begin_solve(instance, seed)
        self.stats = instance_stats(instance) if self.record_features else None

    def select(self, node, candidates, probe):
        scored = strong_branching_labels(node, candidates, probe)
        pick = best_scored(scored)
        decision = None
        if self.record_features:
            features = featurize(node, candidates, self.stats, self.instance, probe.pseudocosts, probe.gub)
            decision = Decision(features, tuple(j for j, _ in candidates), pick)
        j, value = candidates[pick]
        return BranchAction(j, value, decision)


class PseudocostRule(BranchingRule):
    """Strong branching on variables with fewer than ``reliability`` observations
    per side, product of pseudocost estimates otherwise."""

    def __init__(self, reliability=DEFAULT_RELIABILITY):
        self.reliability = reliability

    @property
    def spec(self):
        if self.reliability == DEFAULT_RELIABILITY:
            return 'pseudocost'
        return f"pseudocost:{self.reliability}"

    def select(self, node, candidates, probe):
        tracker = probe.pseudocosts
        scored = []
        for j, value in candidates:
            if tracker.is_reliable(j, self.reliability):
                frac = value - math.floor(value)
                score = product_score(
                    tracker.estimate(j, is_left=True) * frac,
                    tracker.estimate(j, is_left=False) * (1.0 - frac),
                )
            else:
                score = product_score(*probe.child_gains(node, j, value))
            scored.append((j, score))
        j, value = candidates[best_scored(scored)]
        return BranchAction(j, value)


class PolicyRule(BranchingRule):
    """Learned rule: samples from the policy, or takes its argmax when ``greedy``.

    Every decision records the features and probabilities it was made from.
    """

    def __init__(self, params, greedy=False, source=None):
        self.params = params
        self.greedy = greedy
        self.source = source

    @property
    def spec(self):
        prefix = 'policy-greedy' if self.greedy else 'policy'
        return f"{prefix}:{self.source}" if self.source else prefix

    def begin_solve(self, instance, seed):
        super().begin_solve(instance, seed)
        self.stats = instance_stats(instance)

    def select(self, node, candidates, probe):
        features = featurize(node, candidates, self.stats, self.instance, probe.pseudocosts, probe.gub)
        probs, logits = policy_forward(self.params, features)
        if self.greedy:
            pick = int(np.argmax(logits))
        else:
            pick = sample_index(probs, self.rng)
        j, value = candidates[pick]
        return BranchAction(j, value, Decision(features, tuple(c for c, _ in candidates), pick, probs))

