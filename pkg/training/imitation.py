"""Imitation of strong branching: cross-entropy on the expert's argmax choice."""

import logging

from bnb.engine import NodeSelection, SolveConfig, solve
from branching.rules import StrongBranchingRule
from core.exceptions import NumericalBreakdown
from core.seeding import derive_seed, make_rng
from policy.features import N_FEATURES
from policy.network import PolicyParams, greedy_action, logprob_grad

from .log import EpochStats, TrainLog
from .reinforce import Sample

logger = logging.getLogger(__name__)


def collect_imitation_pairs(instances, node_cap, seed=0):
    """(features, expert choice) at every branched node, at most ``node_cap`` nodes per instance."""
    pairs = []
    for k, instance in enumerate(instances):
        config = SolveConfig(
            branching_rule=StrongBranchingRule(record_features=True),
            node_selection=NodeSelection.BEST_FIRST,
            node_limit=node_cap,
            rng_seed=derive_seed(seed, k),
        )
        try:
            report = solve(instance, config)
        except NumericalBreakdown as exc:
            logger.warning("%s: skipped, LP breakdown (%s)", instance.name, exc)
            continue
        for node in report.processed_nodes():
            if node.action is not None and node.action.decision is not None:
                decision = node.action.decision
                pairs.append(Sample(decision.features, decision.chosen))
    logger.info("collected %d strong-branching decisions from %d instances", len(pairs), len(instances))
    return pairs


def imitation_loss_and_grad(params, pairs):
    """Mean of −log π(expert choice) and its gradient."""
    grad = params.scaled(0.0)
    if not pairs:
        return 0.0, grad
    n = len(pairs)
    loss = 0.0
    for pair in pairs:
        logp, dlogp = logprob_grad(params, pair.features, pair.chosen)
        loss -= logp / n
        grad = grad + dlogp.scaled(-1.0 / n)
    return loss, grad


def greedy_accuracy(params, pairs):
    if not pairs:
        return 0.0
    hits = sum(1 for pair in pairs if greedy_action(params, pair.features) == pair.chosen)
    return hits / len(pairs)


def fit_imitation(pairs, cfg, params=None):
    """Mini-batch gradient descent on the cross-entropy."""
    cfg.validate()
    if params is None:
        n_features = pairs[0].features.shape[1] if pairs else N_FEATURES
        params = PolicyParams.initial(derive_seed(cfg.seed, 0x1A), n_features=n_features, hidden=cfg.hidden)
    log = TrainLog()
    rng = make_rng(cfg.seed)
    seen = 0
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(pairs))
        for start in range(0, len(pairs), cfg.batch_size):
            batch = [pairs[k] for k in order[start:start + cfg.batch_size]]
            _, grad = imitation_loss_and_grad(params, batch)
            params = params + grad.scaled(-cfg.learning_rate)
            seen += len(batch)
        loss, _ = imitation_loss_and_grad(params, pairs)
        log.append(EpochStats(epoch=epoch, samples_cumulative=seen, loss=loss, accuracy=greedy_accuracy(params, pairs)))
        logger.debug("imitation epoch %d: loss %.4f", epoch, loss)
    return params, log


def train_imitation(train_set, cfg):
    cfg.validate()
    pairs = collect_imitation_pairs([item.instance for item in train_set], cfg.node_cap_per_instance, cfg.seed)
    return fit_imitation(pairs, cfg)
