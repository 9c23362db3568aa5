"""REINFORCE with an entropy bonus over B&B episodes.

Each epoch collects one episode per sampled instance with a frozen snapshot
of the parameters, draws ⌈β·|τ|⌉ (state, action, return) samples from every
complete episode and takes one gradient step on

    L = −(1/n) Σ G · log π(a|s) − λ (1/n) Σ H(π(·|s)).
"""

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from typing import NamedTuple, Optional

import numpy as np

from bnb.engine import solve
from bnb.probes import ProbeMode, gub_invariant_probe
from branching.rules import PolicyRule
from core.exceptions import NumericalBreakdown, TrainingAborted
from core.seeding import derive_seed, make_rng
from policy.network import PolicyParams, entropy_grad, logprob_grad
from treemdp.episode import record_episode

from .config import Regime, regime_returns, regime_solve_config
from .log import EpochStats, TrainLog
from .validation import validate

logger = logging.getLogger(__name__)

BREAKDOWN_PATIENCE = 3


class Sample(NamedTuple):
    features: np.ndarray
    chosen: int
    ret: float = 0.0


class EpisodeResult(NamedTuple):
    tree: object
    node_count: int
    gub_violations: int
    error: Optional[str] = None

    @property
    def usable(self):
        return self.error is None and self.tree is not None and self.tree.complete


class BatchLoss(NamedTuple):
    loss: float
    entropy: float
    grad: PolicyParams


def collect_episode(instance, optimum, params, regime, seed, node_limit=None):
    """One stochastic-policy episode under the regime's solve settings."""
    rule = PolicyRule(params, greedy=False)
    config = regime_solve_config(regime, rule, seed, optimum, node_limit)
    try:
        report = solve(instance, config)
    except NumericalBreakdown as exc:
        logger.warning("%s: LP breakdown during collection (%s)", instance.name, exc)
        return EpisodeResult(None, 0, 0, error=str(exc))
    violations = 0
    if Regime(regime) == Regime.TREE_OBJLIM and report.complete:
        violations = len(gub_invariant_probe(report, ProbeMode.OBJECTIVE_LIMIT))
    elif Regime(regime) == Regime.TREE_DFS and report.complete:
        violations = len(gub_invariant_probe(report, ProbeMode.DFS))
    if violations:
        logger.warning("%s: %d GUB invariant violations", instance.name, violations)
    return EpisodeResult(record_episode(report), report.node_count, violations)


def _collect_job(job):
    return collect_episode(*job)


def extract_samples(tree, regime, sample_rate, rng):
    """⌈β·|τ|⌉ non-leaf (features, choice, return) samples drawn without replacement."""
    non_leaf = tree.non_leaf_indices()
    if not non_leaf:
        return []
    returns = regime_returns(regime)(tree)
    take = min(len(non_leaf), math.ceil(sample_rate * len(tree)))
    picks = np.sort(rng.choice(len(non_leaf), size=take, replace=False))
    samples = []
    for k in picks:
        decision = tree.nodes[non_leaf[k]].decision
        samples.append(Sample(decision.features, decision.chosen, float(returns[k])))
    return samples


def batch_loss_and_grad(params, samples, entropy_bonus, baseline=False):
    n = len(samples)
    if n == 0:
        return BatchLoss(0.0, 0.0, params.scaled(0.0))
    rets = np.array([s.ret for s in samples])
    if baseline:
        rets = rets - rets.mean()
    loss, total_entropy = 0.0, 0.0
    grad = params.scaled(0.0)
    for sample, ret in zip(samples, rets):
        logp, dlogp = logprob_grad(params, sample.features, sample.chosen)
        entropy, dentropy = entropy_grad(params, sample.features)
        loss -= (ret * logp + entropy_bonus * entropy) / n
        grad = grad + dlogp.scaled(-ret / n) + dentropy.scaled(-entropy_bonus / n)
        total_entropy += entropy
    return BatchLoss(loss, total_entropy / n, grad)


def _run_jobs(jobs, workers):
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_collect_job, jobs))
    return [_collect_job(job) for job in jobs]


def train_reinforce(train_set, cfg, valid_set=None, params=None):
    """Train a branching policy; returns the best-validation parameters and the log.

    ``train_set`` and ``valid_set`` hold loaded instances (``.instance`` and
    ``.optimum``). Without a validation set the final parameters are returned.
    """
    cfg.validate(train_set)
    if not train_set:
        raise TrainingAborted("empty training set")
    if params is None:
        params = PolicyParams.initial(derive_seed(cfg.seed, 0xC0FFEE), hidden=cfg.hidden)
    log = TrainLog()
    best = params
    valid = [item.instance for item in valid_set or ()]

    if valid:
        result = validate(params, valid, cfg.eval_seeds, master_seed=cfg.seed, workers=cfg.workers)
        log.initial_validation = log.best_validation = result.gmean
        log.best_epoch = -1

    start = time.monotonic()
    samples_cumulative = 0
    breakdown_streak = 0
    for epoch in range(cfg.epochs):
        if cfg.time_limit is not None and time.monotonic() - start > cfg.time_limit:
            logger.info("time limit reached after %d epochs", epoch)
            break
        rng = make_rng(derive_seed(cfg.seed, epoch))
        picks = rng.choice(len(train_set), size=cfg.instances_per_epoch, replace=len(train_set) < cfg.instances_per_epoch)
        jobs = [
            (train_set[i].instance, train_set[i].optimum, params, cfg.regime,
             derive_seed(cfg.seed, epoch, k), cfg.episode_node_limit)
            for k, i in enumerate(picks)
        ]
        episodes = _run_jobs(jobs, cfg.workers)

        usable = [e for e in episodes if e.usable]
        errors = sum(1 for e in episodes if e.error is not None)
        breakdown_streak = breakdown_streak + 1 if errors and not usable else 0
        if breakdown_streak >= BREAKDOWN_PATIENCE:
            raise TrainingAborted(f"no usable episodes for {breakdown_streak} epochs because of LP breakdowns")

        samples = []
        for episode in usable:
            samples.extend(extract_samples(episode.tree, cfg.regime, cfg.sample_rate, rng))
            samples_cumulative += episode.node_count
        batch = batch_loss_and_grad(params, samples, cfg.entropy_bonus, cfg.baseline)
        params = params + batch.grad.scaled(-cfg.learning_rate)

        stats = EpochStats(
            epoch=epoch,
            samples_cumulative=samples_cumulative,
            episodes=len(usable),
            skipped=len(episodes) - len(usable),
            mean_episode_nodes=float(np.mean([e.node_count for e in usable])) if usable else None,
            loss=batch.loss,
            entropy=batch.entropy,
        )
        if valid and ((epoch + 1) % cfg.eval_interval == 0 or epoch + 1 == cfg.epochs):
            result = validate(params, valid, cfg.eval_seeds, master_seed=cfg.seed, workers=cfg.workers)
            stats.validation_gmean, stats.validation_std_pct = result.gmean, result.std_pct
            if result.gmean < log.best_validation:
                best, log.best_validation, log.best_epoch = params, result.gmean, epoch
        log.append(stats)
        logger.info(
            "epoch %d: %d episodes, %d samples so far, loss %.4g%s", epoch, len(usable), samples_cumulative,
            batch.loss, '' if stats.validation_gmean is None else f", validation {stats.validation_gmean:.1f}",
        )
    return (best if valid else params), log
