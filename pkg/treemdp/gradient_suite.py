"""Checks Monte-Carlo policy-gradient estimators against exact gradients on synthetic tree MDPs."""

import logging
from typing import NamedTuple

import numpy as np
from scipy.stats import norm

from core.seeding import derive_seed, make_rng

from .synthetic import (
    Estimator, analytic_value_gradient, exact_value_and_gradient, nine_node_mdp, initial_params, layered_mdp,
    mc_gradient_statistics,
)

logger = logging.getLogger(__name__)

SUITE_DEPTHS = (1, 2, 3, 4)
EXACT_AGREEMENT = 1e-4
# two-sided tail mass beyond three standard errors
FAMILY_ALPHA = 0.0027
STANDARD_Z = 3.0


class EstimatorCheck(NamedTuple):
    estimator: str
    relative_error: float
    max_z: float
    exceedances: int
    components: int
    passed: bool


class MdpCheck(NamedTuple):
    index: int
    depth: int
    exact_agreement: float
    estimators: tuple

    @property
    def passed(self):
        return self.exact_agreement <= EXACT_AGREEMENT and all(check.passed for check in self.estimators)


def _relative(a, b):
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-12))


def bonferroni_z(n_comparisons, alpha=FAMILY_ALPHA):
    """Per-comparison z bound keeping the family-wise false-alarm rate at ``alpha``."""
    return float(norm.isf(alpha / (2 * max(int(n_comparisons), 1))))


def check_mdp(mdp, params, n_episodes, seed, rel_tol=0.05, z_max=None):
    """Analytic recursion against finite differences, then both estimators against the analytic gradient.

    ``z_max`` defaults to the Bonferroni bound over every component of both estimators.
    """
    _, fd = exact_value_and_gradient(mdp, params)
    exact = analytic_value_gradient(mdp, params).flatten()
    agreement = _relative(exact, fd.flatten())
    if z_max is None:
        z_max = bonferroni_z(len(Estimator) * exact.size)
    checks = []
    for k, estimator in enumerate(Estimator):
        stats = mc_gradient_statistics(mdp, params, estimator, n_episodes, make_rng(derive_seed(seed, k)))
        rel, z = stats.relative_error(exact), stats.standard_scores(exact)
        max_z = float(z.max(initial=0.0))
        checks.append(EstimatorCheck(
            estimator.value, rel, max_z, int((z > STANDARD_Z).sum()), exact.size, rel <= rel_tol and max_z <= z_max,
        ))
    return agreement, tuple(checks)


def run_suite(n_mdps=20, n_episodes=200_000, seed=0, rel_tol=0.05, z_max=None, hidden=4):
    """Layered stochastic MDPs cycling through depths 1 to 4.

    Without ``z_max`` the componentwise bound is Bonferroni-corrected over the whole suite.
    """
    results = []
    for index in range(n_mdps):
        depth = SUITE_DEPTHS[index % len(SUITE_DEPTHS)]
        mdp = layered_mdp(derive_seed(seed, index, 0), depth)
        params = initial_params(mdp, derive_seed(seed, index, 1), hidden=hidden)
        bound = z_max if z_max is not None else bonferroni_z(n_mdps * len(Estimator) * params.size)
        agreement, checks = check_mdp(mdp, params, n_episodes, derive_seed(seed, index, 2), rel_tol, bound)
        result = MdpCheck(index, depth, agreement, checks)
        logger.info("MDP %d (depth %d): %s", index, depth, 'pass' if result.passed else 'FAIL')
        results.append(result)
    return results


def exceedance_summary(results):
    """Components beyond three standard errors across the suite, and the count expected by chance."""
    checks = [check for result in results for check in result.estimators]
    observed = sum(check.exceedances for check in checks)
    return observed, FAMILY_ALPHA * sum(check.components for check in checks)


def variance_diagnostic(n_batches=20, batch_episodes=1000, seed=0, hidden=4):
    """Total across-batch variance of each estimator on the nine-node example tree."""
    mdp = nine_node_mdp(seed=seed)
    params = initial_params(mdp, derive_seed(seed, 1), hidden=hidden)
    variances = {}
    for k, estimator in enumerate(Estimator):
        rng = make_rng(derive_seed(seed, 2, k))
        means = np.array([
            mc_gradient_statistics(mdp, params, estimator, batch_episodes, rng).mean for _ in range(n_batches)
        ])
        variances[estimator.value] = float(means.var(axis=0, ddof=1).sum())
    logger.info("estimator variance: %s", variances)
    return variances
