"""Per-candidate features for the learned branching policy.

A fixed hand-crafted vector stands in for a graph network; the column order
is part of the policy file contract.
"""

import math
from typing import NamedTuple

import numpy as np

FEATURE_NAMES = (
    'frac_part',
    'fractionality',
    'objective_coef',
    'position_in_domain',
    'domain_width',
    'depth',
    'row_participation',
    'mean_abs_coef',
    'pseudocost_up',
    'pseudocost_down',
    'times_branched_on',
    'has_incumbent',
)
N_FEATURES = len(FEATURE_NAMES)


class InstanceStats(NamedTuple):
    n_vars: int
    n_rows: int
    max_abs_obj: float
    root_width: np.ndarray
    column_count: np.ndarray
    mean_abs_column: np.ndarray


def instance_stats(instance):
    """Per-column statistics that do not change during a solve."""
    csc = instance.rows.tocsc()
    counts = np.diff(csc.indptr)
    abs_sums = np.asarray(abs(csc).sum(axis=0)).reshape(-1)
    with np.errstate(invalid='ignore', divide='ignore'):
        mean_abs = np.where(counts > 0, abs_sums / np.maximum(counts, 1), 0.0)
    peak = float(np.max(np.abs(csc.data))) if csc.nnz else 0.0
    return InstanceStats(
        n_vars=instance.n_vars,
        n_rows=instance.n_rows,
        max_abs_obj=float(np.max(np.abs(instance.obj))) if instance.n_vars else 0.0,
        root_width=instance.upper - instance.lower,
        column_count=counts,
        mean_abs_column=mean_abs / peak if peak > 0 else mean_abs,
    )


def _squash(value):
    return value / (1.0 + value)


def featurize(node, candidates, stats, instance, pseudocosts=None, gub=math.inf):
    """One row of ``N_FEATURES`` values per candidate, in candidate order."""
    features = np.zeros((len(candidates), N_FEATURES))
    for k, (j, value) in enumerate(candidates):
        lower, upper = node.lower[j], node.upper[j]
        width = upper - lower
        root_width = stats.root_width[j]
        frac = value - math.floor(value)

        features[k, 0] = frac
        features[k, 1] = 2.0 * min(frac, 1.0 - frac)
        features[k, 2] = instance.obj[j] / (1.0 + stats.max_abs_obj)
        features[k, 3] = (value - lower) / (1.0 + width) if math.isfinite(width) else 0.5
        if math.isfinite(root_width):
            features[k, 4] = width / (1.0 + root_width)
        else:
            features[k, 4] = _squash(width) if math.isfinite(width) else 1.0
        features[k, 5] = min(1.0, node.depth / (1.0 + stats.n_vars))
        features[k, 6] = stats.column_count[j] / stats.n_rows if stats.n_rows else 0.0
        features[k, 7] = stats.mean_abs_column[j]
        if pseudocosts is not None:
            features[k, 8] = _squash(pseudocosts.estimate(j, is_left=False))
            features[k, 9] = _squash(pseudocosts.estimate(j, is_left=True))
        features[k, 10] = node.times_branched_on(j) / (1.0 + node.depth)
        features[k, 11] = 1.0 if math.isfinite(gub) else 0.0
    return features
