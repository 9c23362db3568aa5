"""Aggregates over solving runs: geometric means and per-instance spread.

Runs are grouped by (instance, seed). A pair counts only when every method
finished it.
"""

from collections import defaultdict
from typing import NamedTuple

import numpy as np
from scipy.stats import gmean

# status of a run abandoned after an LP breakdown
BREAKDOWN_STATUS = 'numerical-breakdown'


class RunRecord(NamedTuple):
    instance: str
    seed: int
    method: str
    node_count: int
    wall_time: float
    finished: bool
    status: str = ''


class MethodSummary(NamedTuple):
    method: str
    gmean_nodes: float
    gmean_time: float
    std_pct: float
    runs: int
    timeouts: int
    breakdowns: int = 0


def complete_pairs(runs, methods):
    """(instance, seed) pairs finished by every one of ``methods``."""
    finished = defaultdict(set)
    for run in runs:
        if run.finished:
            finished[(run.instance, run.seed)].add(run.method)
    wanted = set(methods)
    return {pair for pair, done in finished.items() if wanted <= done}


def geometric_mean(values):
    values = np.asarray(values, dtype=float)
    return float(gmean(values)) if values.size else float('nan')


def per_instance_std_pct(counts_by_instance):
    """Mean over instances of the across-seed standard deviation, as a percentage of the mean."""
    spreads = [
        100.0 * np.std(counts) / np.mean(counts)
        for counts in counts_by_instance.values() if len(counts) and np.mean(counts) > 0
    ]
    return float(np.mean(spreads)) if spreads else 0.0


def summarize(runs, methods):
    pairs = complete_pairs(runs, methods)
    summaries = []
    for method in methods:
        mine = [r for r in runs if r.method == method]
        kept = [r for r in mine if (r.instance, r.seed) in pairs]
        by_instance = defaultdict(list)
        for r in kept:
            by_instance[r.instance].append(r.node_count)
        summaries.append(MethodSummary(
            method=method,
            gmean_nodes=geometric_mean([r.node_count for r in kept]),
            gmean_time=geometric_mean([max(r.wall_time, 1e-6) for r in kept]),
            std_pct=per_instance_std_pct(by_instance),
            runs=len(kept),
            timeouts=sum(1 for r in mine if not r.finished and r.status != BREAKDOWN_STATUS),
            breakdowns=sum(1 for r in mine if r.status == BREAKDOWN_STATUS),
        ))
    return summaries
