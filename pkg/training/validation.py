from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from typing import NamedTuple

from bnb.runs import realistic_run
from branching.rules import PolicyRule
from core.seeding import derive_seed
from evaluation.aggregate import geometric_mean, per_instance_std_pct


class ValidationResult(NamedTuple):
    gmean: float
    std_pct: float
    finished: int
    timeouts: int


def _validation_run(job):
    _, instance, params, seed, time_limit = job
    return realistic_run(instance, PolicyRule(params, greedy=True), seed, time_limit)


def validate(params, instances, n_seeds, time_limit=None, master_seed=0, workers=1):
    """Greedy policy, best-first, no objective limit, whatever the training regime was.

    Runs that hit the time limit are left out of both aggregates. Seed spread is
    grouped by position in ``instances``, so instances sharing a name stay apart.
    """
    jobs = [
        (k, instance, params, derive_seed(master_seed, k, s), time_limit)
        for k, instance in enumerate(instances) for s in range(n_seeds)
    ]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_validation_run, jobs))
    else:
        outcomes = [_validation_run(job) for job in jobs]

    counts = defaultdict(list)
    finished, timeouts = [], 0
    for (k, *_), outcome in zip(jobs, outcomes):
        if outcome.finished:
            counts[k].append(outcome.node_count)
            finished.append(outcome.node_count)
        else:
            timeouts += 1
    return ValidationResult(geometric_mean(finished), per_instance_std_pct(counts), len(finished), timeouts)
