"""Cross-product evaluation: every method on every instance under every seed.

All runs use the realistic setting (best-first, no objective limit); learned
policies are evaluated greedily. The solver seed of a run depends only on the
instance position and the seed index, so methods are compared on identical
(instance, seed) pairs.
"""

import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from bnb.runs import realistic_run
from branching.registry import parse_brancher
from branching.rules import PolicyRule
from core.exceptions import InvalidConfig, NumericalBreakdown
from core.seeding import derive_seed

from .aggregate import BREAKDOWN_STATUS, RunRecord, complete_pairs, summarize

logger = logging.getLogger(__name__)

CSV_SCHEMA_VERSION = 1
CSV_COLUMNS = ('schema_version', 'instance', 'seed', 'method', 'node_count', 'wall_time', 'status', 'finished')


def method_label(spec):
    """Display name of a brancher spec in report tables."""
    name, _, arg = spec.partition(':')
    if name == 'pseudocost':
        return 'pseudocost (reliability)'
    if name == 'strong':
        return 'strong branching'
    if name.startswith('policy'):
        return f"policy ({Path(arg).stem})" if arg else 'policy'
    return spec


def evaluation_rule(spec):
    rule = parse_brancher(spec)
    if isinstance(rule, PolicyRule):
        rule.greedy = True
    return rule


@dataclass
class EvalReport:
    methods: list
    runs: list = field(default_factory=list)

    @property
    def summaries(self):
        return summarize(self.runs, self.methods)

    @property
    def pairs(self):
        return complete_pairs(self.runs, self.methods)

    def write_csv(self, path):
        with Path(path).open('w', newline='') as fh:
            writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
            writer.writeheader()
            for run in self.runs:
                writer.writerow({'schema_version': CSV_SCHEMA_VERSION, **run._asdict()})

    def render_markdown(self):
        summaries = self.summaries
        lines = [
            f"Tree size over {len(self.pairs)} (instance, seed) pairs finished by every method",
            '',
            '| method | geo-mean nodes | per-instance std % | geo-mean time (s) |',
            '|---|---:|---:|---:|',
        ]
        for s in summaries:
            lines.append(f"| {method_label(s.method)} | {s.gmean_nodes:.1f} | {s.std_pct:.1f} | {s.gmean_time:.3f} |")
        lines += [
            '',
            'Runs that hit the time limit or broke down in the LP',
            '',
            '| method | timeouts | LP breakdowns |',
            '|---|---:|---:|',
        ]
        for s in summaries:
            lines.append(f"| {method_label(s.method)} | {s.timeouts} | {s.breakdowns} |")
        return '\n'.join(lines) + '\n'


def _evaluation_run(job):
    spec, instance, seed_index, seed, time_limit = job
    try:
        outcome = realistic_run(instance, evaluation_rule(spec), seed, time_limit)
    except NumericalBreakdown as exc:
        logger.warning("%s seed %d: %s abandoned after an LP breakdown (%s)", instance.name, seed_index, spec, exc)
        return RunRecord(instance.name, seed_index, spec, 0, 0.0, False, BREAKDOWN_STATUS)
    return RunRecord(
        instance=instance.name,
        seed=seed_index,
        method=spec,
        node_count=outcome.node_count,
        wall_time=outcome.wall_time,
        finished=outcome.finished,
        status=str(outcome.status.value),
    )


def evaluate(methods, instances, n_seeds, time_limit=None, seed=0, workers=1):
    """Solve every instance ``n_seeds`` times with every method.

    Brancher specs are parsed up front so that a missing policy file fails
    before any solving starts.
    """
    if not methods:
        raise InvalidConfig("no methods to evaluate")
    if not instances:
        raise InvalidConfig("no instances to evaluate on")
    if n_seeds < 1:
        raise InvalidConfig("n_seeds must be at least 1")
    for spec in methods:
        parse_brancher(spec)

    jobs = [
        (spec, instance, s, derive_seed(seed, k, s), time_limit)
        for k, instance in enumerate(instances)
        for s in range(n_seeds)
        for spec in methods
    ]
    logger.info("evaluating %d methods on %d instances x %d seeds", len(methods), len(instances), n_seeds)
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(_evaluation_run, jobs))
    else:
        runs = [_evaluation_run(job) for job in jobs]
    for run in runs:
        if not run.finished and run.status != BREAKDOWN_STATUS:
            logger.warning("%s seed %d: %s stopped at %s", run.instance, run.seed, run.method, run.status)
    return EvalReport(list(methods), runs)
