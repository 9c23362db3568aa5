from typing import NamedTuple

from .engine import NodeSelection, SolveConfig, SolveStatus, solve


class RunOutcome(NamedTuple):
    node_count: int
    wall_time: float
    status: SolveStatus

    @property
    def finished(self):
        return self.status not in (SolveStatus.TIME_LIMIT, SolveStatus.NODE_LIMIT)


def realistic_run(instance, rule, seed, time_limit=None):
    """Best-first, no objective limit: the setting every evaluation uses."""
    config = SolveConfig(
        branching_rule=rule,
        node_selection=NodeSelection.BEST_FIRST,
        time_limit=time_limit,
        rng_seed=seed,
    )
    report = solve(instance, config)
    return RunOutcome(report.node_count, report.wall_time, report.status)
