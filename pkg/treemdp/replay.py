"""Re-running a saved solve report and printing its recorded tree."""

import logging
from typing import NamedTuple, Optional

from bnb.engine import ChildOrder, NodeSelection, SolveConfig, solve
from bnb.report import report_to_dict
from branching.registry import parse_brancher
from core.exceptions import InvalidConfig
from milp.io import read_instance

logger = logging.getLogger(__name__)


class ReplayResult(NamedTuple):
    matches: bool
    recorded_nodes: int
    replayed_nodes: int
    first_difference: Optional[int] = None


def config_from_report(payload):
    config = payload['config']
    try:
        return SolveConfig(
            branching_rule=parse_brancher(config['brancher']),
            node_selection=NodeSelection(config['node_selection']),
            objective_limit=config.get('objective_limit'),
            node_limit=config.get('node_limit'),
            time_limit=config.get('time_limit'),
            rng_seed=config['rng_seed'],
            child_order=ChildOrder(config.get('child_order', ChildOrder.LEFT_FIRST)),
        )
    except (KeyError, ValueError) as exc:
        raise InvalidConfig(f"report config cannot be replayed ({exc})") from exc


def _signature(node):
    action = node['action']
    return node['id'], node['status'], None if action is None else action['var']


def replay(payload):
    """Solve the report's instance again with its configuration and compare node by node."""
    if not payload.get('instance_path'):
        raise InvalidConfig("report does not record its instance file")
    instance = read_instance(payload['instance_path'])
    replayed = report_to_dict(solve(instance, config_from_report(payload)))
    recorded, fresh = payload['nodes'], replayed['nodes']
    for t, (a, b) in enumerate(zip(recorded, fresh)):
        if _signature(a) != _signature(b):
            logger.info("replay diverges at processing step %d", t)
            return ReplayResult(False, len(recorded), len(fresh), t)
    if len(recorded) != len(fresh):
        return ReplayResult(False, len(recorded), len(fresh), min(len(recorded), len(fresh)))
    return ReplayResult(True, len(recorded), len(fresh))


def render_tree(payload):
    """Indented lines, one per processed node, children under their parent."""
    nodes = {node['id']: node for node in payload['nodes']}
    roots = [node['id'] for node in payload['nodes'] if node['parent'] is None]
    lines = []
    stack = [(node_id, 0) for node_id in reversed(roots)]
    while stack:
        node_id, indent = stack.pop()
        node = nodes[node_id]
        text = f"{'  ' * indent}#{node_id} {node['status']} lb={node['local_lb']} gub={node['gub']}"
        if node['action'] is not None:
            text += f" branch x{node['action']['var']} @ {node['action']['split']:.4g}"
        lines.append(text)
        for child in reversed(node['children']):
            if child in nodes:
                stack.append((child, indent + 1))
    return lines
