"""JSON solve reports carrying the full processed tree.

Wall-clock time is written only on request so that fixed-seed reports are
byte-identical across runs.
"""

import json
from pathlib import Path

from core.exceptions import ParseError, VersionMismatch
from milp.io import encode_number

REPORT_VERSION = 1


def _number(value):
    return None if value is None else encode_number(value)


def node_to_dict(node):
    action = None
    if node.action is not None:
        action = {'var': node.action.var_index, 'split': node.action.split_value}
        decision = node.action.decision
        if decision is not None:
            action['candidates'] = list(decision.candidate_vars)
            if decision.probs is not None:
                action['probs'] = [float(p) for p in decision.probs]
    return {
        'id': node.node_id,
        'parent': node.parent_id,
        'left': node.is_left_child,
        'depth': node.depth,
        'status': node.status.value if hasattr(node.status, 'value') else node.status,
        'local_lb': _number(node.local_lb),
        'gub': _number(node.gub_at_processing),
        'action': action,
        'children': list(node.children),
    }


def report_to_dict(report, *, timings=False, instance_path=None):
    payload = {
        'format': REPORT_VERSION,
        'instance': report.instance_name,
        'instance_path': None if instance_path is None else str(instance_path),
        'status': report.status.value,
        'obj': _number(report.obj),
        'glb': _number(report.glb),
        'node_count': report.node_count,
        'complete': report.complete,
        'config': report.config,
        'incumbent': None if report.incumbent is None else [float(v) for v in report.incumbent.x],
        'processed_order': list(report.processed_order),
        'nodes': [node_to_dict(node) for node in report.processed_nodes()],
    }
    if timings:
        payload['wall_time'] = report.wall_time
    return payload


def dumps_report(report, **kwargs):
    return json.dumps(report_to_dict(report, **kwargs), indent=1) + '\n'


def write_report(report, path, **kwargs):
    Path(path).write_text(dumps_report(report, **kwargs))


def read_report(path):
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding='utf-8'))
    except UnicodeDecodeError as exc:
        raise ParseError(f"not UTF-8 text (byte {exc.start})", path=path) from exc
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, path=path, line=exc.lineno) from exc
    if not isinstance(payload, dict):
        raise ParseError("top-level value must be an object", path=path)
    if payload.get('format') != REPORT_VERSION:
        raise VersionMismatch(f"report format {payload.get('format')!r} is not supported", path=path)
    for key in ('config', 'processed_order', 'nodes'):
        if key not in payload:
            raise ParseError("missing field", path=path, field=key)
    return payload
