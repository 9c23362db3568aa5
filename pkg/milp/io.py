"""Instance file format (JSON, one field per line).

::

    {
      "format": 1,
      "name": "setcover-...",
      "n_vars": 3,
      "n_rows": 2,
      "obj": [1.0, 1.0, 1.0],
      "row_triplets": [[0, 0, -1.0], [0, 2, -1.0], ...],
      "rhs": [-1.0, -1.0],
      "lower": [0.0, 0.0, 0.0],
      "upper": [1.0, 1.0, "inf"],
      "int_set": [0, 1]
    }

Infinite bounds are the strings ``"inf"`` and ``"-inf"``.
"""

import json
import math
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from core.exceptions import DimensionMismatch, InvalidInstance, ParseError, VersionMismatch

from .instance import FORMAT_VERSION, MilpInstance

FIELDS = ('format', 'name', 'n_vars', 'n_rows', 'obj', 'row_triplets', 'rhs', 'lower', 'upper', 'int_set')


def encode_number(value):
    if math.isinf(value):
        return 'inf' if value > 0 else '-inf'
    return float(value)


def decode_number(value, field):
    if value == 'inf':
        return math.inf
    if value == '-inf':
        return -math.inf
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    raise ParseError(f"bound {value!r} is neither a number nor 'inf'/'-inf'", field=field)


def instance_to_dict(inst):
    coo = inst.rows.tocoo()
    order = np.lexsort((coo.col, coo.row))
    triplets = [[int(coo.row[k]), int(coo.col[k]), float(coo.data[k])] for k in order]
    return {
        'format': FORMAT_VERSION,
        'name': inst.name,
        'n_vars': inst.n_vars,
        'n_rows': inst.n_rows,
        'obj': [float(v) for v in inst.obj],
        'row_triplets': triplets,
        'rhs': [float(v) for v in inst.rhs],
        'lower': [encode_number(v) for v in inst.lower],
        'upper': [encode_number(v) for v in inst.upper],
        'int_set': list(inst.int_set),
    }


def _number_list(payload, field, length):
    values = payload[field]
    if not isinstance(values, list) or len(values) != length:
        raise ParseError(f"expected a list of {length} numbers", field=field)
    for v in values:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise ParseError(f"non-numeric entry {v!r}", field=field)
    return np.asarray(values, dtype=float)


def _count(payload, field):
    value = payload[field]
    if isinstance(value, bool) or not isinstance(value, int) or value < 0:
        raise ParseError(f"expected a non-negative integer, got {value!r}", field=field)
    return value


def instance_from_dict(payload):
    if not isinstance(payload, dict):
        raise ParseError("top-level value must be an object")
    missing = [f for f in FIELDS if f not in payload]
    if missing:
        raise ParseError(f"missing fields {', '.join(missing)}", field=missing[0])
    if payload['format'] != FORMAT_VERSION:
        raise VersionMismatch(
            f"format {payload['format']!r} is not supported (expected {FORMAT_VERSION})", field='format'
        )
    if not isinstance(payload['name'], str):
        raise ParseError("name must be a string", field='name')

    n_vars = _count(payload, 'n_vars')
    n_rows = _count(payload, 'n_rows')
    obj = _number_list(payload, 'obj', n_vars)
    rhs = _number_list(payload, 'rhs', n_rows)
    for field in ('lower', 'upper'):
        if not isinstance(payload[field], list) or len(payload[field]) != n_vars:
            raise ParseError(f"expected a list of {n_vars} bounds", field=field)
    lower = np.array([decode_number(v, 'lower') for v in payload['lower']])
    upper = np.array([decode_number(v, 'upper') for v in payload['upper']])

    triplets = payload['row_triplets']
    if not isinstance(triplets, list):
        raise ParseError("expected a list of [row, column, value] triplets", field='row_triplets')
    rows, cols, vals = [], [], []
    for k, triplet in enumerate(triplets):
        if (
            not isinstance(triplet, list) or len(triplet) != 3
            or not all(isinstance(t, int) and not isinstance(t, bool) for t in triplet[:2])
            or isinstance(triplet[2], bool) or not isinstance(triplet[2], (int, float))
        ):
            raise ParseError(f"entry {k} is not a [row, column, value] triplet", field='row_triplets')
        i, j, v = triplet
        if not (0 <= i < n_rows and 0 <= j < n_vars):
            raise ParseError(f"entry {k} indexes ({i}, {j}) outside {n_rows}x{n_vars}", field='row_triplets')
        rows.append(i)
        cols.append(j)
        vals.append(float(v))
    matrix = sp.csr_matrix((vals, (rows, cols)), shape=(n_rows, n_vars), dtype=float)

    int_set = payload['int_set']
    if not isinstance(int_set, list) or not all(isinstance(j, int) and not isinstance(j, bool) for j in int_set):
        raise ParseError("expected a list of variable indices", field='int_set')
    for j in int_set:
        if not 0 <= j < n_vars:
            raise ParseError(f"integer index {j} is outside 0..{n_vars - 1}", field='int_set')

    try:
        return MilpInstance(payload['name'], obj, matrix, rhs, lower, upper, tuple(int_set))
    except (InvalidInstance, DimensionMismatch) as exc:
        raise ParseError(str(exc)) from exc


def dumps_instance(inst):
    payload = instance_to_dict(inst)
    body = ',\n'.join(f"  {json.dumps(key)}: {json.dumps(payload[key])}" for key in FIELDS)
    return '{\n' + body + '\n}\n'


def write_instance(inst, path):
    Path(path).write_text(dumps_instance(inst))


def _line_of(text, field):
    needle = json.dumps(field) + ':'
    for number, line in enumerate(text.splitlines(), start=1):
        if needle in line:
            return number
    return None


def read_instance(path):
    try:
        text = Path(path).read_text(encoding='utf-8')
    except UnicodeDecodeError as exc:
        raise ParseError(f"not UTF-8 text (byte {exc.start})", path=path) from exc
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, path=path, line=exc.lineno) from exc
    try:
        return instance_from_dict(payload)
    except ParseError as exc:
        line = _line_of(text, exc.field) if exc.field else None
        raise type(exc)(exc.detail, path=path, line=line, field=exc.field) from exc
