"""Versioned policy files (numpy ``.npz`` archives)."""

import logging
import zipfile
from pathlib import Path

import numpy as np

from core.exceptions import ParseError, PolicyNotFound, VersionMismatch

from .features import N_FEATURES
from .network import PolicyParams

logger = logging.getLogger(__name__)

POLICY_VERSION = 1
KEYS = ('W1', 'b1', 'w2', 'b2')


def save_policy(params, path):
    path = Path(path)
    with path.open('wb') as fh:
        np.savez(
            fh,
            format_version=np.array(POLICY_VERSION),
            W1=params.W1, b1=params.b1, w2=params.w2, b2=np.array(params.b2),
        )
    logger.debug("saved policy (%d parameters) to %s", params.size, path)


def load_policy(path, *, n_features=N_FEATURES):
    path = Path(path)
    if not path.is_file():
        raise PolicyNotFound(f"no policy file at {path}")
    try:
        with np.load(path, allow_pickle=False) as archive:
            arrays = {key: archive[key] for key in archive.files}
    except (OSError, ValueError, EOFError, zipfile.BadZipFile) as exc:
        raise ParseError(f"not a policy archive ({exc})", path=path) from exc

    if 'format_version' not in arrays:
        raise ParseError("missing format version", path=path, field='format_version')
    version = int(arrays['format_version'])
    if version != POLICY_VERSION:
        raise VersionMismatch(f"policy format {version} is not supported", path=path, field='format_version')
    missing = [key for key in KEYS if key not in arrays]
    if missing:
        raise ParseError(f"missing arrays {', '.join(missing)}", path=path, field=missing[0])

    W1, b1, w2 = arrays['W1'], arrays['b1'], arrays['w2']
    if W1.ndim != 2 or W1.shape[0] != n_features or b1.shape != (W1.shape[1],) or w2.shape != (W1.shape[1],):
        raise ParseError(f"inconsistent shapes {W1.shape}, {b1.shape}, {w2.shape}", path=path)
    if not all(np.all(np.isfinite(a)) for a in (W1, b1, w2, arrays['b2'])):
        raise ParseError("non-finite parameters", path=path)
    return PolicyParams(W1.astype(float), b1.astype(float), w2.astype(float), float(arrays['b2']))
