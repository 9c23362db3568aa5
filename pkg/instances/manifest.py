"""The per-directory manifest that lists generated instance files, seeds and optima."""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from core.exceptions import ParseError, VersionMismatch
from milp.instance import MilpInstance
from milp.io import read_instance

logger = logging.getLogger(__name__)

MANIFEST_NAME = 'manifest.json'
MANIFEST_VERSION = 1


@dataclass
class ManifestEntry:
    file: str
    seed: Optional[int] = None
    optimum: Optional[float] = None


@dataclass
class Manifest:
    family: Optional[str] = None
    size_params: dict = field(default_factory=dict)
    entries: list = field(default_factory=list)

    def to_dict(self):
        return {
            'format': MANIFEST_VERSION,
            'family': self.family,
            'size_params': self.size_params,
            'instances': [
                {'file': e.file, 'seed': e.seed, 'optimum': e.optimum} for e in self.entries
            ],
        }


@dataclass
class LoadedInstance:
    instance: MilpInstance
    path: Path
    optimum: Optional[float] = None
    seed: Optional[int] = None


def write_manifest(manifest, directory):
    path = Path(directory) / MANIFEST_NAME
    path.write_text(json.dumps(manifest.to_dict(), indent=2) + '\n')
    return path


def read_manifest(directory):
    """The directory's manifest, or one synthesised from its ``*.json`` files."""
    directory = Path(directory)
    path = directory / MANIFEST_NAME
    if not path.exists():
        files = sorted(p.name for p in directory.glob('*.json'))
        return Manifest(entries=[ManifestEntry(file=name) for name in files])
    try:
        payload = json.loads(path.read_text(encoding='utf-8'))
    except UnicodeDecodeError as exc:
        raise ParseError(f"not UTF-8 text (byte {exc.start})", path=path) from exc
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, path=path, line=exc.lineno) from exc
    if payload.get('format') != MANIFEST_VERSION:
        raise VersionMismatch(f"manifest format {payload.get('format')!r} is not supported", path=path)
    try:
        entries = [
            ManifestEntry(file=item['file'], seed=item.get('seed'), optimum=item.get('optimum'))
            for item in payload['instances']
        ]
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed instance list ({exc})", path=path, field='instances') from exc
    return Manifest(payload.get('family'), payload.get('size_params') or {}, entries)


def load_instance_set(directory):
    """Every instance listed in ``directory``'s manifest, in manifest order."""
    directory = Path(directory)
    manifest = read_manifest(directory)
    loaded = [
        LoadedInstance(read_instance(directory / e.file), directory / e.file, e.optimum, e.seed)
        for e in manifest.entries
    ]
    logger.info("loaded %d instances from %s", len(loaded), directory)
    return loaded
