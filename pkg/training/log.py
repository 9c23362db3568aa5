"""Per-epoch training records and the curve utilities used to compare regimes.

CSV columns, in order: epoch, samples_cumulative, episodes, skipped,
mean_episode_nodes, loss, entropy, accuracy, validation_gmean,
validation_std_pct. Empty cells mean "not measured this epoch".
"""

import csv
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np


@dataclass
class EpochStats:
    epoch: int
    samples_cumulative: int = 0
    episodes: int = 0
    skipped: int = 0
    mean_episode_nodes: Optional[float] = None
    loss: Optional[float] = None
    entropy: Optional[float] = None
    accuracy: Optional[float] = None
    validation_gmean: Optional[float] = None
    validation_std_pct: Optional[float] = None


CSV_COLUMNS = tuple(f.name for f in fields(EpochStats))


@dataclass
class TrainLog:
    records: list = field(default_factory=list)
    initial_validation: Optional[float] = None
    best_epoch: Optional[int] = None
    best_validation: Optional[float] = None

    def append(self, stats):
        if self.records and stats.samples_cumulative < self.records[-1].samples_cumulative:
            raise ValueError("cumulative sample count went backwards")
        self.records.append(stats)

    def validation_points(self):
        """``(samples_cumulative, validation_gmean)`` for every validated epoch."""
        return [(r.samples_cumulative, r.validation_gmean) for r in self.records if r.validation_gmean is not None]

    def write_csv(self, path):
        with Path(path).open('w', newline='') as fh:
            writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
            writer.writeheader()
            for record in self.records:
                writer.writerow({k: ('' if v is None else v) for k, v in asdict(record).items()})


def read_log_csv(path):
    log = TrainLog()
    with Path(path).open(newline='') as fh:
        for row in csv.DictReader(fh):
            values = {}
            for f in fields(EpochStats):
                cell = row.get(f.name, '')
                if cell == '':
                    values[f.name] = None if f.default is None else f.default
                elif f.name in ('epoch', 'samples_cumulative', 'episodes', 'skipped'):
                    values[f.name] = int(cell)
                else:
                    values[f.name] = float(cell)
            log.records.append(EpochStats(**values))
    return log


def moving_average(values, window):
    """Trailing mean over up to ``window`` points."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return values
    sums = np.cumsum(values)
    out = np.empty_like(values)
    for k in range(values.size):
        start = max(0, k - window + 1)
        out[k] = (sums[k] - (sums[start - 1] if start else 0.0)) / (k - start + 1)
    return out


def samples_to_reach(log, target, window=1):
    """Cumulative samples at the first validation point whose moving average is at or below ``target``."""
    points = log.validation_points()
    if not points:
        return None
    smoothed = moving_average([v for _, v in points], window)
    for (samples, _), value in zip(points, smoothed):
        if value <= target:
            return samples
    return None
