import math

import numpy as np


class PseudocostTracker:
    """Running means of per-unit objective gain for down (left) and up (right) branchings."""

    def __init__(self, n_vars):
        self.sums = np.zeros((2, n_vars))
        self.counts = np.zeros((2, n_vars), dtype=np.int64)

    @staticmethod
    def _side(is_left):
        return 0 if is_left else 1

    def record(self, var_index, is_left, gain, split_value):
        frac = split_value - math.floor(split_value)
        distance = frac if is_left else 1.0 - frac
        if distance <= 0.0:
            return
        side = self._side(is_left)
        self.sums[side, var_index] += max(gain, 0.0) / distance
        self.counts[side, var_index] += 1

    def count(self, var_index, is_left):
        return int(self.counts[self._side(is_left), var_index])

    def is_reliable(self, var_index, threshold):
        return min(self.counts[0, var_index], self.counts[1, var_index]) >= threshold

    def estimate(self, var_index, is_left):
        """Mean per-unit gain; variables never branched on get the average over all others."""
        side = self._side(is_left)
        if self.counts[side, var_index]:
            return float(self.sums[side, var_index] / self.counts[side, var_index])
        seen = self.counts[side] > 0
        if seen.any():
            return float(np.mean(self.sums[side, seen] / self.counts[side, seen]))
        return 1.0
