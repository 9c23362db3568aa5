"""One-hidden-layer candidate scorer with a softmax over candidates.

``logit_k = w2 · tanh(φ_k W1 + b1) + b2``. Gradients are analytic; a
:class:`PolicyParams` doubles as the gradient container.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import log_softmax

from core.seeding import make_rng

from .features import N_FEATURES

HIDDEN = 32
LOG_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class PolicyParams:
    W1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: float

    @classmethod
    def initial(cls, seed, n_features=N_FEATURES, hidden=HIDDEN):
        rng = make_rng(seed)
        scale = 1.0 / np.sqrt(n_features)
        return cls(
            W1=rng.uniform(-scale, scale, size=(n_features, hidden)),
            b1=rng.uniform(-scale, scale, size=hidden),
            w2=rng.uniform(-scale, scale, size=hidden),
            b2=float(rng.uniform(-scale, scale)),
        )

    @classmethod
    def zeros(cls, n_features=N_FEATURES, hidden=HIDDEN):
        return cls(np.zeros((n_features, hidden)), np.zeros(hidden), np.zeros(hidden), 0.0)

    @property
    def n_features(self):
        return self.W1.shape[0]

    @property
    def hidden(self):
        return self.W1.shape[1]

    @property
    def size(self):
        return self.W1.size + self.b1.size + self.w2.size + 1

    def flatten(self):
        return np.concatenate([self.W1.reshape(-1), self.b1, self.w2, [self.b2]])

    @classmethod
    def from_flat(cls, vector, n_features, hidden):
        vector = np.asarray(vector, dtype=float)
        split = n_features * hidden
        return cls(
            W1=vector[:split].reshape(n_features, hidden).copy(),
            b1=vector[split:split + hidden].copy(),
            w2=vector[split + hidden:split + 2 * hidden].copy(),
            b2=float(vector[split + 2 * hidden]),
        )

    def like(self, vector):
        return PolicyParams.from_flat(vector, self.n_features, self.hidden)

    def __add__(self, other):
        return PolicyParams(self.W1 + other.W1, self.b1 + other.b1, self.w2 + other.w2, self.b2 + other.b2)

    def scaled(self, factor):
        return PolicyParams(self.W1 * factor, self.b1 * factor, self.w2 * factor, self.b2 * factor)

    def equals(self, other):
        return np.array_equal(self.flatten(), other.flatten())


PolicyGradient = PolicyParams


class Forward(NamedTuple):
    probs: np.ndarray
    logits: np.ndarray
    hidden: np.ndarray


def _forward(params, features):
    features = np.atleast_2d(np.asarray(features, dtype=float))
    hidden = np.tanh(features @ params.W1 + params.b1)
    logits = hidden @ params.w2 + params.b2
    # every candidate keeps at least LOG_FLOOR mass before renormalising
    probs = np.exp(np.maximum(log_softmax(logits), np.log(LOG_FLOOR)))
    return Forward(probs / probs.sum(), logits, hidden)


def policy_forward(params, features):
    """``(probs, logits)`` over the candidates in ``features`` (one row each)."""
    out = _forward(params, features)
    return out.probs, out.logits


def _backprop(params, features, forward, dlogits):
    features = np.atleast_2d(np.asarray(features, dtype=float))
    dpre = dlogits[:, None] * params.w2[None, :] * (1.0 - forward.hidden ** 2)
    return PolicyParams(
        W1=features.T @ dpre,
        b1=dpre.sum(axis=0),
        w2=forward.hidden.T @ dlogits,
        b2=float(dlogits.sum()),
    )


def _log(probs):
    return np.log(np.maximum(probs, LOG_FLOOR))


def logprob_grad(params, features, chosen_index):
    forward = _forward(params, features)
    dlogits = -forward.probs.copy()
    dlogits[chosen_index] += 1.0
    logp = float(_log(forward.probs)[chosen_index])
    return logp, _backprop(params, features, forward, dlogits)


def entropy_grad(params, features):
    forward = _forward(params, features)
    logp = _log(forward.probs)
    entropy = float(-(forward.probs * logp).sum())
    dlogits = -forward.probs * (logp + entropy)
    return entropy, _backprop(params, features, forward, dlogits)


def sample_action(params, features, rng):
    """Inverse-CDF draw over the candidate order."""
    probs, _ = policy_forward(params, features)
    return sample_index(probs, rng)


def sample_index(probs, rng):
    cdf = np.cumsum(probs)
    index = int(np.searchsorted(cdf, rng.random() * cdf[-1], side='right'))
    return min(index, probs.size - 1)


def greedy_action(params, features):
    """Highest logit, lowest index on ties."""
    _, logits = policy_forward(params, features)
    return int(np.argmax(logits))
