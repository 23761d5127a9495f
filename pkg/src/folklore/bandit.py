"""Bandit multiclass prediction from a full-information logistic learner.

Each round explores with probability ``gamma`` by guessing a uniform class;
the inner learner is updated only when an exploratory guess turns out
correct. Otherwise the guess is sampled from the learner's softmax.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InvalidInputError, ProtocolError
from .learner import FolkloreLearner, log_regret_bound


def default_gamma(K, T, regret_fn):
    """Exploration rate ``min(1, sqrt(K * regret_fn(T) / T))``."""
    if T <= 0:
        raise ConfigError(f"horizon must be positive, got {T!r}")
    bound = regret_fn(T)
    if bound < 0:
        raise ConfigError("regret bound must be non-negative")
    return min(1.0, math.sqrt(K * bound / T))


def folklore_regret_fn(config):
    return lambda T: log_regret_bound(config.d, config.K, config.B, config.R, T)


@dataclass
class BanditConfig:
    gamma: float
    T: int
    inner: object

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError(f"gamma must lie in [0, 1], got {self.gamma!r}")

    @classmethod
    def with_default_gamma(cls, inner, T):
        return cls(default_gamma(inner.K, T, folklore_regret_fn(inner)), T, inner)


@dataclass
class _Pending:
    x: np.ndarray
    explore: bool
    guess: int
    snap: object


class BanditLearner:
    """Wraps a :class:`FolkloreLearner`; draws come from the caller's generator.

    Per round the draws are: one uniform for the exploration coin, then either
    a uniform class (explore) or a class from the learner's softmax (exploit).
    """

    def __init__(self, config, learner=None):
        self.config = config
        self.learner = FolkloreLearner(config.inner) if learner is None else learner
        self._pending = None
        self.last_explored = None

    @property
    def K(self):
        return self.learner.config.K

    def round(self, x, rng):
        if self._pending is not None:
            raise ProtocolError("previous round has not received feedback")
        explore = bool(rng.random() < self.config.gamma)
        if explore:
            snap = None
            guess = int(rng.integers(self.K))
        else:
            snap = self.learner.predict(x)
            guess = int(rng.choice(self.K, p=snap.sigma))
        self._pending = _Pending(np.asarray(x, dtype=np.float64), explore, guess, snap)
        self.last_explored = explore
        return guess

    def feedback(self, correct, true_class_if_correct=None):
        """Receive only whether the guess was right. Returns True if the inner learner updated."""
        pending = self._pending
        if pending is None:
            raise ProtocolError("feedback without a pending round")
        self._pending = None
        if true_class_if_correct is not None and correct and true_class_if_correct != pending.guess:
            raise InvalidInputError("a correct guess must equal the reported class")
        if not (pending.explore and correct):
            return False
        snap = self.learner.predict(pending.x)
        self.learner.observe(snap, pending.guess)
        return True


def bandit_round(state, x, rng):
    return state.round(x, rng)


def bandit_feedback(state, correct, true_class_if_correct=None):
    return state.feedback(correct, true_class_if_correct)
