"""Online multiclass boosting (AdaBoost.OLM++) on top of binary FOLKLORE.

Expert ``i`` refines the aggregated logits of expert ``i-1`` by a learned
shift along the class proposed by weak learner ``i``. That shift is learned
online by :class:`BoostingRegressor`, which reduces the problem to a
two-class, two-feature FOLKLORE instance. A hedge over the experts'
argmax predictions gives the final answer.
"""

import math

import numpy as np

from .core_math import softmax
from .errors import ConfigError, InvalidInputError, ProtocolError
from .learner import FolkloreLearner, LearnerConfig


def cost_matrix(s):
    """Cost ``C[y, k]`` of predicting ``k`` when the truth is ``y``.

    ``C[y, k] = (sigma_k - 1{k=y} - (sigma_y - 1)) / K`` with ``sigma = softmax(s)``:
    non-negative, zero on the diagonal, each row summing to ``1 - sigma_y``.
    """
    sigma = softmax(s)
    K = sigma.shape[0]
    C = (sigma[None, :] - sigma[:, None] + 1.0) / K
    np.fill_diagonal(C, 0.0)
    return C


def collapse(s, l):
    """Two-class logits ``(s_l, logsumexp(s_k for k != l))``."""
    s = np.asarray(s, dtype=np.float64)
    rest = np.delete(s, l)
    m = rest.max()
    return np.array([s[l], m + math.log(np.exp(rest - m).sum())])


def clip_feature(s_tilde, T):
    """Feature ``(clip(0.5 (s1 - s2), -ln T, ln T), 1)`` for the binary learner."""
    if T < 2:
        raise ConfigError(f"horizon must be at least 2, got {T!r}")
    bound = math.log(T)
    half_gap = 0.5 * (s_tilde[0] - s_tilde[1])
    return np.array([min(bound, max(-bound, half_gap)), 1.0])


def expand(s, l, zeta):
    """Lift binary logits ``zeta`` back to K classes.

    Class ``l`` gets ``zeta[0]``; every other class keeps its logit shifted by
    ``zeta[1] - logsumexp(s_k for k != l)``, so the relative odds among the
    other classes are those of ``s``.
    """
    s = np.asarray(s, dtype=np.float64)
    rest = np.delete(s, l)
    m = rest.max()
    lse = m + math.log(np.exp(rest - m).sum())
    out = s + (zeta[1] - lse)
    out[l] = zeta[0]
    return out


class BoostingRegressor:
    """Learns a per-round shift of the logits along a proposed class.

    Wraps FOLKLORE with ``K=2, d=2, R=1+ln T, B=2``; binary class 0 means the
    proposed class was right, class 1 that it was wrong.
    """

    def __init__(self, T, eps=1e-12):
        if T < 2:
            raise ConfigError(f"horizon must be at least 2, got {T!r}")
        self.T = int(T)
        self.learner = FolkloreLearner(
            LearnerConfig(d=2, K=2, R=1.0 + math.log(T), B=2.0, eps=eps))
        self._pending = None

    def round(self, s, l):
        if self._pending is not None:
            raise ProtocolError("previous boosting-regression round has no feedback yet")
        x = clip_feature(collapse(s, l), self.T)
        snap = self.learner.predict(x)
        self._pending = (snap, l)
        return expand(s, l, snap.z_hat)

    def feedback(self, y):
        if self._pending is None:
            raise ProtocolError("feedback without a pending boosting-regression round")
        snap, l = self._pending
        self._pending = None
        return self.learner.observe(snap, 0 if y == l else 1)


def boostreg_round(reg, s, l):
    return reg.round(s, l)


def boostreg_feedback(reg, y):
    return reg.feedback(y)


class WeakLearnerSim:
    """Simulated weak learner with a given edge.

    It cheats by reading the true label: with probability ``edge`` it returns
    the truth, otherwise a uniform class. This meets the weak-learning
    condition in expectation only.
    """

    def __init__(self, K, edge, rng=None):
        if not 0.0 <= edge <= 1.0:
            raise ConfigError(f"edge must lie in [0, 1], got {edge!r}")
        self.K = int(K)
        self.edge = float(edge)
        self.rng = np.random.default_rng() if rng is None else rng

    def predict(self, x, C, truth=None):
        if truth is None:
            raise ProtocolError("the simulated weak learner needs the true label")
        return weak_predict(self, truth, self.rng)

    def update(self, x, C, y):
        pass


def weak_predict(wl, y_true_peek, rng):
    if rng.random() < wl.edge:
        return int(y_true_peek)
    return int(rng.integers(wl.K))


class AdaBoostOLM:
    """Hedge over N boosting experts. Expert weights are kept as logs."""

    def __init__(self, weak_learners, K, T, eps=1e-12):
        if not weak_learners:
            raise ConfigError("need at least one weak learner")
        self.K = int(K)
        self.T = int(T)
        self.weak_learners = list(weak_learners)
        self.regressors = [BoostingRegressor(T, eps=eps) for _ in self.weak_learners]
        self.log_weights = np.zeros(len(self.weak_learners))
        self._pending = None

    @property
    def N(self):
        return len(self.weak_learners)

    @property
    def weights(self):
        w = np.exp(self.log_weights - self.log_weights.max())
        return w / w.sum()

    def round(self, x, rng, truth=None):
        """Return the predicted class. ``truth`` is forwarded to simulated weak learners."""
        if self._pending is not None:
            raise ProtocolError("previous boosting round has not received feedback")
        s = np.zeros(self.K)
        costs, guesses = [], np.empty(self.N, dtype=np.int64)
        for i, (wl, reg) in enumerate(zip(self.weak_learners, self.regressors)):
            C = cost_matrix(s)
            l = int(wl.predict(x, C, truth=truth))
            if not 0 <= l < self.K:
                raise InvalidInputError(f"weak learner {i} returned class {l}")
            s = reg.round(s, l)
            costs.append(C)
            guesses[i] = int(np.argmax(s))
        # Gumbel-max draw of an expert with probability proportional to its weight
        chosen = int(np.argmax(self.log_weights + rng.gumbel(size=self.N)))
        self._pending = (x, costs, guesses)
        return int(guesses[chosen])

    def feedback(self, y):
        if self._pending is None:
            raise ProtocolError("feedback without a pending boosting round")
        x, costs, guesses = self._pending
        self._pending = None
        for wl, reg, C in zip(self.weak_learners, self.regressors, costs):
            wl.update(x, C, y)
            reg.feedback(y)
        self.log_weights -= (guesses != y).astype(np.float64)
        self.log_weights -= self.log_weights.max()
        return guesses


def adaboost_round(boost, x, rng, truth=None):
    return boost.round(x, rng, truth=truth)


def adaboost_feedback(boost, y):
    return boost.feedback(y)
