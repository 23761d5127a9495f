import math

import numpy as np
import pytest

from folklore.bandit import (
    BanditConfig,
    BanditLearner,
    bandit_feedback,
    bandit_round,
    default_gamma,
    folklore_regret_fn,
)
from folklore.errors import ConfigError, ProtocolError
from folklore.learner import FolkloreLearner, LearnerConfig
from oracles import random_ball


def chi_square_ok(counts, probs, n):
    expected = n * np.asarray(probs)
    stat = ((counts - expected) ** 2 / expected).sum()
    # 99.9% quantile for up to 4 degrees of freedom is below 18.5
    return stat < 18.5


def make(gamma, d=2, K=3, T=1000):
    return BanditLearner(BanditConfig(gamma, T, LearnerConfig(d=d, K=K)))


def test_default_gamma_boundaries():
    assert default_gamma(4, 100, lambda T: T / 4) == 1.0
    assert default_gamma(4, 100, lambda T: 0.0) == 0.0
    assert default_gamma(4, 100, lambda T: 10 * T) == 1.0
    with pytest.raises(ConfigError):
        default_gamma(3, 0, lambda T: 1.0)


def test_default_gamma_formula():
    config = LearnerConfig(d=5, K=3, B=1.0, R=1.0)
    T = 10 ** 4
    bound = 3 * (2 + (1 + math.log(3) / 2) * 5 * math.log(1 + T))
    assert default_gamma(3, T, folklore_regret_fn(config)) == pytest.approx(math.sqrt(3 * bound / T))
    assert BanditConfig.with_default_gamma(config, T).gamma == pytest.approx(math.sqrt(3 * bound / T))
    with pytest.raises(ConfigError):
        BanditConfig(1.5, T, config)


def test_full_exploration_is_uniform():
    rng = np.random.default_rng(50)
    bandit = make(1.0)
    # bias the learner towards class 0 first
    for _ in range(20):
        bandit.learner.step(np.array([0.7, 0.0]), 0)
    counts = np.zeros(3)
    n = 30000
    for _ in range(n):
        counts[bandit_round(bandit, np.array([0.7, 0.0]), rng)] += 1
        bandit_feedback(bandit, False)
    assert chi_square_ok(counts, [1 / 3] * 3, n)


def test_pure_exploitation_follows_softmax():
    rng = np.random.default_rng(51)
    bandit = make(0.0)
    for _ in range(30):
        bandit.learner.step(np.array([0.9, 0.1]), 1)
    x = np.array([0.9, 0.1])
    probs = bandit.learner.predict(x).sigma
    n = 100000
    counts = np.zeros(3)
    for _ in range(n):
        counts[bandit.round(x, rng)] += 1
        bandit.feedback(False)
    se = np.sqrt(probs * (1 - probs) / n)
    assert np.all(np.abs(counts / n - probs) <= 3 * se)


def test_binary_fresh_learner_is_uniform():
    rng = np.random.default_rng(52)
    bandit = make(0.0, d=2, K=2)
    n = 20000
    hits = 0
    for _ in range(n):
        hits += bandit.round(np.array([0.3, 0.4]), rng)
        bandit.feedback(False)
    assert abs(hits / n - 0.5) <= 3 * math.sqrt(0.25 / n)


def test_update_gating():
    rng = np.random.default_rng(53)
    bandit = make(0.4)
    events = 0
    for _ in range(2000):
        x = random_ball(rng, 2, 1.0)
        y = int(rng.integers(3))
        t_before = bandit.learner.t
        guess = bandit.round(x, rng)
        explored = bandit.last_explored
        correct = guess == y
        updated = bandit.feedback(correct, y if correct else None)
        assert updated == (explored and correct)
        assert bandit.learner.t == t_before + int(updated)
        events += explored and correct
    assert bandit.learner.t == events > 0


def test_feedback_protocol():
    bandit = make(0.5)
    with pytest.raises(ProtocolError):
        bandit.feedback(True)
    bandit.round(np.array([0.1, 0.1]), np.random.default_rng(0))
    with pytest.raises(ProtocolError):
        bandit.round(np.array([0.1, 0.1]), np.random.default_rng(0))


def test_draw_order_is_reproducible():
    def trace(seed):
        rng = np.random.default_rng(seed)
        bandit = make(0.3)
        out = []
        for i in range(200):
            g = bandit.round(np.array([0.5, -0.5]), rng)
            bandit.feedback(g == i % 3, g if g == i % 3 else None)
            out.append(g)
        return out

    assert trace(7) == trace(7)


def test_custom_inner_learner_is_used():
    inner = FolkloreLearner(LearnerConfig(d=2, K=3))
    bandit = BanditLearner(BanditConfig(1.0, 10, inner.config), learner=inner)
    assert bandit.learner is inner
