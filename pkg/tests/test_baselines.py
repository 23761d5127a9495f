import math

import numpy as np
import pytest

from folklore.baselines import OgdState, ogd_step, project_rows
from folklore.core_math import softmax
from folklore.errors import ConfigError


def test_matched_label_leaves_weights():
    state = OgdState(2, 3, B=1.0, R=1.0)
    state.W = np.array([[0.1, 0.2], [0.0, -0.3], [0.2, 0.0]])
    x = np.array([0.5, 0.5])
    before = state.W.copy()
    z, state, _ = ogd_step(state, x, softmax(before @ x) / softmax(before @ x).sum())
    assert np.allclose(state.W, before, atol=1e-15)
    assert np.array_equal(z, before @ x)


def test_single_step_hand_calculation():
    state = OgdState(1, 2, B=1.0, R=1.0)
    z, state, loss = ogd_step(state, np.array([1.0]), 0)
    assert np.array_equal(z, [0.0, 0.0]) and loss == pytest.approx(math.log(2))
    # eta_1 = 1, gradient (0.5 - 1, 0.5) kron 1; row norms 0.5 stay inside B
    assert np.allclose(state.W, [[0.5], [-0.5]], atol=1e-15)


def test_projection_after_adversarial_steps():
    rng = np.random.default_rng(40)
    state = OgdState(3, 4, B=0.7, R=2.0, step_scale=5.0)
    for t in range(10):
        x = rng.normal(size=3)
        x *= 2.0 / np.linalg.norm(x)
        # label the class the model likes least
        state.step(x, int(np.argmin(state.W @ x)))
        assert np.linalg.norm(state.W, axis=1).max() <= 0.7 + 1e-12


def test_project_rows():
    W = np.array([[3.0, 4.0], [0.3, 0.4], [0.0, 0.0]])
    P = project_rows(W, 1.0)
    assert np.allclose(P, [[0.6, 0.8], [0.3, 0.4], [0.0, 0.0]])


def test_rejects_bad_constants():
    with pytest.raises(ConfigError):
        OgdState(2, 2, B=0.0)
    with pytest.raises(ConfigError):
        OgdState(2, 2, step_scale=-1.0)
