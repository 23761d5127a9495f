"""Projected online gradient descent, the proper first-order baseline."""

import math

import numpy as np

from .core_math import as_distribution, check_feature, log_loss, softmax
from .errors import ConfigError


class OgdState:
    """Weight matrix kept inside the ball ``max_k ||W_k|| <= B``.

    The step at round t is ``step_scale * B / (R sqrt(t))``.
    """

    def __init__(self, d, K, B=1.0, R=1.0, step_scale=1.0):
        if B <= 0 or R <= 0 or step_scale <= 0:
            raise ConfigError("B, R and step_scale must be positive")
        self.d, self.K, self.B, self.R = int(d), int(K), float(B), float(R)
        self.step_scale = float(step_scale)
        self.W = np.zeros((self.K, self.d))
        self.t = 0

    def predict(self, x):
        return self.W @ check_feature(x, self.R, self.d)

    def step(self, x, y):
        """Predict with the current W, suffer the loss, then update.

        Returns ``(logits, loss)``.
        """
        x = check_feature(x, self.R, self.d)
        y = as_distribution(y, self.K)
        z = self.W @ x
        loss = log_loss(z, y)
        self.t += 1
        eta = self.step_scale * self.B / (self.R * math.sqrt(self.t))
        self.W -= eta * np.outer(softmax(z) - y, x)
        self.W = project_rows(self.W, self.B)
        return z, loss


def project_rows(W, B):
    """Scale every row with l2 norm above ``B`` back onto the sphere of radius ``B``."""
    norms = np.linalg.norm(W, axis=1)
    scale = np.minimum(1.0, B / np.maximum(norms, 1e-300))
    return W * scale[:, None]


def ogd_step(state, x, y):
    z, loss = state.step(x, y)
    return z, state, loss
