"""The FOLKLORE online learner for multiclass logistic regression.

Each round the learner receives ``x``, predicts logits ``z = W_t x`` where
``W_t`` minimizes ``lam ||W||_F^2 + sum_s surrogate_s(W) + phi_t(W)`` with an
``x``-dependent (improper) regularizer ``phi_t``. Expanding the quadratic
surrogates turns this into ``||W||^2_{A} + <W, G> + phi_t(W)``, and each round
folds a scaled Hessian into ``A`` and the surrogate's linear coefficient
into ``G``. Only ``A^{-1}`` is stored and
``W_t`` is never formed: the optimal logits solve the K-dimensional fixed
point ``z = gt - At softmax(z)``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .core_math import (
    as_distribution,
    check_feature,
    diag_otimes,
    log_loss,
    logsumexp,
    softmax,
    softmax_jacobian,
)
from .errors import ConfigError, InvalidInputError, NumericalError, ProtocolError
from .pd_state import PdState

# Hard ceiling on solver iterations whatever the configuration asks for.
MAX_ITERS_CAP = 10**6
# Below this largest eigenvalue of At the fixed point is z = gt.
DEGENERATE_TOL = 1e-12


@dataclass
class LearnerConfig:
    """Dimensions and constants for one learner.

    ``lam`` defaults to ``2R/B``. ``eps`` bounds the squared error of the
    returned logits against the exact fixed point.
    """

    d: int
    K: int
    B: float = 1.0
    R: float = 1.0
    lam: float = None
    eps: float = 1e-12
    max_iters: int = None
    refresh_every: int = None

    def __post_init__(self):
        if self.lam is None and self.B > 0:
            self.lam = 2.0 * self.R / self.B
        if int(self.d) != self.d or self.d < 1:
            raise ConfigError(f"d must be a positive integer, got {self.d!r}")
        if int(self.K) != self.K or self.K < 2:
            raise ConfigError(f"K must be an integer >= 2, got {self.K!r}")
        self.d, self.K = int(self.d), int(self.K)
        for name in ("B", "R", "lam", "eps"):
            value = getattr(self, name)
            if value is None or not math.isfinite(value) or value <= 0:
                raise ConfigError(f"{name} must be positive and finite, got {value!r}")
        if self.max_iters is not None and self.max_iters < 0:
            raise ConfigError(f"max_iters must be non-negative, got {self.max_iters!r}")
        if self.refresh_every is not None and self.refresh_every < 1:
            raise ConfigError(f"refresh_every must be >= 1, got {self.refresh_every!r}")

    @property
    def c_scale(self):
        """Weight ``1 / (BR + ln(K)/2)`` on each Hessian added to A."""
        return 1.0 / (self.B * self.R + 0.5 * math.log(self.K))

    @property
    def smoothness(self):
        return 1.0 + self.R ** 2 / self.lam

    @property
    def step_size(self):
        return 1.0 / self.smoothness

    @property
    def iteration_budget(self):
        """``ceil(L log(L^3 / eps))`` with ``L = 1 + R^2/lam``, capped."""
        if self.max_iters is not None:
            return min(int(self.max_iters), MAX_ITERS_CAP)
        L = self.smoothness
        tau = L * math.log(L ** 3 / self.eps)
        return min(max(int(math.ceil(tau)), 0), MAX_ITERS_CAP)


@dataclass
class PredictionSnapshot:
    """What ``observe`` needs from the matching ``predict`` call."""

    x: np.ndarray
    z_hat: np.ndarray
    sigma: np.ndarray
    iterations_used: int
    t: int = field(default=0, repr=False)


def log_regret_bound(d, K, B, R, T):
    """Explicit regret bound ``K (2BR + (BR + ln(K)/2) d ln(1+T))``."""
    return K * (2.0 * B * R + (B * R + 0.5 * math.log(K)) * d * math.log1p(T))


def solve_logits(config, state, x):
    """Approximate fixed point ``z = gt - At softmax(z)`` for input ``x``.

    Returns ``(z_hat, iterations)`` with ``||z_hat - z*||^2 <= eps``. For
    ``x = 0`` or a numerically zero ``At`` the fixed point is ``gt`` itself.
    """
    z, iters, ok = _kernels.predict_logits(state.A_inv, state.G, x, state.K, state.d,
                                           config.step_size, config.iteration_budget,
                                           config.eps, DEGENERATE_TOL)
    if not ok:
        raise NumericalError("non-finite values while solving for the logits")
    return z, int(iters)


class FolkloreLearner:
    """Online learner exposing the ``predict`` / ``observe`` protocol."""

    def __init__(self, config, state=None):
        self.config = config
        self.state = PdState.init(config) if state is None else state

    @property
    def t(self):
        return self.state.t

    def predict(self, x):
        x = check_feature(x, self.config.R, self.config.d)
        z, iters = solve_logits(self.config, self.state, x)
        return PredictionSnapshot(x=x, z_hat=z, sigma=softmax(z), iterations_used=iters,
                                  t=self.state.t)

    def observe(self, snap, y):
        """Suffer the loss of ``snap`` on label ``y`` and update the state.

        Gradient and Hessian are taken at the predicted logits.
        """
        if snap.t != self.state.t:
            raise ProtocolError(f"snapshot from round {snap.t} applied at round {self.state.t}")
        y = as_distribution(y, self.config.K)
        return self.state.absorb(snap.z_hat, snap.sigma, y, snap.x)

    def step(self, x, y):
        snap = self.predict(x)
        return snap, self.observe(snap, y)

    def frozen(self):
        """A copy that answers ``predict`` without ever updating."""
        return FrozenPredictor(self.config, self.state.copy())


class FrozenPredictor:
    def __init__(self, config, state):
        self.config = config
        self.state = state

    def predict(self, x):
        x = check_feature(x, self.config.R, self.config.d)
        return solve_logits(self.config, self.state, x)[0]

    def predict_proba(self, x):
        return softmax(self.predict(x))


def _dense_A(state):
    try:
        A = np.linalg.inv(state.A_inv)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"A_inv is singular: {exc}") from exc
    return 0.5 * (A + A.T)


def compute_bias(state, x):
    """Linear term of the regularizer:
    ``(1/K) 1 kron x - 0.5 A diag_blocks(A^{-1}) (1 kron x)``.

    Inverts ``A_inv`` densely, so it is meant for checks, not the hot loop.
    """
    x = check_feature(x, d=state.d)
    ones_x = np.kron(np.ones(state.K), x)
    A = _dense_A(state)
    return ones_x / state.K - 0.5 * A @ (diag_otimes(state.A_inv, state.d) @ ones_x)


def bias_target(state, x, W):
    """``softmax(Wx) kron x - 0.5 A diag_blocks(A^{-1}) (1 kron x)``, the gradient
    the regularizer is built to match."""
    x = check_feature(x, d=state.d)
    W = np.asarray(W, dtype=np.float64).reshape(state.K, state.d)
    ones_x = np.kron(np.ones(state.K), x)
    A = _dense_A(state)
    return np.kron(softmax(W @ x), x) - 0.5 * A @ (diag_otimes(state.A_inv, state.d) @ ones_x)


def regularizer_value_and_grad(config, state, x, W, bias=None):
    """Value and gradient of ``(1/K) sum_k loss(Wx, k) + <vec W, bias>``."""
    x = check_feature(x, d=config.d)
    W = np.asarray(W, dtype=np.float64)
    if W.shape != (config.K, config.d):
        raise InvalidInputError(f"W has shape {W.shape}, expected {(config.K, config.d)}")
    if bias is None:
        bias = compute_bias(state, x)
    z = W @ x
    # mean over k of (logsumexp(z) - z_k)
    value = logsumexp(z) - z.mean() + W.ravel() @ bias
    grad = np.kron(softmax(z) - 1.0 / config.K, x) + bias
    return float(value), grad


def surrogate_loss(config, snap, y, W):
    """Quadratic lower bound of the loss at round ``snap``, evaluated at ``W``.

    Works on logits: with ``delta = Wx - z_hat``,
    ``loss(z_hat, y) + <delta, sigma - y> + c_scale * delta^T (diag(sigma) - sigma sigma^T) delta``.
    """
    y = as_distribution(y, config.K)
    W = np.asarray(W, dtype=np.float64).reshape(config.K, config.d)
    delta = W @ snap.x - snap.z_hat
    quad = delta @ softmax_jacobian(snap.sigma) @ delta
    return float(log_loss(snap.z_hat, y) + delta @ (snap.sigma - y) + config.c_scale * quad)
