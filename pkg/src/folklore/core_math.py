"""Multinomial logistic loss primitives.

Vectors in R^{Kd} use row stacking: block ``k`` (entries ``k*d:(k+1)*d``) is
row ``k`` of the K x d weight matrix, so ``np.kron(u, x)`` places ``u[k] * x``
in block ``k``. Classes are 0-indexed.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

# Relative slack when checking ||x|| <= R so that x = R * unit passes.
_NORM_SLACK = 1e-12


def _as_vector(v, name):
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise InvalidInputError(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr


def _as_logits(z):
    z = _as_vector(z, "logits")
    if not np.isfinite(z).all():
        raise InvalidInputError("logits must be finite")
    return z


def softmax(z):
    """Softmax of a logit vector, shifted by its max for stability."""
    z = _as_logits(z)
    e = np.exp(z - z.max())
    return e / e.sum()


def logsumexp(z):
    z = _as_logits(z)
    m = z.max()
    return m + np.log(np.exp(z - m).sum())


def log_loss(z, y):
    """Multiclass logistic loss ``-sum_k y_k log softmax(z)_k``.

    ``y`` is a class index or a distribution over the K classes. The
    log-partition is split as ``max + log1p(rest)`` so that a confident
    correct prediction yields a loss near ``exp(-margin)`` instead of 0.
    """
    z = _as_logits(z)
    y = as_distribution(y, z.shape[0])
    shifted = z - z.max()
    top = int(np.argmax(shifted))
    e = np.exp(shifted)
    e[top] = 0.0
    return float(np.log1p(e.sum()) - y @ shifted)


def as_distribution(y, K):
    """Normalize a hard label or a probability vector to a length-K distribution."""
    if np.ndim(y) == 0:
        k = int(y)
        if k != y or not 0 <= k < K:
            raise InvalidInputError(f"class label {y!r} outside [0, {K})")
        out = np.zeros(K)
        out[k] = 1.0
        return out
    out = _as_vector(y, "label distribution")
    if out.shape[0] != K:
        raise InvalidInputError(f"label distribution has length {out.shape[0]}, expected {K}")
    if not (np.isfinite(out).all() and (out >= 0.0).all() and (out <= 1.0).all()):
        raise InvalidInputError("label distribution entries must lie in [0, 1]")
    if abs(out.sum() - 1.0) > 1e-12:
        raise InvalidInputError(f"label distribution sums to {out.sum()!r}, not 1")
    return out


def check_feature(x, R=None, d=None):
    """Validate a feature vector, optionally against a norm bound and a dimension."""
    x = _as_vector(x, "feature vector")
    if d is not None and x.shape[0] != d:
        raise InvalidInputError(f"feature vector has length {x.shape[0]}, expected {d}")
    if not np.isfinite(x).all():
        raise InvalidInputError("feature vector must be finite")
    if R is not None:
        norm = math.sqrt(x @ x)
        if norm > R * (1.0 + _NORM_SLACK):
            raise InvalidInputError(f"||x|| = {norm!r} exceeds R = {R!r}")
    return x


def grad_loss(sigma, y, x):
    """Gradient ``(sigma - y) kron x`` of the loss with respect to vec(W)."""
    sigma = _as_vector(sigma, "sigma")
    y = as_distribution(y, sigma.shape[0])
    x = check_feature(x)
    return np.outer(sigma - y, x).ravel()


@dataclass(frozen=True)
class KroneckerHessian:
    """The operator ``factor kron (x x^T)`` on R^{Kd}, kept in factored form."""

    factor: np.ndarray
    x: np.ndarray

    @property
    def K(self):
        return self.factor.shape[0]

    @property
    def d(self):
        return self.x.shape[0]

    def matvec(self, v):
        V = np.asarray(v, dtype=np.float64).reshape(self.K, self.d)
        return np.outer(self.factor @ (V @ self.x), self.x).ravel()

    def quad(self, v):
        u = np.asarray(v, dtype=np.float64).reshape(self.K, self.d) @ self.x
        return float(u @ self.factor @ u)

    def dense(self):
        """Materialize as a dense Kd x Kd matrix (tests and diagnostics only)."""
        return np.kron(self.factor, np.outer(self.x, self.x))


def softmax_jacobian(sigma):
    """``diag(sigma) - sigma sigma^T``, the K x K Hessian factor."""
    sigma = np.asarray(sigma, dtype=np.float64)
    return np.diag(sigma) - np.outer(sigma, sigma)


def hessian_loss(sigma, x):
    """Hessian of the loss in W; it does not depend on the label."""
    sigma = _as_vector(sigma, "sigma")
    x = check_feature(x)
    return KroneckerHessian(softmax_jacobian(sigma), x)


def diag_otimes(M, d):
    """Zero every off-diagonal d x d block of a Kd x Kd matrix."""
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {M.shape}")
    n = M.shape[0]
    if d < 1 or n % d:
        raise InvalidInputError(f"matrix size {n} is not a multiple of d = {d}")
    K = n // d
    out = np.zeros_like(M)
    for k in range(K):
        sl = slice(k * d, (k + 1) * d)
        out[sl, sl] = M[sl, sl]
    return out


def row_norms(W):
    return np.linalg.norm(np.asarray(W, dtype=np.float64), axis=1)


def norm_2_inf(W):
    """The 2 -> infinity norm: the largest row l2 norm."""
    return float(row_norms(W).max())
