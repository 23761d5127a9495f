"""Inverse cumulative-Hessian matrix and cumulative gradient for FOLKLORE."""

import hashlib
import struct

import numpy as np

from . import _kernels
from .core_math import check_feature, softmax_jacobian
from .errors import ConfigError, InvalidInputError, NumericalError

MAGIC = b"FKPD"
FORMAT_VERSION = 1
# magic, version, K, d, reserved, t, c_scale, lambda, config digest
_HEADER = struct.Struct("<4sIIIIQdd32s")

# Eigenvalues of the scaled K x K Hessian factor at or below this are dropped
# before the Woodbury update.
RANK_TOL = 1e-12


def config_digest(config):
    """SHA-256 over the fields that fix the meaning of a saved state."""
    key = f"{config.d}|{config.K}|{config.B!r}|{config.R!r}|{config.lam!r}"
    return hashlib.sha256(key.encode("ascii")).digest()


class PdState:
    """``A_inv = (lam I + c_scale * sum_s H_s)^{-1}`` and the linear term ``G``.

    ``G`` collects, for every past round, the coefficient of ``vec W`` in that
    round's surrogate loss: ``grad_s - 2 c_scale H_s vec W_s``. Since
    ``H_s vec W_s = (S_s z_s) kron x_s`` only the played logits are needed.

    ``A_inv`` is updated in place by rank <= K-1 Woodbury steps. When
    ``refresh_every`` is set, the dense ``A`` is accumulated as well and
    ``A_inv`` is re-inverted from it every ``refresh_every`` updates.
    """

    def __init__(self, A_inv, G, t, c_scale, lam, K, d, refresh_every=None,
                 A=None, digest=b"\0" * 32, since_refresh=0):
        self.A_inv = A_inv
        self.G = G
        self.t = t
        self.c_scale = c_scale
        self.lam = lam
        self.K = K
        self.d = d
        self.refresh_every = refresh_every
        self.A = A
        self.digest = digest
        self.since_refresh = since_refresh

    @classmethod
    def init(cls, config):
        if not config.lam > 0:
            raise ConfigError(f"lambda must be positive, got {config.lam!r}")
        n = config.K * config.d
        refresh = getattr(config, "refresh_every", None)
        A = config.lam * np.eye(n) if refresh else None
        return cls(np.eye(n) / config.lam, np.zeros(n), 0, config.c_scale,
                   config.lam, config.K, config.d, refresh_every=refresh, A=A,
                   digest=config_digest(config))

    @property
    def dim(self):
        return self.K * self.d

    def copy(self):
        return PdState(self.A_inv.copy(), self.G.copy(), self.t, self.c_scale,
                       self.lam, self.K, self.d, self.refresh_every,
                       None if self.A is None else self.A.copy(), self.digest,
                       self.since_refresh)

    def woodbury_update(self, sigma, x):
        """Fold ``c_scale * (diag(sigma) - sigma sigma^T) kron x x^T`` into A_inv.

        Leaves the state untouched and raises NumericalError if the inner
        solve is not positive definite.
        """
        x = check_feature(x, d=self.d)
        factor = self.c_scale * softmax_jacobian(sigma)
        new, ok = _kernels.woodbury_downdate(self.A_inv, factor, x, self.K, self.d, RANK_TOL)
        if not ok:
            raise NumericalError("Woodbury inner system is not positive definite")
        self.A_inv = new
        if self.A is not None:
            self.A += np.kron(factor, np.outer(x, x))
            self.since_refresh += 1
            if self.since_refresh >= self.refresh_every:
                self.refresh()

    def absorb(self, z, sigma, y, x):
        """Full end-of-round update for logits ``z`` played on ``x``.

        Returns the loss of ``z`` on distribution ``y``, applies the Woodbury
        step and adds ``(sigma - y - 2 c_scale S z) kron x`` to ``G``, where
        ``S = diag(sigma) - sigma sigma^T``.
        """
        loss, A_inv, G, ok = _kernels.observe_round(self.A_inv, self.G, z, sigma, y, x,
                                                    self.c_scale, self.K, self.d, RANK_TOL)
        if not ok:
            raise NumericalError("Woodbury inner system is not positive definite")
        self.A_inv, self.G = A_inv, G
        self.t += 1
        if self.A is not None:
            self.A += np.kron(self.c_scale * softmax_jacobian(sigma), np.outer(x, x))
            self.since_refresh += 1
            if self.since_refresh >= self.refresh_every:
                self.refresh()
        return float(loss)

    def refresh(self):
        """Replace A_inv by a dense inverse of the tracked A."""
        if self.A is None:
            raise ConfigError("refresh needs refresh_every set at construction")
        inv = np.linalg.inv(self.A)
        self.A_inv = 0.5 * (inv + inv.T)
        self.since_refresh = 0

    def accumulate_gradient(self, g):
        g = np.asarray(g, dtype=np.float64)
        if g.shape != (self.dim,):
            raise InvalidInputError(f"gradient has shape {g.shape}, expected ({self.dim},)")
        self.G = self.G + g
        self.t += 1

    def block_terms(self, x):
        x = check_feature(x, d=self.d)
        return _kernels.block_terms(self.A_inv, self.G, x, self.K, self.d)

    def block_quadratic(self, x):
        """K x K matrix with entries ``0.5 x^T [[A_inv]]_ij x``."""
        return self.block_terms(x)[0]

    def gtilde(self, x):
        """Length-K vector ``-0.5 <x, (A_inv G)_k> + 0.25 x^T [[A_inv]]_kk x``."""
        return self.block_terms(x)[1]

    def to_bytes(self):
        header = _HEADER.pack(MAGIC, FORMAT_VERSION, self.K, self.d, 0, self.t,
                              self.c_scale, self.lam, self.digest)
        return (header + self.A_inv.astype("<f8").tobytes()
                + self.G.astype("<f8").tobytes())

    @classmethod
    def from_bytes(cls, blob, config=None):
        """Rebuild a state; when ``config`` is given its digest must match."""
        if len(blob) < _HEADER.size:
            raise InvalidInputError("checkpoint is shorter than its header")
        magic, version, K, d, _, t, c_scale, lam, digest = _HEADER.unpack_from(blob)
        if magic != MAGIC:
            raise InvalidInputError(f"bad checkpoint magic {magic!r}")
        if version != FORMAT_VERSION:
            raise InvalidInputError(f"unsupported checkpoint version {version}")
        n = K * d
        expected = _HEADER.size + 8 * (n * n + n)
        if len(blob) != expected:
            raise InvalidInputError(f"checkpoint has {len(blob)} bytes, expected {expected}")
        if config is not None and config_digest(config) != digest:
            raise ConfigError("checkpoint was written under a different configuration")
        body = np.frombuffer(blob, dtype="<f8", offset=_HEADER.size)
        A_inv = body[: n * n].reshape(n, n).astype(np.float64)
        G = body[n * n:].astype(np.float64)
        refresh = getattr(config, "refresh_every", None) if config is not None else None
        A = None
        if refresh:
            A = np.linalg.inv(A_inv)
            A = 0.5 * (A + A.T)
        return cls(A_inv, G, t, c_scale, lam, K, d, refresh_every=refresh, A=A, digest=digest)
