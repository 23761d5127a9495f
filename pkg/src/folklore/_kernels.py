"""Compiled inner loops for the per-round learner work.

Each round touches only K x K and Kd x Kd arrays, so the cost is dominated by
interpreter overhead unless these loops are compiled.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def block_terms(A_inv, G, x, K, d):
    """Return ``(At, gt)`` with At[i, j] = 0.5 x^T [[A_inv]]_ij x and
    gt[k] = -0.5 <x, (A_inv G)_k> + 0.25 x^T [[A_inv]]_kk x."""
    n = K * d
    # Ax[r, j] = sum_b A_inv[r, j*d + b] x[b]
    Ax = np.zeros((n, K))
    for r in range(n):
        for j in range(K):
            acc = 0.0
            for b in range(d):
                acc += A_inv[r, j * d + b] * x[b]
            Ax[r, j] = acc
    At = np.zeros((K, K))
    for i in range(K):
        for j in range(K):
            acc = 0.0
            for a in range(d):
                acc += x[a] * Ax[i * d + a, j]
            At[i, j] = 0.5 * acc
    for i in range(K):
        for j in range(i + 1, K):
            s = 0.5 * (At[i, j] + At[j, i])
            At[i, j] = s
            At[j, i] = s
    # <x, (A_inv G)_k> = sum_j <G_j, [[A_inv]]_jk x> by symmetry of A_inv
    gt = np.zeros(K)
    for k in range(K):
        acc = 0.0
        for r in range(n):
            acc += G[r] * Ax[r, k]
        gt[k] = -0.5 * acc + 0.5 * At[k, k]
    return At, gt


@njit(cache=True)
def _softmax(z):
    m = z.max()
    e = np.exp(z - m)
    return e / e.sum()


@njit(cache=True)
def fixed_point_descent(At, gt, evals, evecs, step, max_iter, eps):
    """Gradient descent on the whitened objective, run in logit coordinates.

    With u = At^{-1/2} z, a gradient step of size ``step`` on
    0.5||u||^2 - <u, At^{-1/2} gt> + logsumexp(At^{1/2} u) maps to
    z <- z - step * (z - gt + At softmax(z)), started from z = gt. Stops early
    once lambda_max(At) * ||At^{-1/2} residual||^2 <= eps, which bounds the
    squared distance to the fixed point because the objective is 1-strongly
    convex. Returns the iterate and the number of steps taken.
    """
    K = gt.shape[0]
    lam_max = evals[K - 1]
    z = gt.copy()
    r = np.empty(K)
    for it in range(max_iter + 1):
        s = _softmax(z)
        for i in range(K):
            acc = 0.0
            for j in range(K):
                acc += At[i, j] * s[j]
            r[i] = z[i] - gt[i] + acc
        cert = 0.0
        for j in range(K):
            q = 0.0
            for i in range(K):
                q += evecs[i, j] * r[i]
            if evals[j] <= 0.0:
                cert = np.inf
                break
            cert += q * q / evals[j]
        if lam_max * cert <= eps or it == max_iter:
            return z, it
        for i in range(K):
            z[i] -= step * r[i]
    return z, max_iter


@njit(cache=True)
def woodbury_downdate(A_inv, factor, x, K, d, tol):
    """Inverse of ``inv(A_inv) + factor kron (x x^T)`` through its low-rank part.

    Eigenpairs of the K x K ``factor`` at or below ``tol`` are dropped; the
    factor always annihilates the all-ones vector, so full-rank Woodbury would
    be singular. Returns ``(new_A_inv, ok)``; ``ok`` is False when the inner
    r x r system is not positive definite.
    """
    n = K * d
    evals, evecs = np.linalg.eigh(factor)
    r = 0
    for j in range(K):
        if evals[j] > tol:
            r += 1
    if r == 0:
        return A_inv.copy(), True
    U = np.zeros((n, r))
    c = 0
    for j in range(K):
        if evals[j] > tol:
            sq = np.sqrt(evals[j])
            for k in range(K):
                for a in range(d):
                    U[k * d + a, c] = sq * evecs[k, j] * x[a]
            c += 1
    AU = A_inv @ U
    S = U.T @ AU
    for j in range(r):
        S[j, j] += 1.0
    for i in range(r):
        for j in range(i + 1, r):
            s = 0.5 * (S[i, j] + S[j, i])
            S[i, j] = s
            S[j, i] = s
    # Cholesky by hand so failure is reported instead of raised.
    L = np.zeros((r, r))
    for i in range(r):
        for j in range(i + 1):
            acc = S[i, j]
            for k in range(j):
                acc -= L[i, k] * L[j, k]
            if i == j:
                if not acc > 0.0:
                    return A_inv.copy(), False
                L[i, i] = np.sqrt(acc)
            else:
                L[i, j] = acc / L[j, j]
    # Solve L Y = AU^T, then downdate by Y^T Y.
    Y = np.zeros((r, n))
    for col in range(n):
        for i in range(r):
            acc = AU[col, i]
            for k in range(i):
                acc -= L[i, k] * Y[k, col]
            Y[i, col] = acc / L[i, i]
    out = A_inv - Y.T @ Y
    res = 0.5 * (out + out.T)
    for i in range(n):
        for j in range(n):
            if not np.isfinite(res[i, j]):
                return A_inv.copy(), False
    return res, True


@njit(cache=True)
def predict_logits(A_inv, G, x, K, d, step, max_iter, eps, degenerate_tol):
    """Block terms, eigendecomposition and fixed-point descent in one call.

    Returns ``(z, iterations, ok)``; ``ok`` is False on non-finite values.
    """
    At, gt = block_terms(A_inv, G, x, K, d)
    for i in range(K):
        if not np.isfinite(gt[i]):
            return gt, 0, False
        for j in range(K):
            if not np.isfinite(At[i, j]):
                return gt, 0, False
    nonzero = False
    for a in range(d):
        if x[a] != 0.0:
            nonzero = True
    if not nonzero:
        return gt, 0, True
    evals, evecs = np.linalg.eigh(At)
    if evals[K - 1] < degenerate_tol:
        return gt, 0, True
    for j in range(K):
        if evals[j] < 0.0:
            evals[j] = 0.0
    z, iters = fixed_point_descent(At, gt, evals, evecs, step, max_iter, eps)
    for i in range(K):
        if not np.isfinite(z[i]):
            return z, iters, False
    return z, iters, True


@njit(cache=True)
def observe_round(A_inv, G, z, sigma, y, x, c_scale, K, d, tol):
    """Loss of ``z`` on ``y`` plus the Woodbury and linear-term updates.

    The linear term grows by ``(sigma - y - 2 F z) kron x`` with ``F`` the
    scaled Hessian factor: the gradient plus the cross term of the
    surrogate's quadratic, which is centred at ``z`` rather than at 0.
    Returns ``(loss, new_A_inv, new_G, ok)``; on failure the inputs are
    returned unchanged.
    """
    m = z.max()
    top = 0
    for k in range(K):
        if z[k] == m:
            top = k
            break
    rest = 0.0
    dot = 0.0
    for k in range(K):
        if k != top:
            rest += np.exp(z[k] - m)
        dot += y[k] * (z[k] - m)
    loss = np.log1p(rest) - dot
    factor = np.empty((K, K))
    for i in range(K):
        for j in range(K):
            factor[i, j] = -c_scale * sigma[i] * sigma[j]
        factor[i, i] += c_scale * sigma[i]
    new_A_inv, ok = woodbury_downdate(A_inv, factor, x, K, d, tol)
    if not ok:
        return loss, A_inv, G, False
    new_G = G.copy()
    for k in range(K):
        gk = sigma[k] - y[k]
        for j in range(K):
            gk -= 2.0 * factor[k, j] * z[j]
        for a in range(d):
            new_G[k * d + a] += gk * x[a]
    return loss, new_A_inv, new_G, True
