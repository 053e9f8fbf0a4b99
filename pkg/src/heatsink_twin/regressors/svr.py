"""Epsilon-insensitive support vector regression, solved in the dual.

With beta_i = alpha_i - alpha_i^* the dual is

    min  1/2 beta^T K beta - y^T beta + eps * sum |beta_i|
    s.t. sum beta_i = 0,  -C <= beta_i <= C

and is solved by pairwise updates (beta_i += t, beta_j -= t) on the
maximal KKT-violating pair, each subproblem minimized exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from ..errors import InvalidInputError, TrainingFailure


@dataclass(frozen=True, eq=False)
class SvrModel:
    support_vectors: np.ndarray
    dual_coef: np.ndarray  # beta for each support vector
    bias: float
    gamma: float
    C: float = 1.0
    epsilon: float = 0.1
    iterations: int = 0
    violation: float = 0.0


def rbf_kernel(A, B, gamma):
    A = np.atleast_2d(A)
    B = np.atleast_2d(B)
    sq = np.sum((A[:, None, :] - B[None, :, :]) ** 2, axis=2)
    return np.exp(-gamma * sq)


def dual_objective(beta, K, y, epsilon):
    return 0.5 * beta @ K @ beta - y @ beta + epsilon * np.sum(np.abs(beta))


def _pair_step(bi, bj, eta, g, eps, C):
    """argmin over t of 1/2 eta t^2 + g t + eps (|bi + t| + |bj - t|) on the box."""
    lo = max(-C - bi, bj - C)
    hi = min(C - bi, bj + C)
    points = sorted({lo, hi, *(p for p in (-bi, bj) if lo < p < hi)})

    def phi(t):
        return 0.5 * eta * t * t + g * t + eps * (abs(bi + t) + abs(bj - t))

    candidates = list(points)
    if eta > 1e-12:
        for a, b in zip(points[:-1], points[1:]):
            mid = 0.5 * (a + b)
            si = 1.0 if bi + mid > 0 else -1.0
            sj = 1.0 if bj - mid > 0 else -1.0
            t = -(g + eps * (si - sj)) / eta
            candidates.append(min(max(t, a), b))
    return min(candidates, key=lambda t: (phi(t), abs(t)))


def _violating_pair(beta, F, eps, C):
    # up_i: rate of decrease when raising beta_i; dn_j: when lowering beta_j
    up = np.where(beta >= 0, F - eps, F + eps)
    dn = np.where(beta <= 0, F + eps, F - eps)
    up = np.where(beta < C, up, -np.inf)
    dn = np.where(beta > -C, dn, np.inf)
    i = int(np.argmax(up))
    j = int(np.argmin(dn))
    return i, j, up[i] - dn[j], up, dn


@numba.njit(cache=True)
def _phi(t, bi, bj, eta, g, eps):
    return 0.5 * eta * t * t + g * t + eps * (abs(bi + t) + abs(bj - t))


@numba.njit(cache=True)
def _pair_step_jit(bi, bj, eta, g, eps, C):
    # compiled twin of _pair_step
    lo = max(-C - bi, bj - C)
    hi = min(C - bi, bj + C)
    pts = np.empty(4)
    pts[0] = lo
    n = 1
    a, b = -bi, bj
    if a > b:
        a, b = b, a
    for p in (a, b):
        if lo < p < hi and p != pts[n - 1]:
            pts[n] = p
            n += 1
    if hi != pts[n - 1]:
        pts[n] = hi
        n += 1
    best = pts[0]
    best_phi = _phi(best, bi, bj, eta, g, eps)
    for c in range(2 * n - 1):
        if c < n:
            t = pts[c]
        else:
            if eta <= 1e-12:
                break
            lo_k, hi_k = pts[c - n], pts[c - n + 1]
            mid = 0.5 * (lo_k + hi_k)
            si = 1.0 if bi + mid > 0 else -1.0
            sj = 1.0 if bj - mid > 0 else -1.0
            t = min(max(-(g + eps * (si - sj)) / eta, lo_k), hi_k)
        f = _phi(t, bi, bj, eta, g, eps)
        if f < best_phi or (f == best_phi and abs(t) < abs(best)):
            best, best_phi = t, f
    return best


@numba.njit(cache=True)
def _smo_loop(K, beta, F, eps, C, tol, max_iter):
    n = len(beta)
    it = 0
    violation = np.inf
    while it < max_iter:
        i, j = 0, 0
        up_best, dn_best = -np.inf, np.inf
        for p in range(n):
            if beta[p] < C:
                u = F[p] - eps if beta[p] >= 0 else F[p] + eps
                if u > up_best:
                    up_best, i = u, p
            if beta[p] > -C:
                d = F[p] + eps if beta[p] <= 0 else F[p] - eps
                if d < dn_best:
                    dn_best, j = d, p
        violation = up_best - dn_best
        if violation <= tol:
            break
        eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
        t = _pair_step_jit(beta[i], beta[j], eta, F[j] - F[i], eps, C)
        if t == 0.0:
            break
        beta[i] += t
        beta[j] -= t
        for p in range(n):
            F[p] -= t * (K[i, p] - K[j, p])  # K symmetric; rows are contiguous
        it += 1
    return it, violation


def train_svr(X, y, C: float = 1.0, epsilon: float = 0.1, gamma: float | None = None,
              tol: float = 1e-3, max_iter: int = 100_000) -> SvrModel:
    """Fit an RBF epsilon-SVR; ``gamma`` defaults to 1 / n_features.

    Stops when the maximal KKT violation drops to ``tol``.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    if y.ndim == 2:
        if y.shape[1] != 1:
            raise InvalidInputError("train_svr fits a single target column")
        y = y[:, 0]
    if len(y) != len(X) or len(y) == 0:
        raise InvalidInputError("X and y must have the same, non-zero length")
    if gamma is None:
        gamma = 1.0 / X.shape[1]
    if gamma <= 0 or C <= 0 or epsilon < 0:
        raise InvalidInputError("need gamma > 0, C > 0, epsilon >= 0")

    n = len(y)
    K = rbf_kernel(X, X, gamma)
    beta = np.zeros(n)
    F = y.copy()  # y - K beta
    it, violation = _smo_loop(K, beta, F, float(epsilon), float(C), float(tol), int(max_iter))
    if it >= max_iter and violation > tol:
        raise TrainingFailure(f"SVR did not converge in {max_iter} iterations "
                              f"(KKT violation {violation:.3e})", violation=violation)
    if violation > tol:  # loop stopped on a zero step
        raise TrainingFailure(f"SVR stalled with KKT violation {violation:.3e}",
                              violation=violation)
    beta = np.clip(beta, -C, C)

    free_pos = (beta > 0) & (beta < C)
    free_neg = (beta < 0) & (beta > -C)
    if free_pos.any() or free_neg.any():
        bias = float(np.mean(np.concatenate([F[free_pos] - epsilon, F[free_neg] + epsilon])))
    else:
        _, _, _, up, dn = _violating_pair(beta, F, epsilon, C)
        finite_up = up[np.isfinite(up)]
        finite_dn = dn[np.isfinite(dn)]
        bias = 0.5 * (finite_up.max() + finite_dn.min())
    sv = np.flatnonzero(beta != 0.0)
    return SvrModel(X[sv].copy(), beta[sv].copy(), bias, float(gamma), C, epsilon, it,
                    float(violation))


def predict_svr(model: SvrModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if len(model.dual_coef) == 0:
        return np.full(len(X), model.bias)
    return rbf_kernel(X, model.support_vectors, model.gamma) @ model.dual_coef + model.bias
