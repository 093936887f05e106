"""Deterministic nu-SVR with an RBF kernel.

Solves the nu-SVR dual (Schölkopf et al. 2000) by two-coordinate ascent:
working pairs are picked by maximal KKT violation inside either the alpha or
the alpha* block, which preserves the two equality constraints
sum(alpha) = sum(alpha*) = C*nu*l/2. The tube width epsilon is implicit and
recovered from the KKT conditions together with the bias. Everything is
plain numpy and fully deterministic for a fixed row order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_TAU = 1e-12


def rbf_kernel(x: np.ndarray, y: np.ndarray, gamma: float) -> np.ndarray:
    """exp(-gamma * ||a - b||^2) for all row pairs of x and y."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    sq = (np.sum(x * x, axis=1)[:, None] + np.sum(y * y, axis=1)[None, :]
          - 2.0 * x @ y.T)
    return np.exp(-gamma * np.maximum(sq, 0.0))


@dataclass
class NuSvrSolution:
    coef: np.ndarray          # signed dual coefficients alpha - alpha*, per row
    bias: float
    epsilon: float            # tube width implied by nu
    iterations: int
    converged: bool


def solve_nu_svr(kernel: np.ndarray, targets: np.ndarray, c: float, nu: float,
                 tol: float = 1e-6, max_iter: int = 1_000_000) -> NuSvrSolution:
    """Minimize 0.5*(a-a*)'K(a-a*) - z'(a-a*) under the nu-SVR constraints."""
    k = np.asarray(kernel, dtype=np.float64)
    z = np.asarray(targets, dtype=np.float64)
    l = len(z)
    if k.shape != (l, l):
        raise ValueError("kernel matrix shape does not match target count")
    if not 0.0 < nu <= 1.0:
        raise ValueError("nu must lie in (0, 1]")
    if c <= 0.0:
        raise ValueError("penalty must be positive")

    alpha = np.zeros(l)
    alpha_star = np.zeros(l)
    budget = c * nu * l / 2.0
    remaining = budget
    for i in range(l):
        take = min(remaining, c)
        alpha[i] = alpha_star[i] = take
        remaining -= take
        if remaining <= 0.0:
            break

    # Gradient wrt alpha of the objective; wrt alpha* it is the negative.
    grad = k @ (alpha - alpha_star) - z

    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        up_a = alpha < c
        low_a = alpha > 0.0
        up_s = alpha_star < c
        low_s = alpha_star > 0.0

        viol_a = viol_s = -np.inf
        if up_a.any() and low_a.any():
            i_a = _argmin_where(grad, up_a)
            j_a = _argmax_where(grad, low_a)
            viol_a = grad[j_a] - grad[i_a]
        if up_s.any() and low_s.any():
            i_s = _argmax_where(grad, up_s)
            j_s = _argmin_where(grad, low_s)
            viol_s = grad[i_s] - grad[j_s]

        if max(viol_a, viol_s) < tol:
            converged = True
            break

        if viol_a >= viol_s:
            i, j = i_a, j_a
            eta = max(k[i, i] + k[j, j] - 2.0 * k[i, j], _TAU)
            step = min((grad[j] - grad[i]) / eta, c - alpha[i], alpha[j])
            alpha[i] += step
            alpha[j] -= step
            grad += step * (k[:, i] - k[:, j])
        else:
            i, j = i_s, j_s
            eta = max(k[i, i] + k[j, j] - 2.0 * k[i, j], _TAU)
            step = min((grad[i] - grad[j]) / eta, c - alpha_star[i], alpha_star[j])
            alpha_star[i] += step
            alpha_star[j] -= step
            grad -= step * (k[:, i] - k[:, j])

    b_plus = _block_multiplier(grad, alpha, c)
    b_minus = _block_multiplier(-grad, alpha_star, c)
    bias = (b_minus - b_plus) / 2.0
    epsilon = -(b_plus + b_minus) / 2.0
    return NuSvrSolution(coef=alpha - alpha_star, bias=bias, epsilon=epsilon,
                         iterations=it, converged=converged)


def _argmin_where(values: np.ndarray, mask: np.ndarray) -> int:
    v = np.where(mask, values, np.inf)
    return int(np.argmin(v))


def _argmax_where(values: np.ndarray, mask: np.ndarray) -> int:
    v = np.where(mask, values, -np.inf)
    return int(np.argmax(v))


def _block_multiplier(grad: np.ndarray, a: np.ndarray, c: float) -> float:
    """KKT multiplier of one block: shared gradient value of its free points."""
    free = (a > 0.0) & (a < c)
    if free.any():
        return float(np.mean(grad[free]))
    lo = grad[a >= c]
    hi = grad[a <= 0.0]
    lower = float(np.max(lo)) if lo.size else -np.inf
    upper = float(np.min(hi)) if hi.size else np.inf
    if np.isinf(lower) and np.isinf(upper):
        return 0.0
    if np.isinf(lower):
        return upper
    if np.isinf(upper):
        return lower
    return (lower + upper) / 2.0
