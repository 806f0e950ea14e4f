"""Iterative ADMM solver for the L1 self-representation program.

Solves  min_C ||X - Y C||_F^2 + lambda ||C||_1  with the splitting C = Z,
scaled-dual updates, and the diagonal of Z pinned to zero so samples do not
represent themselves. This solver doubles as the correctness oracle for the
unfolded network: one unfolded layer at analytic initialization reproduces
one iteration here exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from unfold_ssc.errors import NumericalError


@dataclass
class ClassicConfig:
    lam: float = 0.1
    rho: float = 1.0
    iterations: int = 200


@dataclass
class AdmmState:
    C: np.ndarray
    Z: np.ndarray
    mu: np.ndarray
    residuals: np.ndarray = field(default_factory=lambda: np.empty(0))


def precompute(Y: np.ndarray, X: np.ndarray | None, rho: float):
    """Factor the C-update system once.

    W = (2 Y^T Y + rho I)^-1 (2 Y^T)  and  B = (2 Y^T Y + rho I)^-1,
    both obtained from a single Cholesky factorization of the SPD system
    matrix. ``X`` is only used to check that its feature dimension matches
    the dictionary.
    """
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim != 2:
        raise ValueError("dictionary must be 2-D")
    if X is not None and np.shape(X)[0] != Y.shape[0]:
        raise ValueError(
            f"feature mismatch: dictionary has {Y.shape[0]} rows, data has {np.shape(X)[0]}"
        )
    if rho <= 0:
        raise ValueError(f"rho must be positive, got {rho}")
    n = Y.shape[1]
    system = 2.0 * (Y.T @ Y) + rho * np.eye(n)
    chol = scipy.linalg.cho_factor(system, lower=True)
    W = scipy.linalg.cho_solve(chol, 2.0 * Y.T)
    B = scipy.linalg.cho_solve(chol, np.eye(n))
    return W, B


def soft_threshold(x, tau: float):
    """Elementwise shrinkage: sign(x) * max(|x| - tau, 0)."""
    if tau < 0:
        raise ValueError(f"threshold must be non-negative, got {tau}")
    x = np.asarray(x, dtype=np.float64)
    return np.where(x > tau, x - tau, np.where(x < -tau, x + tau, 0.0))


def step_C(W: np.ndarray, B: np.ndarray, X: np.ndarray, Z: np.ndarray,
           mu: np.ndarray, rho: float) -> np.ndarray:
    """Exact minimizer of the augmented Lagrangian in C: W X - B (mu - rho Z)."""
    return W @ X - B @ (mu - rho * Z)


def step_Z(C: np.ndarray, mu: np.ndarray, rho: float, lam: float) -> np.ndarray:
    """Shrinkage step with the self-representation diagonal zeroed."""
    Z = soft_threshold(C + mu / rho, lam / rho)
    np.fill_diagonal(Z, 0.0)
    return Z


def step_mu(mu: np.ndarray, C: np.ndarray, Z: np.ndarray, rho: float) -> np.ndarray:
    """Dual ascent on the C = Z constraint."""
    return mu + rho * (C - Z)


def solve(X: np.ndarray, config: ClassicConfig, Y: np.ndarray | None = None) -> AdmmState:
    """Run the full ADMM loop from Z = mu = 0.

    The dictionary defaults to the data itself (self-representation).
    Returns the final state; ``state.residuals`` holds the primal residual
    ||C - Z||_F after every iteration.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = X if Y is None else np.asarray(Y, dtype=np.float64)
    n = Y.shape[1]
    if config.iterations < 1:
        raise ValueError("iterations must be >= 1")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
        raise NumericalError("non-finite input data, refusing to iterate")
    W, B = precompute(Y, X, config.rho)
    Z = np.zeros((n, X.shape[1]))
    mu = np.zeros_like(Z)
    residuals = np.empty(config.iterations)
    C = Z
    for it in range(config.iterations):
        C = step_C(W, B, X, Z, mu, config.rho)
        Z = step_Z(C, mu, config.rho, config.lam)
        mu = step_mu(mu, C, Z, config.rho)
        residuals[it] = np.linalg.norm(C - Z)
        if not np.isfinite(residuals[it]):
            raise NumericalError(f"non-finite iterate at ADMM iteration {it + 1}")
    return AdmmState(C=C, Z=Z, mu=mu, residuals=residuals)
