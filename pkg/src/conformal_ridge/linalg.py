"""Small dense kernels for primal-form ridge regression.

Everything here works with the p x p matrix X'X + aI and never forms an
n x n hat matrix; p is assumed small and fixed while n grows.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve

from .errors import NotSymmetric, SingularSystem

PIVOT_TOL = 1e-12
SYMMETRY_TOL = 1e-12


@dataclass(frozen=True)
class RidgeConfig:
    """Ridge parameter ``a``, noise standard deviation ``sigma`` and significance ``epsilon``.

    ``sigma`` is only used by the Bayesian predictor and the theory calculators.
    """

    a: float = 1.0
    sigma: float = 1.0
    epsilon: float = 0.05

    def __post_init__(self):
        if not (self.a >= 0 and np.isfinite(self.a)):
            raise ValueError(f"ridge parameter a must be >= 0, got {self.a}")
        if not (self.sigma > 0 and np.isfinite(self.sigma)):
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        if not 0 < self.epsilon < 1:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")


@dataclass(frozen=True)
class LeverageProfile:
    """Ridge fit on a training sequence, seen from one test object.

    Attributes
    ----------
    w_hat : ndarray (p,)
        Ridge weights (X'X + aI)^-1 X'Y.
    y_hat_n : float
        Prediction for the test object.
    y_hat : ndarray (n-1,)
        In-sample predictions for the training objects.
    g_n : float
        Leverage x_n' (X'X + aI)^-1 x_n of the test object.
    g : ndarray (n-1,)
        Cross-leverages x_i' (X'X + aI)^-1 x_n; these may be negative.
    """

    w_hat: np.ndarray
    y_hat_n: float
    y_hat: np.ndarray
    g_n: float
    g: np.ndarray


def _as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-d array, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("matrix entries must be finite")
    return X


def _check_symmetric(M: np.ndarray) -> None:
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise NotSymmetric(f"matrix of shape {M.shape} is not square")
    scale = np.max(np.abs(M)) if M.size else 0.0
    if np.max(np.abs(M - M.T), initial=0.0) > SYMMETRY_TOL * scale:
        raise NotSymmetric("matrix is not symmetric within tolerance")


def cholesky(M) -> np.ndarray:
    """Lower Cholesky factor of a symmetric positive definite matrix.

    The input is symmetrized as (M + M')/2 first. A pivot L_kk^2 that is not
    above 1e-12 times the largest absolute diagonal entry counts as a
    failure and raises :class:`SingularSystem`.
    """
    M = np.asarray(M, dtype=float)
    M = 0.5 * (M + M.T)
    try:
        L = np.linalg.cholesky(M)
    except np.linalg.LinAlgError as exc:
        raise SingularSystem("matrix is not positive definite") from exc
    tol = PIVOT_TOL * np.max(np.abs(np.diag(M)), initial=0.0)
    pivots = np.diag(L) ** 2
    if not np.all(pivots > tol):
        raise SingularSystem(
            f"Cholesky pivot {pivots.min():.3g} below tolerance {tol:.3g}"
        )
    return L


def ridge_matrix(X, a: float) -> np.ndarray:
    X = _as_matrix(X)
    return X.T @ X + a * np.eye(X.shape[1])


def ridge_solve(X, Y, a: float) -> np.ndarray:
    """Ridge weights minimizing ||Y - Xw||^2 + a||w||^2."""
    X = _as_matrix(X)
    Y = np.asarray(Y, dtype=float).reshape(-1)
    if X.shape[0] != Y.shape[0]:
        raise ValueError(f"{X.shape[0]} rows but {Y.shape[0]} labels")
    L = cholesky(ridge_matrix(X, a))
    return cho_solve((L, True), X.T @ Y)


def leverage_profile(X, Y, x_n, a: float) -> LeverageProfile:
    """Predictions and (cross-)leverages from a single factorization of X'X + aI."""
    X = _as_matrix(X)
    Y = np.asarray(Y, dtype=float).reshape(-1)
    x_n = np.asarray(x_n, dtype=float).reshape(-1)
    if X.shape[0] != Y.shape[0]:
        raise ValueError(f"{X.shape[0]} rows but {Y.shape[0]} labels")
    if x_n.shape[0] != X.shape[1]:
        raise ValueError(
            f"test object has {x_n.shape[0]} attributes, expected {X.shape[1]}"
        )
    L = cholesky(ridge_matrix(X, a))
    sol = cho_solve((L, True), np.column_stack([X.T @ Y, x_n]))
    w_hat, u = sol[:, 0], sol[:, 1]
    return LeverageProfile(
        w_hat=w_hat,
        y_hat_n=float(x_n @ w_hat),
        y_hat=X @ w_hat,
        # u = M^-1 x_n so x_n'u >= 0 up to rounding
        g_n=max(float(x_n @ u), 0.0),
        g=X @ u,
    )


def is_positive_definite(M) -> bool:
    """True iff the Cholesky factorization of symmetric ``M`` succeeds."""
    M = np.asarray(M, dtype=float)
    _check_symmetric(M)
    try:
        cholesky(M)
    except SingularSystem:
        return False
    return True


def quadform_identity(mu, C) -> float:
    """mu' Sigma^-1 mu for Sigma = C + mu mu', via the Sherman-Morrison form.

    Returns q / (1 + q) with q = mu' C^-1 mu. When C is singular the value is
    the limit of the same expression for C + delta*I as delta -> 0: it is 1 if
    mu has a component in the null space of C, and otherwise q is taken over
    the range of C.
    """
    mu = np.asarray(mu, dtype=float).reshape(-1)
    C = np.asarray(C, dtype=float)
    if C.shape != (mu.shape[0], mu.shape[0]):
        raise ValueError(f"C has shape {C.shape}, expected {(mu.size, mu.size)}")
    if not np.any(mu):
        return 0.0
    try:
        L = cholesky(C)
    except SingularSystem:
        return _quadform_limit(mu, C)
    q = float(mu @ cho_solve((L, True), mu))
    return min(max(q / (1.0 + q), 0.0), 1.0)


def _quadform_limit(mu: np.ndarray, C: np.ndarray) -> float:
    lam, V = np.linalg.eigh(0.5 * (C + C.T))
    coef = V.T @ mu
    tol = PIVOT_TOL * max(np.max(np.abs(lam)), 1.0)
    null = lam <= tol
    if np.sum(coef[null] ** 2) > PIVOT_TOL * float(mu @ mu):
        return 1.0
    q = float(np.sum(coef[~null] ** 2 / lam[~null]))
    return min(max(q / (1.0 + q), 0.0), 1.0)
