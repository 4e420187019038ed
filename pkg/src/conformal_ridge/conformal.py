"""Conformalized ridge regression (CRR).

Two routes to the same prediction set are provided:

* the grid predictor evaluates the conformal p-value at each candidate
  label by refitting ridge regression on the augmented sequence; it is
  slow, assumption-free, and serves as the oracle;
* the ray predictors use the closed form of the thresholds t_i at which
  the test residual overtakes training residual i, and read the interval
  ends off order statistics of t_1, ..., t_{n-1}.

The ray route requires b_n > b_i for every training index (implied by the
diversity condition of :func:`regularity_check`); when it fails
:func:`crr_predict` can fall back to the grid.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.linalg import cho_solve

from .bayes import Method, PredictionInterval
from .dataset import Dataset
from .errors import EmptyIntersection, IrregularConfiguration
from .linalg import cholesky, is_positive_definite, leverage_profile, ridge_matrix


class RayDirection(enum.Enum):
    LOWER_RAY = "LOWER_RAY"  # (-inf, t]
    UPPER_RAY = "UPPER_RAY"  # [t, +inf)
    FULL_LINE = "FULL_LINE"


@dataclass(frozen=True)
class RayPredictionSet:
    direction: RayDirection
    endpoint: float | None = None

    def __post_init__(self):
        if self.direction is RayDirection.FULL_LINE:
            if self.endpoint is not None:
                raise ValueError("the full line has no endpoint")
        elif self.endpoint is None or not math.isfinite(self.endpoint):
            raise ValueError("a ray needs a finite endpoint")

    @property
    def lower(self) -> float:
        if self.direction is RayDirection.UPPER_RAY:
            return self.endpoint
        return -math.inf

    @property
    def upper(self) -> float:
        if self.direction is RayDirection.LOWER_RAY:
            return self.endpoint
        return math.inf

    def __contains__(self, y: float) -> bool:
        return self.lower <= y <= self.upper


@dataclass(frozen=True)
class GridPredictionSet:
    """Pointwise membership of candidate labels in the conformal prediction set."""

    grid: np.ndarray
    member: np.ndarray
    pvalues: np.ndarray

    @property
    def intervals(self) -> list[tuple[float, float]]:
        """Maximal runs of consecutive members, as (first, last) grid values."""
        runs = []
        start = None
        for j, m in enumerate(self.member):
            if m and start is None:
                start = j
            elif not m and start is not None:
                runs.append((float(self.grid[start]), float(self.grid[j - 1])))
                start = None
        if start is not None:
            runs.append((float(self.grid[start]), float(self.grid[-1])))
        return runs

    @property
    def hull(self) -> tuple[float, float] | None:
        idx = np.flatnonzero(self.member)
        if idx.size == 0:
            return None
        return float(self.grid[idx[0]]), float(self.grid[idx[-1]])


@dataclass(frozen=True)
class OnlineStep:
    n: int
    interval: PredictionInterval | None
    covered: bool | None
    error: str | None = None


# -- conformity scores and p-values -------------------------------------------

def rank_scores(residuals) -> np.ndarray:
    """alpha_i = #{j: r_j >= r_i} min #{j: r_j <= r_i}."""
    r = np.asarray(residuals, dtype=float).reshape(-1)
    s = np.sort(r)
    n_le = np.searchsorted(s, r, side="right")
    n_ge = r.size - np.searchsorted(s, r, side="left")
    return np.minimum(n_le, n_ge)


def full_residuals(seq: Dataset, a: float) -> np.ndarray:
    """Residuals y_i - y_hat_i of the ridge fit on the whole sequence."""
    L = cholesky(ridge_matrix(seq.X, a))
    w = cho_solve((L, True), seq.X.T @ seq.y)
    return seq.y - seq.X @ w


def conformity_scores(seq: Dataset, a: float) -> np.ndarray:
    return rank_scores(full_residuals(seq, a))


def _augmented_scores(train: Dataset, x_n, y: float, a: float) -> np.ndarray:
    return conformity_scores(train.append(x_n, y), a)


def crr_pvalue(train: Dataset, x_n, y: float, a: float) -> Fraction:
    """Conformal p-value of the postulated label ``y`` for ``x_n``; a multiple of 1/n."""
    scores = _augmented_scores(train, x_n, y, a)
    return Fraction(int(np.sum(scores <= scores[-1])), scores.size)


def smoothed_pvalue(train: Dataset, x_n, y: float, a: float, tau: float) -> float:
    """Randomized p-value (#{alpha_i < alpha_n} + tau #{alpha_i = alpha_n}) / n."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau}")
    scores = _augmented_scores(train, x_n, y, a)
    return _smoothed_from_scores(scores, tau)


def _smoothed_from_scores(scores: np.ndarray, tau: float) -> float:
    below = int(np.sum(scores < scores[-1]))
    ties = int(np.sum(scores == scores[-1]))
    return (below + tau * ties) / scores.size


def crr_predict_grid(train: Dataset, x_n, a: float, epsilon: float, grid) -> GridPredictionSet:
    """Membership p^y > epsilon for every y on a strictly increasing grid.

    The full-sequence matrix X_n'X_n + aI does not depend on y, so it is
    factorized once and the refits for all grid labels share it.
    """
    grid = np.asarray(grid, dtype=float).reshape(-1)
    if grid.size == 0:
        raise ValueError("grid must be nonempty")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    x_n = np.asarray(x_n, dtype=float).reshape(-1)
    Xn = np.vstack([train.X, x_n])
    n = Xn.shape[0]
    L = cholesky(ridge_matrix(Xn, a))
    Y = np.empty((n, grid.size))
    Y[:-1] = train.y[:, None]
    Y[-1] = grid
    R = Y - Xn @ cho_solve((L, True), Xn.T @ Y)
    pvalues = np.empty(grid.size)
    member = np.empty(grid.size, dtype=bool)
    for j in range(grid.size):
        scores = rank_scores(R[:, j])
        count = int(np.sum(scores <= scores[-1]))
        pvalues[j] = count / n
        member[j] = Fraction(count, n) > epsilon
    return GridPredictionSet(grid, member, pvalues)


# -- the A, B decomposition (oracle only) ---------------------------------------

def hat_matrix_AB(train: Dataset, x_n, a: float) -> tuple[np.ndarray, np.ndarray]:
    """A = (I - H)(y_1..y_{n-1}, 0)' and B = (I - H)(0..0, 1)' from the explicit n x n hat matrix.

    O(n^2 p); for testing the closed forms only.
    """
    x_n = np.asarray(x_n, dtype=float).reshape(-1)
    Xn = np.vstack([train.X, x_n])
    n = Xn.shape[0]
    L = cholesky(ridge_matrix(Xn, a))
    H = Xn @ cho_solve((L, True), Xn.T)
    M = np.eye(n) - H
    return M @ np.append(train.y, 0.0), M[:, -1].copy()


def ab_closed_form(train: Dataset, x_n, a: float) -> tuple[np.ndarray, np.ndarray]:
    """A and B from leverages on the training fit, without the hat matrix."""
    prof = leverage_profile(train.X, train.y, x_n, a)
    d = 1.0 + prof.g_n
    A = np.append(train.y - prof.y_hat + prof.g * prof.y_hat_n / d, -prof.y_hat_n / d)
    B = np.append(-prof.g / d, 1.0 - prof.g_n / d)
    return A, B


def thresholds_from_AB(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """t_i = (a_i - a_n) / (b_n - b_i), i < n."""
    return (A[:-1] - A[-1]) / (B[-1] - B[:-1])


# -- analytic ray predictors ----------------------------------------------------

def regularity_matrix(train: Dataset, x_n, a: float) -> np.ndarray:
    x_n = np.asarray(x_n, dtype=float).reshape(-1)
    return ridge_matrix(train.X, a) - np.outer(x_n, x_n)


def regularity_check(train: Dataset, x_n, a: float) -> bool:
    """Diversity condition: sum_{i<n} x_i x_i' - x_n x_n' + aI is positive definite.

    It guarantees b_n > b_i for every training index i, so every S_i is a
    ray pointing left.
    """
    return is_positive_definite(regularity_matrix(train, x_n, a))


def adjusted_residuals(train: Dataset, x_n, a: float):
    """Training-fit profile and V_i = r_i / (1 + g_i)."""
    prof = leverage_profile(train.X, train.y, x_n, a)
    return prof, (train.y - prof.y_hat) / (1.0 + prof.g)


def crr_thresholds(train: Dataset, x_n, a: float) -> np.ndarray:
    """t_i = y_hat_n + (y_i - y_hat_i)(1 + g_n)/(1 + g_i) for every training index."""
    prof, V = adjusted_residuals(train, x_n, a)
    return prof.y_hat_n + (1.0 + prof.g_n) * V


def ray_order(n: int, epsilon_half: float) -> int:
    """Order k of the upper-CRR endpoint t_(k) among n - 1 thresholds.

    Equals ceil((1 - epsilon_half) n) in exact arithmetic. It is computed as
    n - c with c the least count for which (c + 1)/n > epsilon_half, using
    the same exact comparison as the p-value so both routes agree at
    boundaries. k = n means the ray is the full line.
    """
    if not 0.0 < epsilon_half < 1.0:
        raise ValueError(f"significance must lie in (0, 1), got {epsilon_half}")
    c = max(0, math.floor(n * epsilon_half) - 2)
    while not Fraction(c + 1, n) > epsilon_half:
        c += 1
    return n - c


def upper_crr_predict(train: Dataset, x_n, a: float, epsilon_half: float) -> RayPredictionSet:
    """Upper CRR at significance ``epsilon_half``: the ray (-inf, t_(k)].

    The closed form needs b_n > b_i for all i < n, which is equivalent to
    1 + g_i > 0. :func:`regularity_check` is a sufficient condition for it;
    the weaker exact condition is what is checked here.
    """
    n = len(train) + 1
    k = ray_order(n, epsilon_half)
    if k > n - 1:
        # p^y >= 1/n > epsilon_half for every y, whatever the objects
        return RayPredictionSet(RayDirection.FULL_LINE)
    prof, V = adjusted_residuals(train, x_n, a)
    if not np.all(1.0 + prof.g > 0.0):
        raise IrregularConfiguration(
            "b_n > b_i fails for some training index; the sets S_i are not all left rays"
        )
    v_k = np.partition(V, k - 1)[k - 1]
    return RayPredictionSet(
        RayDirection.LOWER_RAY, float(prof.y_hat_n + (1.0 + prof.g_n) * v_k)
    )


def lower_crr_predict(train: Dataset, x_n, a: float, epsilon_half: float) -> RayPredictionSet:
    """Lower CRR, the mirror of upper CRR under y -> -y: a ray [t, +inf)."""
    ray = upper_crr_predict(train.negated(), x_n, a, epsilon_half)
    if ray.direction is RayDirection.FULL_LINE:
        return ray
    # + 0.0 turns -0.0 into 0.0
    return RayPredictionSet(RayDirection.UPPER_RAY, -ray.endpoint + 0.0)


def crr_predict(train: Dataset, x_n, a: float, epsilon: float, grid=None) -> PredictionInterval:
    """CRR interval: upper and lower CRR at epsilon/2, intersected.

    Under an irregular configuration this raises
    :class:`IrregularConfiguration`, unless ``grid`` is given, in which case
    the convex hull of the grid members is returned with ``fallback=True``
    (truncated to the grid range).
    """
    try:
        upper = upper_crr_predict(train, x_n, a, epsilon / 2.0)
        lower = lower_crr_predict(train, x_n, a, epsilon / 2.0)
    except IrregularConfiguration:
        if grid is None:
            raise
        gset = crr_predict_grid(train, x_n, a, epsilon, grid)
        hull = gset.hull
        if hull is None:
            raise EmptyIntersection("no grid label is in the prediction set")
        return PredictionInterval(hull[0], hull[1], epsilon, Method.CRR, fallback=True)
    if lower.lower > upper.upper:
        raise EmptyIntersection(
            f"lower ray starts at {lower.lower} above upper ray end {upper.upper}",
            lower_ray=lower,
            upper_ray=upper,
        )
    return PredictionInterval(lower.lower, upper.upper, epsilon, Method.CRR)


def online_protocol(stream: Dataset, a: float, epsilon: float, grid=None) -> list[OnlineStep]:
    """Predict each y_n from the first n - 1 observations, then reveal it.

    Errors at a step are recorded on that step and do not stop the stream.
    """
    if len(stream) < 2:
        raise ValueError("the stream needs at least two observations")
    steps = []
    for n in range(2, len(stream) + 1):
        train = stream.head(n - 1)
        x_n, y_n = stream.X[n - 1], float(stream.y[n - 1])
        try:
            interval = crr_predict(train, x_n, a, epsilon, grid=grid)
        except (IrregularConfiguration, EmptyIntersection, ValueError) as exc:
            steps.append(OnlineStep(n, None, None, f"{type(exc).__name__}: {exc}"))
            continue
        steps.append(OnlineStep(n, interval, y_n in interval))
    return steps
