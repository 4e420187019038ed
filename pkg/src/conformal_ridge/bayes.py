"""Bayesian ridge regression (BRR) predictive distribution and intervals.

The model has no intercept. To fit one, append a constant attribute to
every object; note that its coefficient is then shrunk like the others.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .asymptotics import normal_quantile
from .dataset import Dataset
from .linalg import RidgeConfig, leverage_profile


class Method(enum.Enum):
    BRR = "BRR"
    CRR = "CRR"
    UPPER_CRR = "UPPER_CRR"
    LOWER_CRR = "LOWER_CRR"


@dataclass(frozen=True)
class PredictionInterval:
    """Closed interval [lower, upper]; endpoints may be infinite.

    ``fallback`` marks CRR intervals that were read off the grid predictor
    because the analytic route did not apply.
    """

    lower: float
    upper: float
    epsilon: float
    method: Method
    fallback: bool = field(default=False, compare=False)

    def __post_init__(self):
        if not self.lower <= self.upper:
            raise ValueError(f"lower {self.lower} exceeds upper {self.upper}")
        if not 0 < self.epsilon < 1:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def center(self) -> float:
        return 0.5 * (self.lower + self.upper)

    def __contains__(self, y: float) -> bool:
        return self.lower <= y <= self.upper


def brr_conditional_density_params(train: Dataset, x_n, cfg: RidgeConfig) -> tuple[float, float]:
    """Mean y_hat_n and variance (1 + g_n) sigma^2 of the predictive normal law."""
    prof = leverage_profile(train.X, train.y, x_n, cfg.a)
    return prof.y_hat_n, (1.0 + prof.g_n) * cfg.sigma ** 2


def brr_predict(train: Dataset, x_n, cfg: RidgeConfig) -> PredictionInterval:
    """Central (1 - epsilon) interval y_hat_n -/+ sqrt(1 + g_n) sigma z_{epsilon/2}."""
    mean, var = brr_conditional_density_params(train, x_n, cfg)
    half = math.sqrt(var) * normal_quantile(cfg.epsilon / 2.0)
    return PredictionInterval(mean - half, mean + half, cfg.epsilon, Method.BRR)
