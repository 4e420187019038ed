"""Limiting variance of the BRR/CRR endpoint differences, and normal special functions.

The normal quantile is the single implementation used by every other
module (Bayesian half-widths, theoretical targets, curve tables).
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

SQRT2 = math.sqrt(2.0)
SQRT2PI = math.sqrt(2.0 * math.pi)

# Acklam's rational approximation to the lower-tail normal quantile
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425

VARIANCE_CLAMP = 1e-9


def _check_sigma(sigma: float) -> None:
    if not sigma > 0:
        raise DomainError(f"sigma must be > 0, got {sigma}")


def normal_pdf(x: float, sigma: float = 1.0) -> float:
    _check_sigma(sigma)
    u = x / sigma
    return math.exp(-0.5 * u * u) / (SQRT2PI * sigma)


def normal_cdf(x: float, sigma: float = 1.0) -> float:
    _check_sigma(sigma)
    return 0.5 * math.erfc(-x / (sigma * SQRT2))


def normal_sf(x: float, sigma: float = 1.0) -> float:
    """Upper tail 1 - F(x), computed without cancellation."""
    _check_sigma(sigma)
    return 0.5 * math.erfc(x / (sigma * SQRT2))


def _acklam_lower(p: float) -> float:
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        return ((((( _C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5]) / \
            ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0)
    if p <= 1.0 - _P_LOW:
        q = p - 0.5
        r = q * q
        return ((((( _A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q / \
            ((((( _B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)
    return -_acklam_lower(1.0 - p)


def normal_quantile(delta: float) -> float:
    """Upper-tail standard normal quantile z_delta, i.e. Phi^-1(1 - delta).

    Acklam's rational approximation followed by one Newton step on the
    tail probability.
    """
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    if delta > 0.5:
        return -normal_quantile(1.0 - delta)
    if delta == 0.5:
        return 0.0
    # z >= 0 here; solve sf(z) = delta where the upper tail is accurate
    z = -_acklam_lower(delta)
    return z + (normal_sf(z) - delta) / normal_pdf(z)


@dataclass(frozen=True)
class TheoremVarianceSpec:
    """Inputs of the limiting variance: significance, noise level and m = mu' Sigma^-1 mu."""

    epsilon: float
    sigma: float = 1.0
    quadform: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise DomainError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        _check_sigma(self.sigma)
        if not 0.0 <= self.quadform <= 1.0:
            raise DomainError(f"quadform must lie in [0, 1], got {self.quadform}")

    @property
    def alpha(self) -> float:
        return 1.0 - self.epsilon / 2.0

    @property
    def zeta(self) -> float:
        """alpha-quantile of N(0, sigma^2)."""
        return normal_quantile(self.epsilon / 2.0) * self.sigma


def _clamp(variance: float) -> float:
    if variance >= 0.0:
        return variance
    if variance > -VARIANCE_CLAMP:
        warnings.warn(f"clamping variance {variance:.3g} to 0", RuntimeWarning)
        return 0.0
    raise DomainError(f"negative limiting variance {variance:.6g}")


def theorem1_variance(spec: TheoremVarianceSpec) -> tuple[float, float]:
    """Limiting variance and std of sqrt(n)(B^* - C^*), density form.

    variance = alpha(1 - alpha) / f(zeta_alpha)^2 - sigma^2 m
    """
    a = spec.alpha
    f = normal_pdf(spec.zeta, spec.sigma)
    variance = _clamp(a * (1.0 - a) / (f * f) - spec.sigma ** 2 * spec.quadform)
    return variance, math.sqrt(variance)


def theorem1_variance_exp_form(spec: TheoremVarianceSpec) -> float:
    """Same variance written as sigma^2 (eps (1 - eps/2) pi exp(z^2) - m)."""
    eps = spec.epsilon
    z = normal_quantile(eps / 2.0)
    return spec.sigma ** 2 * (eps * (1.0 - eps / 2.0) * math.pi * math.exp(z * z) - spec.quadform)


def std_asymptote(epsilon: float) -> float:
    """Small-epsilon equivalent (-eps ln eps)^(-1/2) of the limiting std (sigma = 1)."""
    if not 0.0 < epsilon < 1.0:
        raise DomainError(f"epsilon must lie in (0, 1), got {epsilon}")
    return (-epsilon * math.log(epsilon)) ** -0.5


def mu_alpha(zeta: float, sigma: float = 1.0) -> float:
    """Truncated first moment E[xi; xi <= zeta] = -sigma^2 f(zeta) for xi ~ N(0, sigma^2)."""
    _check_sigma(sigma)
    if math.isinf(zeta):
        return 0.0 if zeta > 0 else -0.0
    return -sigma * sigma * normal_pdf(zeta, sigma)


@dataclass(frozen=True)
class CurveTable:
    epsilon: np.ndarray
    std_upper: np.ndarray
    std_lower: np.ndarray
    asymptote: np.ndarray

    HEADER = ("epsilon", "std_upper", "std_lower", "asymptote")

    def rows(self):
        return zip(self.epsilon, self.std_upper, self.std_lower, self.asymptote)

    def __len__(self) -> int:
        return len(self.epsilon)

    def to_csv(self, fh=None) -> str:
        """Write the table with 6 significant digits; returns the text too."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.HEADER)
        for row in self.rows():
            writer.writerow([f"{v:.6g}" for v in row])
        text = buf.getvalue()
        if fh is not None:
            fh.write(text)
        return text


def curve_table(eps_grid) -> CurveTable:
    """Limiting std for m = 0 (upper curve) and m = 1 (lower curve), sigma = 1."""
    eps = np.asarray(eps_grid, dtype=float).reshape(-1)
    if eps.size == 0:
        raise DomainError("empty epsilon grid")
    if np.any(eps <= 0) or np.any(eps >= 1):
        raise DomainError("epsilon grid must lie inside (0, 1)")
    if np.any(np.diff(eps) <= 0):
        raise DomainError("epsilon grid must be strictly increasing")
    upper = np.array([theorem1_variance(TheoremVarianceSpec(e, 1.0, 0.0))[1] for e in eps])
    lower = np.array([theorem1_variance(TheoremVarianceSpec(e, 1.0, 1.0))[1] for e in eps])
    asym = np.array([std_asymptote(e) for e in eps])
    return CurveTable(eps, upper, lower, asym)


def left_panel_grid() -> np.ndarray:
    """99 points 0.01, 0.02, ..., 0.99."""
    return np.round(np.arange(1, 100) / 100.0, 12)


def right_panel_grid(steps: int = 100) -> np.ndarray:
    """``steps`` equally spaced points in (0, 0.05], ending at 0.05."""
    return 0.05 * np.arange(1, steps + 1) / steps
