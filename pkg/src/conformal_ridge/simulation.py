"""Seeded Monte Carlo experiments for CRR validity and BRR/CRR endpoint agreement.

Each trial draws from its own generator, seeded by the pair (seed, trial
index) through ``numpy.random.SeedSequence``. Reports therefore do not
depend on how trials are spread across workers. Within a trial the draw
order is fixed: weights, then objects, then noise, then the smoothing
variable.
"""

from __future__ import annotations

import enum
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial

import numpy as np

from .asymptotics import TheoremVarianceSpec, normal_cdf, theorem1_variance
from .bayes import brr_predict
from .conformal import (
    _smoothed_from_scores,
    crr_predict,
    full_residuals,
    rank_scores,
    ray_order,
    regularity_check,
)
from .dataset import Dataset
from .errors import SingularSystem, TooFewSamples
from .linalg import RidgeConfig, quadform_identity

MAX_SEED = 2 ** 64


class ObjectLaw(enum.Enum):
    STANDARD_GAUSSIAN = "STANDARD_GAUSSIAN"
    UNIFORM_CUBE = "UNIFORM_CUBE"
    CONSTANT_ONE = "CONSTANT_ONE"
    GAUSSIAN_WITH_MEAN = "GAUSSIAN_WITH_MEAN"


class WeightLaw(enum.Enum):
    FIXED = "FIXED"
    GAUSSIAN_PRIOR = "GAUSSIAN_PRIOR"


@dataclass(frozen=True)
class GenerativeSpec:
    """Data-generating process y_i = w . x_i + xi_i with IID objects.

    Attributes
    ----------
    p : int
        Number of attributes.
    object_law : ObjectLaw
        STANDARD_GAUSSIAN is N(0, I); UNIFORM_CUBE is uniform on [0, 1]^p;
        CONSTANT_ONE is x = 1 (p must be 1); GAUSSIAN_WITH_MEAN is N(mean, I).
    weight_law : WeightLaw
        FIXED uses ``w``; GAUSSIAN_PRIOR draws w ~ N(0, sigma^2/prior_a I) once per trial.
    sigma : float
        Noise standard deviation.
    seed : int
        Master seed in [0, 2^64).
    """

    p: int = 1
    object_law: ObjectLaw = ObjectLaw.STANDARD_GAUSSIAN
    weight_law: WeightLaw = WeightLaw.GAUSSIAN_PRIOR
    sigma: float = 1.0
    seed: int = 0
    mean: tuple | None = None
    w: tuple | None = None
    prior_a: float = 1.0

    def __post_init__(self):
        if self.p < 1:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        if not 0 <= self.seed < MAX_SEED:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.object_law is ObjectLaw.CONSTANT_ONE and self.p != 1:
            # E[xx'] = 11' is singular for p > 1
            raise ValueError("CONSTANT_ONE objects need p = 1")
        if self.object_law is ObjectLaw.GAUSSIAN_WITH_MEAN:
            if self.mean is None or len(self.mean) != self.p:
                raise ValueError("GAUSSIAN_WITH_MEAN needs a mean of length p")
            object.__setattr__(self, "mean", tuple(float(v) for v in self.mean))
        if self.weight_law is WeightLaw.FIXED:
            if self.w is None or len(self.w) != self.p:
                raise ValueError("FIXED weights need w of length p")
            object.__setattr__(self, "w", tuple(float(v) for v in self.w))
        elif not self.prior_a > 0:
            raise ValueError("GAUSSIAN_PRIOR needs prior_a > 0")

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "object_law": self.object_law.value,
            "weight_law": self.weight_law.value,
            "sigma": self.sigma,
            "seed": self.seed,
            "mean": list(self.mean) if self.mean is not None else None,
            "w": list(self.w) if self.w is not None else None,
            "prior_a": self.prior_a,
        }


def trial_rng(seed: int, index: int) -> np.random.Generator:
    """Generator for trial ``index``; identical to the index-th child of SeedSequence(seed).spawn."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def object_moments(spec: GenerativeSpec) -> tuple[np.ndarray, np.ndarray]:
    """Mean mu and covariance C of one object."""
    p = spec.p
    law = spec.object_law
    if law is ObjectLaw.STANDARD_GAUSSIAN:
        return np.zeros(p), np.eye(p)
    if law is ObjectLaw.UNIFORM_CUBE:
        return np.full(p, 0.5), np.eye(p) / 12.0
    if law is ObjectLaw.CONSTANT_ONE:
        return np.ones(1), np.zeros((1, 1))
    return np.asarray(spec.mean), np.eye(p)


def object_quadform(spec: GenerativeSpec) -> float:
    """m = mu' Sigma^-1 mu for the object law, with Sigma = E[xx']."""
    mu, C = object_moments(spec)
    return quadform_identity(mu, C)


def estimate_quadform(spec: GenerativeSpec, draws: int = 10 ** 6, rng=None) -> float:
    """Plug-in estimate of mu' Sigma^-1 mu from ``draws`` sampled objects."""
    rng = trial_rng(spec.seed, 2 ** 32) if rng is None else rng
    X = _draw_objects(spec, draws, rng)
    mu = X.mean(axis=0)
    C = np.atleast_2d(np.cov(X, rowvar=False, bias=True))
    return quadform_identity(mu, C)


def _draw_objects(spec: GenerativeSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    law = spec.object_law
    if law is ObjectLaw.STANDARD_GAUSSIAN:
        return rng.standard_normal((n, spec.p))
    if law is ObjectLaw.UNIFORM_CUBE:
        return rng.random((n, spec.p))
    if law is ObjectLaw.CONSTANT_ONE:
        return np.ones((n, 1))
    return np.asarray(spec.mean) + rng.standard_normal((n, spec.p))


def draw_weights(spec: GenerativeSpec, rng: np.random.Generator) -> np.ndarray:
    if spec.weight_law is WeightLaw.FIXED:
        return np.asarray(spec.w)
    return rng.standard_normal(spec.p) * (spec.sigma / math.sqrt(spec.prior_a))


def generate(spec: GenerativeSpec, n: int, rng: np.random.Generator) -> tuple[Dataset, np.ndarray]:
    """Draw w and then n observations; returns the dataset and the weights used."""
    w = draw_weights(spec, rng)
    X = _draw_objects(spec, n, rng)
    y = X @ w + spec.sigma * rng.standard_normal(n)
    return Dataset(X, y), w


def generate_dataset(spec: GenerativeSpec, n: int, rng=None) -> Dataset:
    """n observations, reproducible from ``spec.seed`` when no generator is given."""
    rng = trial_rng(spec.seed, 0) if rng is None else rng
    return generate(spec, n, rng)[0]


# -- statistics ---------------------------------------------------------------

def summarize(samples) -> tuple[float, float, float, float]:
    """Mean, sample std (ddof=1), adjusted skewness G1 and adjusted excess kurtosis G2.

    Skewness needs 3 samples and kurtosis 4; both are nan for fewer samples
    or zero spread.
    """
    x = np.asarray(samples, dtype=float).reshape(-1)
    n = x.size
    if n < 2:
        raise TooFewSamples(f"need at least 2 samples, got {n}")
    mean = float(x.mean())
    d = x - mean
    std = float(math.sqrt(np.sum(d * d) / (n - 1)))
    m2 = float(np.mean(d ** 2))
    skew = kurt = math.nan
    if m2 > 0:
        g1 = float(np.mean(d ** 3)) / m2 ** 1.5
        g2 = float(np.mean(d ** 4)) / m2 ** 2 - 3.0
        if n >= 3:
            skew = g1 * math.sqrt(n * (n - 1)) / (n - 2)
        if n >= 4:
            kurt = ((n + 1) * g2 + 6.0) * (n - 1) / ((n - 2) * (n - 3))
    return mean, std, skew, kurt


def kolmogorov_sf(lam: float, terms: int = 100) -> float:
    """P(K > lam) for the Kolmogorov distribution, by its alternating series.

    Below lam = 0.2 the truncated series has not converged and the
    probability exceeds 1 - 1e-20, so 1 is returned.
    """
    if lam < 0.2:
        return 1.0
    k = np.arange(1, terms + 1)
    s = 2.0 * np.sum((-1.0) ** (k - 1) * np.exp(-2.0 * k * k * lam * lam))
    return float(min(max(s, 0.0), 1.0))


def ks_statistic(samples, cdf) -> tuple[float, float]:
    """One-sample Kolmogorov-Smirnov distance and its asymptotic p-value.

    The p-value applies Stephens' small-sample correction
    (sqrt(N) + 0.12 + 0.11/sqrt(N)) D before the Kolmogorov series.
    """
    x = np.sort(np.asarray(samples, dtype=float).reshape(-1))
    N = x.size
    if N < 8:
        raise TooFewSamples(f"KS needs at least 8 samples, got {N}")
    F = np.array([cdf(v) for v in x], dtype=float)
    i = np.arange(1, N + 1)
    D = float(max(np.max(i / N - F), np.max(F - (i - 1) / N)))
    rn = math.sqrt(N)
    return D, kolmogorov_sf((rn + 0.12 + 0.11 / rn) * D)


def ks_two_sample(x, y) -> tuple[float, float]:
    """Two-sample KS distance and asymptotic p-value."""
    x = np.sort(np.asarray(x, dtype=float).reshape(-1))
    y = np.sort(np.asarray(y, dtype=float).reshape(-1))
    if x.size < 8 or y.size < 8:
        raise TooFewSamples("KS needs at least 8 samples per group")
    both = np.concatenate([x, y])
    Fx = np.searchsorted(x, both, side="right") / x.size
    Fy = np.searchsorted(y, both, side="right") / y.size
    D = float(np.max(np.abs(Fx - Fy)))
    en = math.sqrt(x.size * y.size / (x.size + y.size))
    return D, kolmogorov_sf((en + 0.12 + 0.11 / en) * D)


def binomial_se(prob: float, trials: int) -> float:
    return math.sqrt(prob * (1.0 - prob) / trials)


# -- reports ------------------------------------------------------------------

def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return v


@dataclass
class ExperimentReport:
    """Outcome of a seeded Monte Carlo run.

    ``summary`` is a pure function of ``per_trial`` and ``config``; it can
    be rebuilt with :func:`summarize_coverage` or :func:`summarize_endpoints`.
    """

    kind: str
    config: dict
    seed: int
    trials: int
    per_trial: dict
    summary: dict
    targets: dict
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self, include_trials: bool = False) -> dict:
        out = {
            "kind": self.kind,
            "config": self.config,
            "seed": self.seed,
            "trials": self.trials,
            "summary": self.summary,
            "targets": self.targets,
            "checks": self.checks,
            "passed": self.passed,
        }
        if include_trials:
            out["per_trial"] = self.per_trial
        return _jsonable(out)

    def to_json(self, include_trials: bool = False) -> str:
        return json.dumps(self.to_dict(include_trials), indent=2, sort_keys=True, allow_nan=False)

    def csv_header(self) -> str:
        return ",".join(["kind", "seed", "trials", *self.summary, "passed"])

    def to_csv_line(self) -> str:
        vals = [self.kind, str(self.seed), str(self.trials)]
        for v in self.summary.values():
            v = _jsonable(v)
            vals.append("" if v is None else repr(v) if isinstance(v, float) else str(v))
        vals.append(str(self.passed).lower())
        return ",".join(vals)


def _run_trials(fn, trials: int, workers: int) -> list:
    if workers <= 1:
        return [fn(i) for i in range(trials)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(trials), chunksize=max(1, trials // (8 * workers))))


# -- coverage -----------------------------------------------------------------

def _coverage_trial(spec, n, a, epsilon, smoothed, index):
    rng = trial_rng(spec.seed, index)
    data, _ = generate(spec, n, rng)
    tau = rng.random() if smoothed else None
    try:
        scores = rank_scores(full_residuals(data, a))
        crr = Fraction(int(np.sum(scores <= scores[-1])), n) > epsilon
        smooth = _smoothed_from_scores(scores, tau) > epsilon if smoothed else False
        brr_int = brr_predict(data.head(n - 1), data.X[-1], RidgeConfig(a, spec.sigma, epsilon))
        brr = brr_int.lower < data.y[-1] < brr_int.upper
    except SingularSystem:
        return (False, False, False, True)
    return (crr, smooth, brr, False)


def summarize_coverage(per_trial: dict, epsilon: float, smoothed: bool, brr_exact: bool):
    ok = ~np.asarray(per_trial["error"], dtype=bool)
    used = int(ok.sum())
    target = 1.0 - epsilon
    se = binomial_se(target, used) if used else math.nan
    summary = {"used_trials": used, "errors": int((~ok).sum())}
    checks = {}
    for key in ("crr", "smoothed", "brr"):
        if key == "smoothed" and not smoothed:
            continue
        cov = float(np.mean(np.asarray(per_trial[key])[ok])) if used else math.nan
        summary[f"{key}_coverage"] = cov
        summary[f"{key}_se"] = binomial_se(cov, used) if used else math.nan
        if key == "crr":
            checks["crr_coverage_at_least_target"] = cov >= target - 3 * se
        elif key == "smoothed":
            checks["smoothed_coverage_matches_target"] = abs(cov - target) <= 3 * se
        elif brr_exact:
            checks["brr_coverage_matches_target"] = abs(cov - target) <= 3 * se
    return summary, {"coverage": target, "binomial_se": se}, checks


def coverage_experiment(spec: GenerativeSpec, n: int, a: float, epsilon: float, trials: int,
                        smoothed: bool = True, workers: int = 1) -> ExperimentReport:
    """Empirical coverage of CRR (conservative and smoothed) and BRR for the n-th label.

    Conformal coverage is membership of the true y_n in the prediction set,
    decided by its p-value; it needs no regularity assumption.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if n < 2:
        raise ValueError("n must be >= 2")
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    rows = _run_trials(partial(_coverage_trial, spec, n, a, epsilon, smoothed), trials, workers)
    cols = np.array(rows, dtype=bool).reshape(trials, 4)
    per_trial = {"crr": cols[:, 0], "smoothed": cols[:, 1], "brr": cols[:, 2], "error": cols[:, 3]}
    brr_exact = spec.weight_law is WeightLaw.GAUSSIAN_PRIOR and spec.prior_a == a
    summary, targets, checks = summarize_coverage(per_trial, epsilon, smoothed, brr_exact)
    config = {"spec": spec.to_dict(), "n": n, "a": a, "epsilon": epsilon,
              "trials": trials, "smoothed": smoothed}
    return ExperimentReport("coverage", config, spec.seed, trials, per_trial, summary, targets, checks)


# -- endpoint differences ---------------------------------------------------------

def _endpoint_trial(spec, n, a, epsilon, sigma, index):
    rng = trial_rng(spec.seed, index)
    data, _ = generate(spec, n, rng)
    train, x_n, y_n = data.head(n - 1), data.X[-1], float(data.y[-1])
    if not regularity_check(train, x_n, a):
        return (math.nan,) * 4 + (False, False, True)
    brr = brr_predict(train, x_n, RidgeConfig(a, sigma, epsilon))
    crr = crr_predict(train, x_n, a, epsilon)
    rn = math.sqrt(n)
    return (rn * (brr.upper - crr.upper), rn * (brr.lower - crr.lower),
            crr.width, brr.width, y_n in crr, y_n in brr, False)


ENDPOINT_KEYS = ("upper_diff", "lower_diff", "crr_width", "brr_width",
                 "crr_covered", "brr_covered", "excluded")


def summarize_endpoints(per_trial: dict, variance: float, std_tolerance: float = 0.10,
                        ks_alpha: float = 1e-3, two_sample_alpha: float = 1e-2):
    keep = ~np.asarray(per_trial["excluded"], dtype=bool)
    used = int(keep.sum())
    target_std = math.sqrt(variance)
    summary = {"used_trials": used, "excluded": int((~keep).sum())}
    checks = {}
    samples = {}
    for side in ("upper", "lower"):
        s = np.asarray(per_trial[f"{side}_diff"], dtype=float)[keep]
        samples[side] = s
        mean, std, skew, kurt = summarize(s)
        D, p = ks_statistic(s, lambda v: normal_cdf(v, target_std))
        summary.update({
            f"{side}_mean": mean, f"{side}_std": std,
            f"{side}_skewness": skew, f"{side}_excess_kurtosis": kurt,
            f"{side}_ks_D": D, f"{side}_ks_p": p,
            f"{side}_std_rel_error": std / target_std - 1.0,
        })
        checks[f"{side}_mean_near_zero"] = abs(mean) <= 3.0 * std / math.sqrt(used)
        checks[f"{side}_std_within_tolerance"] = abs(std / target_std - 1.0) <= std_tolerance
        checks[f"{side}_ks"] = p > ks_alpha
    D2, p2 = ks_two_sample(samples["upper"], samples["lower"])
    summary["upper_vs_lower_ks_D"] = D2
    summary["upper_vs_lower_ks_p"] = p2
    checks["upper_vs_lower_ks"] = p2 > two_sample_alpha
    summary["mean_crr_width"] = float(np.mean(np.asarray(per_trial["crr_width"])[keep]))
    summary["mean_brr_width"] = float(np.mean(np.asarray(per_trial["brr_width"])[keep]))
    summary["crr_coverage"] = float(np.mean(np.asarray(per_trial["crr_covered"])[keep]))
    summary["brr_coverage"] = float(np.mean(np.asarray(per_trial["brr_covered"])[keep]))
    return summary, checks


def endpoint_diff_experiment(spec: GenerativeSpec, n: int, a: float, epsilon: float, trials: int,
                             sigma: float | None = None, quadform: float | None = None,
                             std_tolerance: float = 0.10, workers: int = 1) -> ExperimentReport:
    """Distribution of sqrt(n)(B^* - C^*) and sqrt(n)(B_* - C_*) against the Gaussian limit.

    ``sigma`` is the noise level assumed by BRR (defaults to the true one);
    ``quadform`` overrides the analytic mu' Sigma^-1 mu of the object law.
    Trials whose objects fail the diversity condition are excluded and counted.
    """
    if trials < 8:
        raise ValueError("trials must be >= 8 for the KS comparison")
    sigma = spec.sigma if sigma is None else sigma
    if ray_order(n, epsilon / 2.0) > n - 1:
        raise ValueError(f"n = {n} is too small for epsilon = {epsilon}: CRR is the full line")
    m = object_quadform(spec) if quadform is None else quadform
    variance, std = theorem1_variance(TheoremVarianceSpec(epsilon, sigma, m))
    rows = _run_trials(partial(_endpoint_trial, spec, n, a, epsilon, sigma), trials, workers)
    cols = list(zip(*rows))
    per_trial = {
        k: np.array(c, dtype=bool if k in ("crr_covered", "brr_covered", "excluded") else float)
        for k, c in zip(ENDPOINT_KEYS, cols)
    }
    summary, checks = summarize_endpoints(per_trial, variance, std_tolerance)
    targets = {"variance": variance, "std": std, "quadform": m, "mean": 0.0}
    config = {"spec": spec.to_dict(), "n": n, "a": a, "epsilon": epsilon, "sigma": sigma,
              "trials": trials, "std_tolerance": std_tolerance}
    return ExperimentReport("theorem1", config, spec.seed, trials, per_trial, summary, targets, checks)
