"""Density-forecast evaluation: average negative log score, weighted CRPS
with five weight profiles, the Diebold-Mariano equal-predictive-ability
test with a HAC variance, and cumulative log-score differentials.
"""

from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import distributions as dists
from .errors import (
    EmptyInput,
    InvalidGrid,
    LengthMismatch,
    NonMonotoneCdf,
    ZeroVarianceDifferential,
)

WEIGHT_PROFILES = ("uniform", "center", "tails", "tail_r", "tail_l")
_CDF_MONOTONE_TOL = 1e-10


@dataclass(frozen=True)
class WeightSpec:
    """Weight profile over the integration grid: uniform, or Gaussian-based
    profiles centered at a with width b emphasizing the center, both tails,
    or one tail."""

    profile: str = "uniform"
    a: float = 0.0
    b: float = 1.0

    def __post_init__(self):
        if self.profile not in WEIGHT_PROFILES:
            raise InvalidGrid(f"unknown weight profile {self.profile!r}")
        if not self.b > 0:
            raise InvalidGrid(f"weight width b must be positive, got {self.b}")

    def weights(self, z):
        z = np.asarray(z, dtype=float)
        if self.profile == "uniform":
            return np.ones_like(z)
        if self.profile == "center":
            return stats.norm.pdf(z, loc=self.a, scale=self.b)
        if self.profile == "tails":
            return 1.0 - stats.norm.pdf(z, loc=self.a, scale=self.b) / stats.norm.pdf(
                self.a, loc=self.a, scale=self.b
            )
        if self.profile == "tail_r":
            return stats.norm.cdf(z, loc=self.a, scale=self.b)
        return 1.0 - stats.norm.cdf(z, loc=self.a, scale=self.b)


@dataclass
class DMResult:
    statistic: float
    p_value: float
    mean_differential: float
    hac_variance: float
    bandwidth: int

    def to_dict(self):
        return {
            "statistic": float(self.statistic),
            "p_value": float(self.p_value),
            "mean_differential": float(self.mean_differential),
            "hac_variance": float(self.hac_variance),
            "bandwidth": int(self.bandwidth),
        }


@dataclass
class DensityBacktestResult:
    average_nls: float
    average_wcrps: dict
    per_time_nls: np.ndarray
    per_time_wcrps: dict
    grid: tuple

    def to_dict(self):
        return {
            "average_nls": float(self.average_nls),
            "average_wcrps": {k: float(v) for k, v in self.average_wcrps.items()},
            "per_time_nls": [float(v) for v in self.per_time_nls],
            "per_time_wcrps": {
                k: [float(v) for v in vals]
                for k, vals in self.per_time_wcrps.items()
            },
            "grid": {
                "lower": float(self.grid[0]),
                "upper": float(self.grid[1]),
                "K": int(self.grid[2]),
            },
        }


def nls(log_scores):
    """Average negative log predictive score; lower is better."""
    log_scores = np.asarray(log_scores, dtype=float)
    if log_scores.size == 0:
        raise EmptyInput("log_scores is empty")
    return -float(np.mean(log_scores))


def wcrps(cdf_fns, y, weight=None, lower=-10.0, upper=10.0, num_cells=1000):
    """Weighted CRPS by midpoint-rule discretization.

    cdf_fns is a sequence of per-time predictive CDF evaluators, y the
    matching realizations. The integrand w(z)(F(z) - 1{y < z})^2 is summed
    over num_cells midpoints z_j = lower + (j - 1/2)(upper - lower)/K.
    Returns (per_time, average).
    """
    weight = weight or WeightSpec()
    if not lower < upper:
        raise InvalidGrid(f"need lower < upper, got [{lower}, {upper}]")
    if num_cells < 2:
        raise InvalidGrid(f"need at least 2 grid cells, got {num_cells}")
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if len(cdf_fns) != y.shape[0]:
        raise LengthMismatch("one cdf evaluator per realization required")
    delta = (upper - lower) / num_cells
    z = lower + (np.arange(1, num_cells + 1) - 0.5) * delta
    w = weight.weights(z)
    per_time = np.empty(y.shape[0])
    for t, (cdf_t, y_t) in enumerate(zip(cdf_fns, y)):
        f = np.asarray(cdf_t(z), dtype=float)
        if np.any(np.diff(f) < -_CDF_MONOTONE_TOL):
            raise NonMonotoneCdf(f"predictive cdf at time {t} is decreasing")
        indicator = (y_t < z).astype(float)
        per_time[t] = delta * np.sum(w * (f - indicator) ** 2)
    return per_time, float(np.mean(per_time))


def dm_test(scores_a, scores_b):
    """Diebold-Mariano test of equal predictive ability on loss series.

    The statistic is the mean loss differential d_t = scores_a - scores_b
    studentized with a Newey-West (Bartlett kernel) HAC variance, bandwidth
    floor(H^(1/3)). Negative values favor the first forecaster.
    """
    scores_a = np.asarray(scores_a, dtype=float)
    scores_b = np.asarray(scores_b, dtype=float)
    if scores_a.shape != scores_b.shape or scores_a.ndim != 1:
        raise LengthMismatch("score series must be 1-D with equal lengths")
    h_len = scores_a.shape[0]
    if h_len < 10:
        raise EmptyInput(f"need at least 10 scores, got {h_len}")
    d = scores_a - scores_b
    d_mean = float(np.mean(d))
    d_c = d - d_mean
    if np.all(d_c == 0.0) and d_mean == 0.0:
        raise ZeroVarianceDifferential("identical score series")
    bandwidth = int(np.floor(h_len ** (1.0 / 3.0)))
    gamma0 = float(d_c @ d_c) / h_len
    hac = gamma0
    for lag in range(1, bandwidth + 1):
        gamma = float(d_c[lag:] @ d_c[:-lag]) / h_len
        hac += 2.0 * (1.0 - lag / (bandwidth + 1.0)) * gamma
    if hac <= 0.0:
        raise ZeroVarianceDifferential("HAC variance is not positive")
    statistic = d_mean / np.sqrt(hac / h_len)
    p_value = 2.0 * (1.0 - stats.norm.cdf(abs(statistic)))
    return DMResult(
        statistic=float(statistic),
        p_value=float(p_value),
        mean_differential=d_mean,
        hac_variance=hac,
        bandwidth=bandwidth,
    )


def cls_series(logscores_a, logscores_b):
    """Cumulative sum of log-score differences; upward slopes mark periods
    where the first forecaster outperforms."""
    logscores_a = np.asarray(logscores_a, dtype=float)
    logscores_b = np.asarray(logscores_b, dtype=float)
    if logscores_a.shape != logscores_b.shape:
        raise LengthMismatch("log-score series must have equal lengths")
    return np.cumsum(logscores_a - logscores_b)


def backtest_density(roll_result, spec, lower, upper, num_cells=1000,
                     weight_a=0.0, weight_b=1.0):
    """Score a rolling backtest: average NLS plus wCRPS under all five
    weight profiles on the [lower, upper] grid."""
    log_scores = np.asarray(roll_result.log_scores, dtype=float)
    if log_scores.size == 0:
        raise EmptyInput("roll result has no predictions")
    predicted = np.asarray(roll_result.predicted_params, dtype=float)
    realized = np.asarray(roll_result.realized, dtype=float)

    cdf_fns = [
        (lambda theta: (lambda z: dists.cdf(spec.dist, theta, z, spec.n)))(theta)
        for theta in predicted
    ]
    per_time_wcrps = {}
    average_wcrps = {}
    for profile in WEIGHT_PROFILES:
        w = WeightSpec(profile=profile, a=weight_a, b=weight_b)
        per_time, avg = wcrps(
            cdf_fns, realized, w, lower=lower, upper=upper, num_cells=num_cells
        )
        per_time_wcrps[profile] = per_time
        average_wcrps[profile] = avg
    return DensityBacktestResult(
        average_nls=nls(log_scores),
        average_wcrps=average_wcrps,
        per_time_nls=-log_scores,
        per_time_wcrps=per_time_wcrps,
        grid=(lower, upper, num_cells),
    )
