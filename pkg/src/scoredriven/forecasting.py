"""Density forecasting and the rolling re-estimation backtest engine.

The one-step-ahead forecast is the deterministic filter update from the
terminal state; longer horizons are estimated by simulating independent
continuations of the process and averaging the natural parameter paths.
"""

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import distributions as dists
from . import links as lk
from .core import Coefficients, GasSpec, gas_filter, scaled_score
from .errors import (
    DrawsUnavailable,
    InvalidHorizon,
    NonFiniteState,
    ScoreDrivenError,
    ShapeMismatch,
)
from .estimation import FitResult, OptimizerConfig, fit

DEFAULT_NUM_DRAWS = 10_000
MAX_DROPPED_FRACTION = 0.01


@dataclass
class ForecastResult:
    horizon: int
    param_forecasts: np.ndarray
    moment_forecasts: dict
    draws: Optional[np.ndarray]
    num_draws: int
    spec: GasSpec
    start_tilde: np.ndarray
    dropped_draws: int = 0

    def to_dict(self):
        out = {
            "horizon": int(self.horizon),
            "num_draws": int(self.num_draws),
            "dropped_draws": int(self.dropped_draws),
            "param_forecasts": np.asarray(self.param_forecasts).tolist(),
            "moment_forecasts": {
                key: np.asarray(vals).tolist()
                for key, vals in self.moment_forecasts.items()
            },
        }
        if self.draws is not None:
            out["draws"] = np.asarray(self.draws).tolist()
        return out


@dataclass
class RollResult:
    predicted_params: np.ndarray
    realized: np.ndarray
    log_scores: np.ndarray
    refit_indices: list
    fits: list
    warnings: list

    def to_dict(self):
        return {
            "forecast_length": int(len(self.log_scores)),
            "predicted_params": [
                [float(v) for v in row] for row in self.predicted_params
            ],
            "realized": np.asarray(self.realized).tolist(),
            "log_scores": [float(v) for v in self.log_scores],
            "refit_indices": [int(i) for i in self.refit_indices],
            "fits": [f.to_dict() for f in self.fits],
            "warnings": list(self.warnings),
        }


def _moments_along(spec, theta_path):
    """Analytic per-horizon mean and variance (variance per coordinate for
    multivariate families, i.e. the covariance diagonal)."""
    means, variances = [], []
    for theta in theta_path:
        mean, var = dists.moments(spec.dist, theta, spec.n)
        if spec.n > 1:
            var = np.diag(var)
        means.append(mean)
        variances.append(var)
    return np.asarray(means, dtype=float), np.asarray(variances, dtype=float)


def forecast(fit_result, horizon=1, num_draws=DEFAULT_NUM_DRAWS,
             return_draws=False, seed=0):
    """Parameter and density forecast from a fitted model.

    Row 1 of param_forecasts is the exact one-step filter update; rows 2..H
    are means over simulated continuations. Observation draws (one per
    simulated path per horizon) are returned when return_draws is true.
    Draws whose state recursion leaves the safe region are dropped; more
    than 1% dropped is an error.
    """
    if horizon < 1:
        raise InvalidHorizon(f"horizon must be >= 1, got {horizon}")
    if horizon > 1 and num_draws < 1:
        raise InvalidHorizon("num_draws must be >= 1 for multi-step forecasts")
    spec = fit_result.spec
    coeffs = fit_result.coeffs
    tilde_next = np.asarray(fit_result.filter_output.next_tilde, dtype=float)
    theta_next = lk.map_params(spec.links, tilde_next)
    j = spec.num_params

    if horizon == 1 and not return_draws:
        params = theta_next[None, :]
        mean, var = _moments_along(spec, params)
        return ForecastResult(
            horizon=1,
            param_forecasts=params,
            moment_forecasts={"mean": mean, "variance": var},
            draws=None,
            num_draws=0,
            spec=spec,
            start_tilde=tilde_next,
        )

    d = (
        dists.MULTIVARIATE[spec.dist]
        if spec.n > 1
        else dists.UNIVARIATE[spec.dist]
    )
    theta_sum = np.zeros((horizon, j))
    shape = (horizon, num_draws, spec.n) if spec.n > 1 else (horizon, num_draws)
    draws = np.empty(shape)
    kept = 0
    dropped = 0
    # one child generator per draw so the reduction is order-independent
    streams = np.random.default_rng(seed).spawn(num_draws)
    for rng in streams:
        state = tilde_next.copy()
        path = np.empty((horizon, j))
        obs = np.empty((horizon, spec.n) if spec.n > 1 else horizon)
        try:
            for h in range(horizon):
                theta = lk.map_params(spec.links, state)
                path[h] = theta
                y_h = d.sample(theta, rng, spec.n) if spec.n > 1 else d.sample(theta, rng)
                obs[h] = y_h
                if h + 1 < horizon:
                    s_h = scaled_score(spec, y_h, state)
                    state = coeffs.kappa + coeffs.a * s_h + coeffs.b * state
                    if not np.all(np.isfinite(state)) or np.max(np.abs(state)) > 50.0:
                        raise NonFiniteState(f"draw diverged at step {h}")
        except ScoreDrivenError:
            dropped += 1
            continue
        theta_sum += path
        draws[:, kept] = obs
        kept += 1
    if kept == 0 or dropped > MAX_DROPPED_FRACTION * num_draws:
        raise NonFiniteState(
            f"{dropped} of {num_draws} forecast draws diverged"
        )
    draws = draws[:, :kept]

    params = theta_sum / kept
    params[0] = theta_next  # h=1 is analytic, no simulation noise
    mean, var = _moments_along(spec, params)
    if horizon > 1:
        # beyond one step the predictive moments come from the draws, not
        # from plugging averaged parameters into the conditional moments
        mean[1:] = np.mean(draws[1:], axis=1)
        var[1:] = np.var(draws[1:], axis=1, ddof=0)
    return ForecastResult(
        horizon=horizon,
        param_forecasts=params,
        moment_forecasts={"mean": mean, "variance": var},
        draws=draws if return_draws else None,
        num_draws=kept,
        spec=spec,
        start_tilde=tilde_next,
        dropped_draws=dropped,
    )


def predictive_moments_and_quantiles(forecast_result, p):
    """Per-horizon predictive mean, variance and p-quantile.

    The first horizon uses the analytic distribution at the forecast
    parameters; later horizons need the simulated draws.
    """
    if not (0.0 < p < 1.0):
        raise ShapeMismatch(f"probability must be in (0, 1), got {p}")
    spec = forecast_result.spec
    h_len = forecast_result.horizon
    mean = np.array(forecast_result.moment_forecasts["mean"], dtype=float)
    var = np.array(forecast_result.moment_forecasts["variance"], dtype=float)
    quantiles = np.empty(h_len)
    quantiles[0] = dists.quantile(
        spec.dist, forecast_result.param_forecasts[0], p, spec.n
    )
    if h_len > 1:
        if forecast_result.draws is None:
            raise DrawsUnavailable(
                "multi-step quantiles need draws; call forecast with return_draws=True"
            )
        quantiles[1:] = np.quantile(forecast_result.draws[1:], p, axis=1)
    return {"mean": mean, "variance": var, "quantile": quantiles}


def _refit_schedule(forecast_length, refit_every):
    return list(range(0, forecast_length, refit_every))


def roll(spec, data, forecast_length, refit_every=1, refit_window="recursive",
         config=None):
    """One-step-ahead rolling predictions with periodic re-estimation.

    The last forecast_length observations are predicted out of sample. The
    model is refit every refit_every steps on either the full past
    (recursive) or a fixed-length trailing window (moving, length equal to
    the initial in-sample size). Between refits the coefficients stay
    frozen while the filter state keeps updating with each new observation;
    at every refit the state is re-initialized at the new unconditional
    level and filtered forward through the window.
    """
    if refit_window not in ("recursive", "moving"):
        raise ShapeMismatch(f"unknown refit window {refit_window!r}")
    if refit_every < 1:
        raise ShapeMismatch("refit_every must be >= 1")
    data = np.asarray(data, dtype=float)
    t_total = data.shape[0]
    if not (0 < forecast_length < t_total):
        raise ShapeMismatch(
            f"forecast_length must be in (0, {t_total}), got {forecast_length}"
        )
    config = config or OptimizerConfig()
    t_in = t_total - forecast_length
    j = spec.num_params

    predicted = np.empty((forecast_length, j))
    log_scores = np.empty(forecast_length)
    refit_indices = []
    fits = []
    warn_log = []
    coeffs = None
    schedule = set(_refit_schedule(forecast_length, refit_every))

    for step in range(forecast_length):
        t_now = t_in + step  # index of the first unseen observation
        window_start = 0 if refit_window == "recursive" else t_now - t_in
        window = data[window_start:t_now]
        if step in schedule:
            refit_indices.append(t_now)
            try:
                fr = fit(spec, window, config)
                coeffs = fr.coeffs
                fits.append(fr)
            except ScoreDrivenError as exc:
                if coeffs is None:
                    raise
                msg = f"refit at index {t_now} failed ({exc}); reusing previous coefficients"
                warnings.warn(msg)
                warn_log.append(msg)
        # filter from the window start under the frozen coefficients; the
        # state never sees data at or beyond t_now
        out = gas_filter(spec, coeffs, window, paths=False)
        tilde_next = out.next_tilde
        theta_next = lk.map_params(spec.links, tilde_next)
        predicted[step] = theta_next
        log_scores[step] = dists.log_density(
            spec.dist, data[t_now], theta_next, spec.n
        )

    return RollResult(
        predicted_params=predicted,
        realized=data[t_in:],
        log_scores=log_scores,
        refit_indices=refit_indices,
        fits=fits,
        warnings=warn_log,
    )
