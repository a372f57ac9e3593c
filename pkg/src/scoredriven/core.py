"""Model specification, the score-driven filter recursion, simulation and
unconditional-level targeting."""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import distributions as dists
from . import links as lk
from .errors import (
    NonFiniteState,
    ParamOutOfBounds,
    ScalingUnsupported,
    ShapeMismatch,
    SingularInformation,
    SupportViolation,
)

SCALING_GAMMA = {"Identity": 0.0, "InvSqrt": 0.5, "Inv": 1.0}
STATE_LIMIT = 50.0
_INFO_EIG_FLOOR = 1e-10

UNIVARIATE_ROLES = ("location", "scale", "skewness", "shape")
MULTIVARIATE_ROLES = ("location", "scale", "correlation", "shape")


def _default_time_varying(multivariate):
    roles = MULTIVARIATE_ROLES if multivariate else UNIVARIATE_ROLES
    return {r: (r == "scale") for r in roles}


@dataclass
class GasSpec:
    """Which conditional distribution, which parameters move, and how the
    score is scaled."""

    dist: str
    n: int = 1
    scaling: str = "Identity"
    time_varying: Optional[dict] = None
    scalar_parameters: bool = False

    def __post_init__(self):
        self.info = dists.dist_info(self.dist, self.n)
        if self.scaling not in SCALING_GAMMA:
            raise ScalingUnsupported(f"unknown scaling type {self.scaling!r}")
        if self.scaling not in self.info.supported_scalings:
            raise ScalingUnsupported(
                f"{self.dist} supports {self.info.supported_scalings}, "
                f"not {self.scaling}"
            )
        allowed = MULTIVARIATE_ROLES if self.n > 1 else UNIVARIATE_ROLES
        tv = dict(_default_time_varying(self.n > 1))
        if "scale" not in self.info.param_roles:
            tv["location"] = True
        if self.time_varying is not None:
            for key, val in self.time_varying.items():
                if key not in allowed:
                    raise ParamOutOfBounds(f"unknown parameter group {key!r}")
                tv[key] = bool(val)
        self.time_varying = {r: tv[r] for r in allowed if r in self.info.param_roles}
        if not any(
            self.time_varying.get(r, False) for r in set(self.info.param_roles)
        ):
            raise ParamOutOfBounds("at least one parameter must be time-varying")
        self.links = lk.links_for(self.dist, self.n)

    @property
    def gamma(self):
        return SCALING_GAMMA[self.scaling]

    @property
    def num_params(self):
        return self.info.num_params

    def tv_mask(self):
        return np.array(
            [self.time_varying.get(r, False) for r in self.info.param_roles]
        )

    def role_groups(self):
        """Coefficient groups: one per role under scalar_parameters (with
        n > 1), otherwise one per coordinate."""
        roles = self.info.param_roles
        if self.n > 1 and self.scalar_parameters:
            seen = {}
            groups = []
            for r in roles:
                if r not in seen:
                    seen[r] = len(seen)
                groups.append(seen[r])
            return np.array(groups)
        return np.arange(len(roles))


@dataclass
class Coefficients:
    """Static parameters (kappa, diag A, diag B) of the updating equation."""

    kappa: np.ndarray
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.kappa = np.asarray(self.kappa, dtype=float)
        self.a = np.asarray(self.a, dtype=float)
        self.b = np.asarray(self.b, dtype=float)

    def validate(self, spec):
        j = spec.num_params
        for name, arr in (("kappa", self.kappa), ("a", self.a), ("b", self.b)):
            if arr.shape != (j,):
                raise ShapeMismatch(f"{name} must have length {j}, got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ParamOutOfBounds(f"{name} contains non-finite entries")
        if np.any(self.a < 0):
            raise ParamOutOfBounds("entries of A must be nonnegative")
        if np.max(np.abs(self.b)) >= 1.0:
            raise ParamOutOfBounds("spectral radius of B must be below one")
        frozen = ~spec.tv_mask()
        if np.any(self.a[frozen] != 0.0) or np.any(self.b[frozen] != 0.0):
            raise ParamOutOfBounds(
                "a and b must be exactly zero for non-time-varying parameters"
            )
        groups = spec.role_groups()
        for g in np.unique(groups):
            idx = groups == g
            if len(set(self.a[idx])) > 1 or len(set(self.b[idx])) > 1:
                raise ParamOutOfBounds(
                    "scalar_parameters requires equal coefficients within a group"
                )
        return self

    def initial_tilde(self):
        return self.kappa / (1.0 - self.b)


@dataclass
class FilterOutput:
    tilde_params: np.ndarray
    natural_params: Optional[np.ndarray]
    scaled_scores: np.ndarray
    loglik_contribs: np.ndarray
    total_loglik: float
    next_tilde: np.ndarray


@dataclass
class SimOutput:
    series: np.ndarray
    param_paths: np.ndarray
    seed: int


def _dist_obj(spec):
    if spec.n > 1:
        return dists.MULTIVARIATE[spec.dist]
    return dists.UNIVARIATE[spec.dist]


def _natural_score(spec, d, y, theta):
    if spec.n > 1:
        return d.score(y, theta, spec.n)
    return np.asarray(d.score(y, theta), dtype=float)


def _natural_logpdf(spec, d, y, theta):
    if spec.n > 1:
        return float(d.logpdf(y, theta, spec.n))
    return float(d.logpdf(y, theta))


def _inv_sqrt_psd(mat):
    vals, vecs = np.linalg.eigh(mat)
    if vals.min() < _INFO_EIG_FLOOR:
        raise SingularInformation(
            f"information matrix nearly singular (min eigenvalue {vals.min():.3e})"
        )
    return (vecs / np.sqrt(vals)) @ vecs.T


def scaled_score(spec, y, tilde):
    """Scaled score in the working space at state tilde for observation y."""
    tilde = np.asarray(tilde, dtype=float)
    d = _dist_obj(spec)
    theta = lk.map_params(spec.links, tilde)
    grad = _natural_score(spec, d, y, theta)
    jac = lk.jacobian(spec.links, tilde)
    grad_t = lk.tilde_score(jac, grad)
    if spec.gamma == 0.0:
        return grad_t
    info = dists.information_natural(spec.dist, theta, spec.n)
    info_t = lk.tilde_info(jac, info)
    if spec.gamma == 1.0:
        vals = np.linalg.eigvalsh(info_t)
        if vals.min() < _INFO_EIG_FLOOR:
            raise SingularInformation(
                f"information matrix nearly singular (min eigenvalue {vals.min():.3e})"
            )
        return np.linalg.solve(info_t, grad_t)
    return _inv_sqrt_psd(info_t) @ grad_t


def _as_obs_matrix(spec, y):
    y = np.asarray(y, dtype=float)
    if spec.n == 1:
        if y.ndim == 2 and y.shape[1] == 1:
            y = y[:, 0]
        if y.ndim != 1:
            raise ShapeMismatch("univariate data must be a 1-D array")
        return y
    if y.ndim != 2 or y.shape[1] != spec.n:
        raise ShapeMismatch(f"multivariate data must be T x {spec.n}")
    return y


def _check_all_support(spec, y):
    if spec.n > 1:
        if not np.all(np.isfinite(y)):
            raise SupportViolation("non-finite observation")
        return
    d = dists.UNIVARIATE[spec.dist]
    ok = d.in_support(y)
    if not np.all(ok):
        idx = int(np.argmin(ok))
        raise SupportViolation(
            f"{spec.dist}: observation at index {idx} outside support", index=idx
        )


def _kernel_filter(spec, coeffs, y):
    from . import _kernels

    codes, p1, p2 = lk.encode_scalar_links(spec.links)
    fn = _kernels.filter_norm if spec.dist == "norm" else _kernels.filter_std
    tilde, scores, ll, nxt, bad_t, bad_j = fn(
        y, coeffs.kappa, coeffs.a, coeffs.b, codes, p1, p2
    )
    if bad_t >= 0:
        raise NonFiniteState(
            f"filter state out of range after step {bad_t} (coordinate {bad_j})",
            index=bad_t,
            coordinate=bad_j,
        )
    return tilde, scores, ll, nxt


def gas_filter(spec, coeffs, y, paths=True):
    """Run the score-driven recursion over the sample.

    The state starts at the unconditional level (I - B)^-1 kappa and the
    one-step-ahead state after the final observation is returned in
    next_tilde.
    """
    coeffs.validate(spec)
    y = _as_obs_matrix(spec, y)
    t_len = y.shape[0]
    if t_len < 1:
        raise ShapeMismatch("need at least one observation")
    _check_all_support(spec, y)

    use_kernel = spec.n == 1 and spec.gamma == 0.0 and spec.dist in ("norm", "std")
    if use_kernel:
        tilde, scores, ll, nxt = _kernel_filter(spec, coeffs, y)
    else:
        j = spec.num_params
        d = _dist_obj(spec)
        tilde = np.empty((t_len, j))
        scores = np.empty((t_len, j))
        ll = np.empty(t_len)
        natural = np.empty((t_len, j)) if paths else None
        state = coeffs.initial_tilde()
        for t in range(t_len):
            tilde[t] = state
            theta = lk.map_params(spec.links, state)
            if natural is not None:
                natural[t] = theta
            grad = _natural_score(spec, d, y[t], theta)
            jac = lk.jacobian(spec.links, state)
            s_t = lk.tilde_score(jac, grad)
            if spec.gamma != 0.0:
                info_t = lk.tilde_info(
                    jac, dists.information_natural(spec.dist, theta, spec.n)
                )
                if spec.gamma == 1.0:
                    vals = np.linalg.eigvalsh(info_t)
                    if vals.min() < _INFO_EIG_FLOOR:
                        raise SingularInformation(
                            f"singular information at step {t}"
                        )
                    s_t = np.linalg.solve(info_t, s_t)
                else:
                    s_t = _inv_sqrt_psd(info_t) @ s_t
            scores[t] = s_t
            ll[t] = _natural_logpdf(spec, d, y[t], theta)
            state = coeffs.kappa + coeffs.a * s_t + coeffs.b * state
            if not np.all(np.isfinite(state)) or np.max(np.abs(state)) > STATE_LIMIT:
                bad = int(np.argmax(~np.isfinite(state) | (np.abs(state) > STATE_LIMIT)))
                raise NonFiniteState(
                    f"filter state out of range after step {t} (coordinate {bad})",
                    index=t,
                    coordinate=bad,
                )
        nxt = state
        if paths:
            return FilterOutput(tilde, natural, scores, ll, float(ll.sum()), nxt)
        return FilterOutput(tilde, None, scores, ll, float(ll.sum()), nxt)

    natural = lk.map_params(spec.links, tilde) if paths else None
    return FilterOutput(tilde, natural, scores, ll, float(ll.sum()), nxt)


def simulate(spec, coeffs, t_len, seed=0):
    """Simulate a path: draw y_t from the current conditional distribution,
    then advance the state with the scaled score."""
    coeffs.validate(spec)
    if t_len < 1:
        raise ShapeMismatch("need at least one step")
    rng = np.random.default_rng(seed)
    j = spec.num_params
    d = _dist_obj(spec)
    series = np.empty((t_len, spec.n)) if spec.n > 1 else np.empty(t_len)
    paths = np.empty((t_len, j))
    state = coeffs.initial_tilde()
    for t in range(t_len):
        theta = lk.map_params(spec.links, state)
        paths[t] = theta
        if spec.n > 1:
            y_t = d.sample(theta, rng, spec.n)
        else:
            y_t = d.sample(theta, rng)
        series[t] = y_t
        s_t = scaled_score(spec, y_t, state)
        state = coeffs.kappa + coeffs.a * s_t + coeffs.b * state
        if not np.all(np.isfinite(state)) or np.max(np.abs(state)) > STATE_LIMIT:
            raise NonFiniteState(f"simulated state out of range after step {t}", index=t)
    return SimOutput(series=series, param_paths=paths, seed=seed)


def target_kappa(spec, b_diag, theta_star):
    """kappa making theta_star the unconditional (and initial) parameter."""
    b_diag = np.asarray(b_diag, dtype=float)
    if np.max(np.abs(b_diag)) >= 1.0:
        raise ParamOutOfBounds("|b| must be below one for targeting")
    tilde_star = lk.unmap_params(spec.links, np.asarray(theta_star, dtype=float))
    return (1.0 - b_diag) * tilde_star
