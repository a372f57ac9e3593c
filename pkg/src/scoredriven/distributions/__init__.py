"""Registry and dispatch layer over the conditional distributions.

All public functions take the distribution label (e.g. ``"std"``) plus the
natural parameter vector; multivariate families additionally take the series
dimension ``n``.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import (
    DimensionUnsupported,
    MultivariateUnsupported,
    ScalingUnsupported,
    UnknownDistribution,
)
from .multivariate import (
    MAX_DIMENSION,
    MULTIVARIATE,
    corr_matrix_from_vector,
    corr_pairs,
    corr_vector_from_matrix,
)
from .univariate import IDENTITY, INV, INVSQRT, UNIVARIATE

__all__ = [
    "DistInfo",
    "dist_info",
    "available_distributions",
    "log_density",
    "score_natural",
    "information_natural",
    "sample",
    "moments",
    "quantile",
    "cdf",
    "corr_pairs",
    "corr_matrix_from_vector",
    "corr_vector_from_matrix",
    "IDENTITY",
    "INV",
    "INVSQRT",
    "MAX_DIMENSION",
]

_CORR_BOUNDS = (-1.0, 1.0)
_SHAPE_BOUNDS = (2.01, 50.0)


@dataclass(frozen=True)
class DistInfo:
    label: str
    name: str
    kind: str
    param_roles: tuple
    num_params: int
    supported_scalings: tuple
    bounds: tuple


def available_distributions():
    return sorted(UNIVARIATE) + sorted(MULTIVARIATE)


def _resolve(dist, n):
    if dist in UNIVARIATE:
        if n != 1:
            raise DimensionUnsupported(
                f"{dist} is univariate; dimension must be 1, got {n}"
            )
        return UNIVARIATE[dist], False
    if dist in MULTIVARIATE:
        if not (2 <= n <= MAX_DIMENSION):
            raise DimensionUnsupported(
                f"{dist} supports dimensions 2..{MAX_DIMENSION}, got {n}"
            )
        return MULTIVARIATE[dist], True
    raise UnknownDistribution(f"unknown distribution label {dist!r}")


def dist_info(dist, n=1):
    d, multi = _resolve(dist, n)
    if not multi:
        return DistInfo(
            label=d.label,
            name=d.name,
            kind="univariate",
            param_roles=tuple(d.roles),
            num_params=len(d.roles),
            supported_scalings=tuple(d.scalings),
            bounds=tuple(d.bounds),
        )
    n_corr = n * (n - 1) // 2
    bounds = (
        ((-np.inf, np.inf),) * n
        + ((0.0, np.inf),) * n
        + (_CORR_BOUNDS,) * n_corr
        + ((_SHAPE_BOUNDS,) if d.has_shape else ())
    )
    return DistInfo(
        label=d.label,
        name=d.name,
        kind="multivariate",
        param_roles=d.roles_expanded(n),
        num_params=d.num_params(n),
        supported_scalings=(IDENTITY,),
        bounds=bounds,
    )


def log_density(dist, y, theta, n=1):
    d, multi = _resolve(dist, n)
    if multi:
        d.check_params(theta, n)
        return d.logpdf(y, theta, n)
    d.check_params(theta)
    d.check_support(y)
    return d.logpdf(y, theta)


def score_natural(dist, y, theta, n=1):
    d, multi = _resolve(dist, n)
    if multi:
        d.check_params(theta, n)
        return d.score(y, theta, n)
    d.check_params(theta)
    d.check_support(y, interior=True)
    return d.score(y, theta)


def information_natural(dist, theta, n=1):
    d, multi = _resolve(dist, n)
    if multi:
        raise ScalingUnsupported(f"{dist}: only Identity scaling is supported")
    d.check_params(theta)
    return d.information(theta)


def sample(dist, theta, rng, n=1, size=None):
    d, multi = _resolve(dist, n)
    if multi:
        d.check_params(theta, n)
        return d.sample(theta, rng, n, size=size)
    d.check_params(theta)
    return d.sample(theta, rng, size=size)


def moments(dist, theta, n=1):
    d, multi = _resolve(dist, n)
    if multi:
        d.check_params(theta, n)
        return d.moments(theta, n)
    d.check_params(theta)
    return d.moments(theta)


def quantile(dist, theta, p, n=1):
    d, multi = _resolve(dist, n)
    if multi:
        raise MultivariateUnsupported(f"{dist}: quantiles are univariate only")
    d.check_params(theta)
    return d.ppf(theta, p)


def cdf(dist, theta, x, n=1):
    d, multi = _resolve(dist, n)
    if multi:
        raise MultivariateUnsupported(f"{dist}: cdf is univariate only")
    d.check_params(theta)
    return d.cdf(theta, x)
