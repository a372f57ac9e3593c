"""Mappings between the unconstrained working space and the natural
parameter space: identity, exponential and modified logistic links per
coordinate, plus the angle-based construction for correlation blocks.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import distributions as dists
from .errors import DimensionUnsupported, ParamOutOfBounds, ShapeMismatch

# beyond this the exp/logistic links are numerically saturated anyway
_TILDE_CLAMP = 35.0
_BOUND_EPS = 1e-12
_FD_STEP = 1e-7


@dataclass(frozen=True)
class Identity:
    kind = "identity"


@dataclass(frozen=True)
class Exponential:
    offset: float = 0.0
    kind = "exponential"


@dataclass(frozen=True)
class ModifiedLogistic:
    lower: float
    upper: float
    kind = "logistic"

    def __post_init__(self):
        if not self.upper > self.lower:
            raise ParamOutOfBounds("modified logistic requires upper > lower")


@dataclass(frozen=True)
class CorrelationBlock:
    n: int
    start: int

    @property
    def size(self):
        return self.n * (self.n - 1) // 2


@dataclass(frozen=True)
class LinkSpec:
    """Per-coordinate scalar links; correlation coordinates (if any) are
    handled jointly by ``corr`` and carry None in ``scalars``."""

    scalars: tuple
    corr: Optional[CorrelationBlock] = None

    @property
    def dim(self):
        return len(self.scalars)

    def scalar_indices(self):
        return [i for i, lk in enumerate(self.scalars) if lk is not None]

    def corr_indices(self):
        if self.corr is None:
            return []
        return list(range(self.corr.start, self.corr.start + self.corr.size))


def link_for_bounds(lo, hi):
    if np.isneginf(lo) and np.isposinf(hi):
        return Identity()
    if np.isposinf(hi):
        return Exponential(offset=float(lo))
    return ModifiedLogistic(lower=float(lo), upper=float(hi))


def links_for(dist, n=1):
    """Canonical link assignment implied by the registry bounds."""
    info = dists.dist_info(dist, n)
    scalars = []
    corr = None
    for i, (role, bnd) in enumerate(zip(info.param_roles, info.bounds)):
        if role == "correlation":
            if corr is None:
                corr = CorrelationBlock(n=n, start=i)
            scalars.append(None)
        else:
            scalars.append(link_for_bounds(*bnd))
    return LinkSpec(scalars=tuple(scalars), corr=corr)


def _map_scalar(link, x):
    if link.kind == "identity":
        return x
    x = np.clip(x, -_TILDE_CLAMP, _TILDE_CLAMP)
    if link.kind == "exponential":
        return np.exp(x) + link.offset
    return link.lower + (link.upper - link.lower) / (1.0 + np.exp(-x))


def _unmap_scalar(link, v):
    if link.kind == "identity":
        if not np.isfinite(v):
            raise ParamOutOfBounds(f"non-finite value {v}")
        return v
    if link.kind == "exponential":
        if v - link.offset <= _BOUND_EPS:
            raise ParamOutOfBounds(f"{v} not strictly above {link.offset}")
        return np.log(v - link.offset)
    if v - link.lower <= _BOUND_EPS or link.upper - v <= _BOUND_EPS:
        raise ParamOutOfBounds(f"{v} not strictly inside ({link.lower}, {link.upper})")
    return np.log((v - link.lower) / (link.upper - v))


def _jac_scalar(link, x):
    if link.kind == "identity":
        return np.ones_like(np.asarray(x, dtype=float))
    x = np.clip(x, -_TILDE_CLAMP, _TILDE_CLAMP)
    if link.kind == "exponential":
        return np.exp(x)
    sig = 1.0 / (1.0 + np.exp(-x))
    return (link.upper - link.lower) * sig * (1.0 - sig)


def correlation_from_angles(angles, n):
    """Correlation matrix from unconstrained angles via the row-wise
    trigonometric construction; PSD with unit diagonal for any real angles."""
    n = int(n)
    if not (2 <= n <= dists.MAX_DIMENSION):
        raise DimensionUnsupported(f"correlation block dimension {n} unsupported")
    angles = np.asarray(angles, dtype=float)
    if angles.shape != (n * (n - 1) // 2,):
        raise ShapeMismatch(
            f"expected {n * (n - 1) // 2} angles for N={n}, got {angles.shape}"
        )
    z = np.zeros((n, n))
    z[0, 0] = 1.0
    pos = 0
    for h in range(1, n):
        row = angles[pos : pos + h]
        pos += h
        sin_prod = 1.0
        for j in range(h):
            z[h, j] = np.cos(row[j]) * sin_prod
            sin_prod *= np.sin(row[j])
        z[h, h] = sin_prod
    r_mat = z @ z.T
    np.fill_diagonal(r_mat, 1.0)
    return r_mat


def angles_from_correlation(r_mat):
    """Inverse of correlation_from_angles; angles returned in (0, pi)."""
    r_mat = np.asarray(r_mat, dtype=float)
    n = r_mat.shape[0]
    try:
        chol = np.linalg.cholesky(r_mat)
    except np.linalg.LinAlgError as exc:
        raise ParamOutOfBounds("correlation matrix not positive definite") from exc
    angles = []
    for h in range(1, n):
        sin_prod = 1.0
        for j in range(h):
            c = np.clip(chol[h, j] / sin_prod, -1.0, 1.0)
            ang = np.arccos(c)
            angles.append(ang)
            sin_prod *= np.sin(ang)
            if sin_prod < 1e-14:
                sin_prod = 1e-14
    return np.array(angles)


def map_params(spec, tilde):
    """Apply the links coordinatewise; accepts a vector or a T x J matrix."""
    tilde = np.asarray(tilde, dtype=float)
    if tilde.ndim == 2:
        return np.vstack([map_params(spec, row) for row in tilde])
    if tilde.shape != (spec.dim,):
        raise ShapeMismatch(f"expected {spec.dim} coordinates, got {tilde.shape}")
    out = np.empty_like(tilde)
    for i, lk in enumerate(spec.scalars):
        if lk is not None:
            out[i] = _map_scalar(lk, tilde[i])
    if spec.corr is not None:
        idx = spec.corr_indices()
        r_mat = correlation_from_angles(tilde[idx], spec.corr.n)
        out[idx] = dists.corr_vector_from_matrix(r_mat)
    return out


def unmap_params(spec, theta):
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (spec.dim,):
        raise ShapeMismatch(f"expected {spec.dim} coordinates, got {theta.shape}")
    out = np.empty_like(theta)
    for i, lk in enumerate(spec.scalars):
        if lk is not None:
            out[i] = _unmap_scalar(lk, theta[i])
    if spec.corr is not None:
        idx = spec.corr_indices()
        r_mat = dists.corr_matrix_from_vector(theta[idx], spec.corr.n)
        out[idx] = angles_from_correlation(r_mat)
    return out


def _corr_block_jacobian(block, angles):
    """d rho / d angle for the correlation block; analytic for N=2 and
    central finite differences otherwise (no closed form is available)."""
    if block.n == 2:
        return np.array([[-np.sin(angles[0])]])
    m = block.size
    jac = np.empty((m, m))
    for j in range(m):
        hi = angles.copy()
        lo = angles.copy()
        hi[j] += _FD_STEP
        lo[j] -= _FD_STEP
        dr = (
            dists.corr_vector_from_matrix(correlation_from_angles(hi, block.n))
            - dists.corr_vector_from_matrix(correlation_from_angles(lo, block.n))
        ) / (2.0 * _FD_STEP)
        jac[:, j] = dr
    return jac


def jacobian(spec, tilde):
    """J x J Jacobian of the mapping at tilde (diagonal outside the
    correlation block)."""
    tilde = np.asarray(tilde, dtype=float)
    if tilde.shape != (spec.dim,):
        raise ShapeMismatch(f"expected {spec.dim} coordinates, got {tilde.shape}")
    jac = np.zeros((spec.dim, spec.dim))
    for i, lk in enumerate(spec.scalars):
        if lk is not None:
            jac[i, i] = _jac_scalar(lk, tilde[i])
    if spec.corr is not None:
        idx = spec.corr_indices()
        sub = _corr_block_jacobian(spec.corr, tilde[idx])
        jac[np.ix_(idx, idx)] = sub
    return jac


def tilde_score(jac, grad):
    jac = np.asarray(jac, dtype=float)
    grad = np.asarray(grad, dtype=float)
    if jac.shape[0] != grad.shape[0]:
        raise ShapeMismatch("jacobian and score dimensions differ")
    return jac.T @ grad


def tilde_info(jac, info):
    jac = np.asarray(jac, dtype=float)
    info = np.asarray(info, dtype=float)
    if jac.shape[0] != info.shape[0] or info.shape[0] != info.shape[1]:
        raise ShapeMismatch("jacobian and information dimensions differ")
    out = jac.T @ info @ jac
    return 0.5 * (out + out.T)


def encode_scalar_links(spec):
    """Pack scalar links into arrays for the compiled filter kernels.
    Codes: 0 identity, 1 exponential(offset), 2 logistic(lower, upper)."""
    if spec.corr is not None:
        raise ShapeMismatch("correlation blocks have no scalar encoding")
    codes = np.zeros(spec.dim, dtype=np.int64)
    p1 = np.zeros(spec.dim)
    p2 = np.zeros(spec.dim)
    for i, lk in enumerate(spec.scalars):
        if lk.kind == "exponential":
            codes[i], p1[i] = 1, lk.offset
        elif lk.kind == "logistic":
            codes[i], p1[i], p2[i] = 2, lk.lower, lk.upper
    return codes, p1, p2
