"""Multivariate Gaussian and Student-t with (location, scale, correlation[,
shape]) natural parametrization.

Parameter ordering for dimension N:
    locations 1..N, scales 1..N, correlations in row-major lower-triangular
    order (rho_21, rho_31, rho_32, ...), then the shape for the Student-t.
"""

import numpy as np
from scipy import special

from ..errors import DimensionUnsupported, ParamOutOfBounds

MAX_DIMENSION = 4


def check_dimension(n):
    if not (2 <= int(n) <= MAX_DIMENSION):
        raise DimensionUnsupported(
            f"multivariate dimension must be in [2, {MAX_DIMENSION}], got {n}"
        )
    return int(n)


def corr_pairs(n):
    """Lower-triangular (row, col) index pairs in row-major order."""
    return [(h, k) for h in range(1, n) for k in range(h)]


def corr_matrix_from_vector(rho, n):
    r_mat = np.eye(n)
    for val, (h, k) in zip(rho, corr_pairs(n)):
        r_mat[h, k] = r_mat[k, h] = val
    return r_mat


def corr_vector_from_matrix(r_mat):
    n = r_mat.shape[0]
    return np.array([r_mat[h, k] for h, k in corr_pairs(n)])


class MultivariateBase:
    kind = "multivariate"
    has_shape = False

    def num_params(self, n):
        base = 2 * n + n * (n - 1) // 2
        return base + 1 if self.has_shape else base

    def roles_expanded(self, n):
        roles = ["location"] * n + ["scale"] * n + ["correlation"] * (n * (n - 1) // 2)
        if self.has_shape:
            roles.append("shape")
        return tuple(roles)

    def unpack(self, theta, n):
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.num_params(n),):
            raise ParamOutOfBounds(
                f"{self.label}: expected {self.num_params(n)} parameters for N={n}"
            )
        mu = theta[:n]
        sig = theta[n : 2 * n]
        rho = theta[2 * n : 2 * n + n * (n - 1) // 2]
        nu = theta[-1] if self.has_shape else None
        return mu, sig, rho, nu

    def check_params(self, theta, n):
        check_dimension(n)
        mu, sig, rho, nu = self.unpack(theta, n)
        if not np.all(np.isfinite(mu)):
            raise ParamOutOfBounds(f"{self.label}: non-finite location")
        if np.any(sig <= 0) or not np.all(np.isfinite(sig)):
            raise ParamOutOfBounds(f"{self.label}: scales must be positive")
        r_mat = corr_matrix_from_vector(rho, n)
        if np.linalg.eigvalsh(r_mat).min() <= 0:
            raise ParamOutOfBounds(
                f"{self.label}: correlation block not positive definite"
            )
        if self.has_shape and not (2.01 < nu < 50.0):
            raise ParamOutOfBounds(f"{self.label}: shape {nu} outside (2.01, 50.0)")
        return mu, sig, r_mat, nu

    def _sigma(self, sig, r_mat):
        return (sig[:, None] * r_mat) * sig[None, :]

    def _shape_blocks(self, y, theta, n):
        mu, sig, rho, nu = self.unpack(theta, n)
        r_mat = corr_matrix_from_vector(rho, n)
        cov = self._sigma(sig, r_mat)
        resid = np.asarray(y, dtype=float) - mu
        cov_inv = np.linalg.inv(cov)
        delta = float(resid @ cov_inv @ resid)
        _, logdet = np.linalg.slogdet(cov)
        return mu, sig, r_mat, nu, cov_inv, resid, delta, logdet

    def _chain_scale_corr(self, g_mat, sig, r_mat, n):
        """Map the matrix derivative G (dlogp = tr(G dSigma)) to the
        per-scale and per-correlation score entries."""
        d_mat = np.diag(sig)
        gdr = g_mat @ d_mat @ r_mat
        d_sig = 2.0 * np.diag(gdr)
        dgd = d_mat @ g_mat @ d_mat
        d_rho = np.array([2.0 * dgd[h, k] for h, k in corr_pairs(n)])
        return d_sig, d_rho

    def moments(self, theta, n):
        mu, sig, rho, nu = self.unpack(theta, n)
        cov = self._sigma(sig, corr_matrix_from_vector(rho, n))
        if self.has_shape:
            cov = nu / (nu - 2.0) * cov
        return mu.copy(), cov


class MultivariateNormal(MultivariateBase):
    label = "mvnorm"
    name = "Multivariate Gaussian"
    roles = ("location", "scale", "correlation")

    def logpdf(self, y, theta, n):
        _, _, _, _, cov_inv, resid, delta, logdet = self._shape_blocks(y, theta, n)
        return -0.5 * (n * np.log(2.0 * np.pi) + logdet + delta)

    def score(self, y, theta, n):
        _, sig, r_mat, _, cov_inv, resid, _, _ = self._shape_blocks(y, theta, n)
        alpha = cov_inv @ resid
        d_mu = alpha
        g_mat = 0.5 * (np.outer(alpha, alpha) - cov_inv)
        d_sig, d_rho = self._chain_scale_corr(g_mat, sig, r_mat, n)
        return np.concatenate([d_mu, d_sig, d_rho])

    def sample(self, theta, rng, n, size=None):
        mu, sig, rho, _ = self.unpack(theta, n)
        chol = np.linalg.cholesky(self._sigma(sig, corr_matrix_from_vector(rho, n)))
        m = 1 if size is None else int(size)
        z = rng.standard_normal((m, n))
        out = mu + z @ chol.T
        return out[0] if size is None else out


class MultivariateStudentT(MultivariateBase):
    label = "mvt"
    name = "Multivariate Student-t"
    roles = ("location", "scale", "correlation", "shape")
    has_shape = True

    def logpdf(self, y, theta, n):
        _, _, _, nu, _, _, delta, logdet = self._shape_blocks(y, theta, n)
        return (
            special.gammaln((nu + n) / 2.0)
            - special.gammaln(nu / 2.0)
            - 0.5 * n * np.log(np.pi * nu)
            - 0.5 * logdet
            - (nu + n) / 2.0 * np.log1p(delta / nu)
        )

    def score(self, y, theta, n):
        _, sig, r_mat, nu, cov_inv, resid, delta, _ = self._shape_blocks(y, theta, n)
        weight = (nu + n) / (nu + delta)
        alpha = cov_inv @ resid
        d_mu = weight * alpha
        g_mat = 0.5 * (weight * np.outer(alpha, alpha) - cov_inv)
        d_sig, d_rho = self._chain_scale_corr(g_mat, sig, r_mat, n)
        d_nu = (
            0.5 * special.digamma((nu + n) / 2.0)
            - 0.5 * special.digamma(nu / 2.0)
            - 0.5 * n / nu
            - 0.5 * np.log1p(delta / nu)
            + (nu + n) * delta / (2.0 * nu * (nu + delta))
        )
        return np.concatenate([d_mu, d_sig, d_rho, [d_nu]])

    def sample(self, theta, rng, n, size=None):
        mu, sig, rho, nu = self.unpack(theta, n)
        chol = np.linalg.cholesky(self._sigma(sig, corr_matrix_from_vector(rho, n)))
        m = 1 if size is None else int(size)
        z = rng.standard_normal((m, n))
        chi = rng.chisquare(nu, size=m)
        out = mu + (z @ chol.T) * np.sqrt(nu / chi)[:, None]
        return out[0] if size is None else out


MULTIVARIATE = {
    cls.label: cls() for cls in (MultivariateNormal, MultivariateStudentT)
}
