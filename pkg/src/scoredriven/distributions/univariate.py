"""Univariate conditional densities in the natural parameter space.

Each distribution exposes log-density, analytic score, Fisher information
(where an inverse-information scaling is supported), sampling, moments,
cdf and quantile. Scores are differentiated analytically and validated
against finite differences in the test suite.
"""

import numpy as np
from scipy import special, stats

from ..errors import (
    MomentUndefined,
    ParamOutOfBounds,
    ScalingUnsupported,
    SupportViolation,
)

IDENTITY = "Identity"
INV = "Inv"
INVSQRT = "InvSqrt"

_SQRT2 = np.sqrt(2.0)


def _check_params(dist, theta):
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (len(dist.roles),):
        raise ParamOutOfBounds(
            f"{dist.label}: expected {len(dist.roles)} parameters, got shape {theta.shape}"
        )
    for i, (lo, hi) in enumerate(dist.bounds):
        if not (lo < theta[i] < hi) or not np.isfinite(theta[i]):
            raise ParamOutOfBounds(
                f"{dist.label}: parameter {dist.roles[i]}={theta[i]} outside ({lo}, {hi})"
            )
    return theta


class UnivariateDistribution:
    """Base holding registry metadata; subclasses implement the math."""

    label = ""
    name = ""
    roles = ()
    scalings = (IDENTITY,)
    bounds = ()
    discrete = False

    def check_params(self, theta):
        return _check_params(self, theta)

    def in_support(self, y):
        return np.isfinite(y)

    def in_interior(self, y):
        """Support points where the score is defined (boundaries excluded)."""
        return self.in_support(y)

    def check_support(self, y, index=None, interior=False):
        pred = self.in_interior if interior else self.in_support
        ok = pred(np.asarray(y, dtype=float))
        if not np.all(ok):
            raise SupportViolation(
                f"{self.label}: observation outside support", index=index
            )

    def information(self, theta):
        raise ScalingUnsupported(
            f"{self.label}: information matrix only available for "
            f"distributions supporting Inv/InvSqrt scaling"
        )

    def moments(self, theta):
        raise MomentUndefined(f"{self.label}: moments not available")


class Normal(UnivariateDistribution):
    label = "norm"
    name = "Gaussian"
    roles = ("location", "scale")
    scalings = (IDENTITY, INV, INVSQRT)
    bounds = ((-np.inf, np.inf), (0.0, np.inf))

    def logpdf(self, y, theta):
        mu, sg = theta
        z = (np.asarray(y, dtype=float) - mu) / sg
        return -0.5 * np.log(2.0 * np.pi) - np.log(sg) - 0.5 * z * z

    def score(self, y, theta):
        mu, sg = theta
        z = (np.asarray(y, dtype=float) - mu) / sg
        return np.stack([z / sg, (z * z - 1.0) / sg])

    def information(self, theta):
        _, sg = theta
        return np.diag([1.0 / sg**2, 2.0 / sg**2])

    def sample(self, theta, rng, size=None):
        mu, sg = theta
        return rng.normal(mu, sg, size=size)

    def moments(self, theta):
        mu, sg = theta
        return mu, sg**2

    def cdf(self, theta, x):
        mu, sg = theta
        return stats.norm.cdf(x, loc=mu, scale=sg)

    def ppf(self, theta, p):
        mu, sg = theta
        return stats.norm.ppf(p, loc=mu, scale=sg)


class StudentT(UnivariateDistribution):
    """Student-t with location, scale (not standard deviation) and
    degrees of freedom; variance is nu/(nu-2) * scale^2."""

    label = "std"
    name = "Student-t"
    roles = ("location", "scale", "shape")
    scalings = (IDENTITY, INV, INVSQRT)
    bounds = ((-np.inf, np.inf), (0.0, np.inf), (2.01, 50.0))

    def logpdf(self, y, theta):
        mu, phi, nu = theta
        z = (np.asarray(y, dtype=float) - mu) / phi
        return (
            special.gammaln((nu + 1.0) / 2.0)
            - special.gammaln(nu / 2.0)
            - 0.5 * np.log(np.pi * nu)
            - np.log(phi)
            - (nu + 1.0) / 2.0 * np.log1p(z * z / nu)
        )

    def score(self, y, theta):
        mu, phi, nu = theta
        z = (np.asarray(y, dtype=float) - mu) / phi
        w = 1.0 + z * z / nu
        dmu = (nu + 1.0) * z / (phi * nu * w)
        dphi = -1.0 / phi + (nu + 1.0) * z * z / (nu * phi * w)
        dnu = (
            0.5 * special.digamma((nu + 1.0) / 2.0)
            - 0.5 * special.digamma(nu / 2.0)
            - 0.5 / nu
            - 0.5 * np.log(w)
            + (nu + 1.0) * z * z / (2.0 * nu * nu * w)
        )
        return np.stack([dmu, dphi, dnu + np.zeros_like(z)])

    def information(self, theta):
        _, phi, nu = theta
        i_mm = (nu + 1.0) / ((nu + 3.0) * phi**2)
        i_pp = 2.0 * nu / ((nu + 3.0) * phi**2)
        i_pn = -2.0 / (phi * (nu + 1.0) * (nu + 3.0))
        i_nn = 0.25 * (
            special.polygamma(1, nu / 2.0) - special.polygamma(1, (nu + 1.0) / 2.0)
        ) - (nu + 5.0) / (2.0 * nu * (nu + 1.0) * (nu + 3.0))
        return np.array(
            [[i_mm, 0.0, 0.0], [0.0, i_pp, i_pn], [0.0, i_pn, i_nn]]
        )

    def sample(self, theta, rng, size=None):
        mu, phi, nu = theta
        return mu + phi * rng.standard_t(nu, size=size)

    def moments(self, theta):
        mu, phi, nu = theta
        return mu, nu / (nu - 2.0) * phi**2

    def cdf(self, theta, x):
        mu, phi, nu = theta
        return stats.t.cdf((np.asarray(x, dtype=float) - mu) / phi, nu)

    def ppf(self, theta, p):
        mu, phi, nu = theta
        return mu + phi * stats.t.ppf(p, nu)


def _fs_skew_helpers(xi, nu):
    """Constants of the skew construction reparametrised to mean/sd."""
    s = np.sqrt(nu / (nu - 2.0))
    m1 = (
        2.0
        * np.sqrt(nu - 2.0)
        * np.exp(special.gammaln((nu + 1.0) / 2.0) - special.gammaln(nu / 2.0))
        / (np.sqrt(np.pi) * (nu - 1.0))
    )
    m = m1 * (xi - 1.0 / xi)
    e2 = xi * xi + 1.0 / (xi * xi) - 1.0
    d = np.sqrt(e2 - m * m)
    return s, m1, m, d


class SkewStudentT(UnivariateDistribution):
    """Skewed Student-t (two-piece skewing of the symmetric t), rescaled so
    that location and scale equal the mean and standard deviation."""

    label = "sstd"
    name = "Skew Student-t"
    roles = ("location", "scale", "skewness", "shape")
    scalings = (IDENTITY,)
    bounds = (
        (-np.inf, np.inf),
        (0.0, np.inf),
        (0.1, 2.0),
        (2.01, 50.0),
    )

    def logpdf(self, y, theta):
        mu, sd, xi, nu = theta
        s, _, m, d = _fs_skew_helpers(xi, nu)
        z = m + d * (np.asarray(y, dtype=float) - mu) / sd
        u = np.where(z >= 0.0, z / xi, z * xi)
        w = s * u
        logt = (
            special.gammaln((nu + 1.0) / 2.0)
            - special.gammaln(nu / 2.0)
            - 0.5 * np.log(np.pi * nu)
            - (nu + 1.0) / 2.0 * np.log1p(w * w / nu)
        )
        return np.log(2.0 / (xi + 1.0 / xi)) + np.log(d) - np.log(sd) + np.log(s) + logt

    def score(self, y, theta):
        mu, sd, xi, nu = theta
        s, m1, m, d = _fs_skew_helpers(xi, nu)
        x = (np.asarray(y, dtype=float) - mu) / sd
        z = m + d * x
        pos = z >= 0.0
        u = np.where(pos, z / xi, z * xi)
        du_dz = np.where(pos, 1.0 / xi, xi)
        w = s * u
        dlt_dw = -(nu + 1.0) * w / (nu + w * w)

        # skewness derivatives of the standardisation constants
        m_xi = m1 * (1.0 + 1.0 / (xi * xi))
        e2_xi = 2.0 * xi - 2.0 / xi**3
        d_xi = (e2_xi - 2.0 * m * m_xi) / (2.0 * d)
        c_xi = -(1.0 - 1.0 / (xi * xi)) / (xi + 1.0 / xi)
        z_xi = m_xi + d_xi * x
        u_xi = np.where(pos, z_xi / xi - z / (xi * xi), z_xi * xi + z)

        # shape derivatives
        dlog_m1 = (
            0.5 / (nu - 2.0)
            + 0.5 * special.digamma((nu + 1.0) / 2.0)
            - 1.0 / (nu - 1.0)
            - 0.5 * special.digamma(nu / 2.0)
        )
        m_nu = m1 * dlog_m1 * (xi - 1.0 / xi)
        d_nu = -m * m_nu / d
        s_nu = 0.5 * s * (1.0 / nu - 1.0 / (nu - 2.0))
        z_nu = m_nu + d_nu * x
        u_nu = du_dz * z_nu
        dlt_dnu = (
            0.5 * special.digamma((nu + 1.0) / 2.0)
            - 0.5 * special.digamma(nu / 2.0)
            - 0.5 / nu
            - 0.5 * np.log1p(w * w / nu)
            + (nu + 1.0) * w * w / (2.0 * nu * (nu + w * w))
        )

        dmu = dlt_dw * s * du_dz * (-d / sd)
        dsd = -1.0 / sd + dlt_dw * s * du_dz * (-d * x / sd)
        dxi = c_xi + d_xi / d + dlt_dw * s * u_xi
        dnu = d_nu / d + s_nu / s + dlt_dnu + dlt_dw * (s_nu * u + s * u_nu)
        return np.stack([dmu, dsd, dxi + np.zeros_like(z), dnu])

    def sample(self, theta, rng, size=None):
        return self.ppf(theta, rng.uniform(size=size))

    def moments(self, theta):
        mu, sd = theta[0], theta[1]
        return mu, sd**2

    def cdf(self, theta, x):
        mu, sd, xi, nu = theta
        s, _, m, d = _fs_skew_helpers(xi, nu)
        z = m + d * (np.asarray(x, dtype=float) - mu) / sd
        c = 2.0 / (xi + 1.0 / xi)
        lower = c / xi * stats.t.cdf(s * z * xi, nu)
        upper = 1.0 - c * xi * stats.t.sf(s * z / xi, nu)
        return np.where(z < 0.0, lower, upper)

    def ppf(self, theta, p):
        mu, sd, xi, nu = theta
        p = np.asarray(p, dtype=float)
        s, _, m, d = _fs_skew_helpers(xi, nu)
        c = 2.0 / (xi + 1.0 / xi)
        p0 = 1.0 / (1.0 + xi * xi)
        z_lo = stats.t.ppf(np.minimum(p / (c / xi), 1.0), nu) / (s * xi)
        z_hi = xi / s * stats.t.isf(np.minimum((1.0 - p) / (c * xi), 1.0), nu)
        z = np.where(p < p0, z_lo, z_hi)
        return mu + sd * (z - m) / d


class AsymmetricLaplace(UnivariateDistribution):
    """Asymmetric Laplace in the (location, scale, skew-kappa)
    parametrization; skew kappa = 1 recovers the symmetric Laplace."""

    label = "ald"
    name = "Asymmetric Laplace"
    roles = ("location", "scale", "skewness")
    scalings = (IDENTITY, INV, INVSQRT)
    bounds = ((-np.inf, np.inf), (0.0, np.inf), (0.0, np.inf))

    def logpdf(self, y, theta):
        th, sg, kp = theta
        u = np.asarray(y, dtype=float) - th
        rate = np.where(u >= 0.0, kp, 1.0 / kp)
        return (
            0.5 * np.log(2.0)
            - np.log(sg)
            + np.log(kp / (1.0 + kp * kp))
            - _SQRT2 / sg * np.abs(u) * rate
        )

    def score(self, y, theta):
        th, sg, kp = theta
        u = np.asarray(y, dtype=float) - th
        pos = u >= 0.0
        au = np.abs(u)
        rate = np.where(pos, kp, 1.0 / kp)
        dth = np.where(pos, _SQRT2 * kp / sg, -_SQRT2 / (sg * kp))
        dsg = -1.0 / sg + _SQRT2 * au * rate / sg**2
        c_kp = 1.0 / kp - 2.0 * kp / (1.0 + kp * kp)
        dkp = c_kp + np.where(pos, -_SQRT2 * u / sg, -_SQRT2 * u / (sg * kp * kp))
        return np.stack([dth, dsg, dkp])

    def information(self, theta):
        # scores are affine in |y - location| on each side of the location,
        # so the expectation of the score outer product has a closed form
        _, sg, kp = theta
        p_r = 1.0 / (1.0 + kp * kp)
        p_l = kp * kp / (1.0 + kp * kp)
        lam_r = _SQRT2 * kp / sg
        lam_l = _SQRT2 / (sg * kp)
        er1, er2 = p_r / lam_r, 2.0 * p_r / lam_r**2
        el1, el2 = p_l / lam_l, 2.0 * p_l / lam_l**2
        c_kp = 1.0 / kp - 2.0 * kp / (1.0 + kp * kp)
        # score i on right side: a_r[i] + b_r[i]*u; left: a_l[i] + b_l[i]*v
        a_r = np.array([_SQRT2 * kp / sg, -1.0 / sg, c_kp])
        b_r = np.array([0.0, _SQRT2 * kp / sg**2, -_SQRT2 / sg])
        a_l = np.array([-_SQRT2 / (sg * kp), -1.0 / sg, c_kp])
        b_l = np.array([0.0, _SQRT2 / (kp * sg**2), _SQRT2 / (sg * kp * kp)])
        info = (
            np.outer(a_r, a_r) * p_r
            + (np.outer(a_r, b_r) + np.outer(b_r, a_r)) * er1
            + np.outer(b_r, b_r) * er2
            + np.outer(a_l, a_l) * p_l
            + (np.outer(a_l, b_l) + np.outer(b_l, a_l)) * el1
            + np.outer(b_l, b_l) * el2
        )
        return info

    def sample(self, theta, rng, size=None):
        return self.ppf(theta, rng.uniform(size=size))

    def moments(self, theta):
        th, sg, kp = theta
        mean = th + sg / _SQRT2 * (1.0 / kp - kp)
        e2 = sg**2 * (1.0 / kp**2 + kp**4) / (1.0 + kp * kp)
        return mean, e2 - (mean - th) ** 2

    def cdf(self, theta, x):
        th, sg, kp = theta
        u = np.asarray(x, dtype=float) - th
        lower = kp * kp / (1.0 + kp * kp) * np.exp(_SQRT2 * u / (sg * kp))
        upper = 1.0 - 1.0 / (1.0 + kp * kp) * np.exp(-_SQRT2 * kp * u / sg)
        return np.where(u < 0.0, lower, upper)

    def ppf(self, theta, p):
        th, sg, kp = theta
        p = np.asarray(p, dtype=float)
        p0 = kp * kp / (1.0 + kp * kp)
        with np.errstate(divide="ignore"):
            lower = th + sg * kp / _SQRT2 * np.log(p / p0)
            upper = th - sg / (_SQRT2 * kp) * np.log((1.0 - p) * (1.0 + kp * kp))
        return np.where(p < p0, lower, upper)


class Poisson(UnivariateDistribution):
    label = "poi"
    name = "Poisson"
    roles = ("location",)
    scalings = (IDENTITY, INV, INVSQRT)
    bounds = ((0.0, np.inf),)
    discrete = True

    def in_support(self, y):
        y = np.asarray(y, dtype=float)
        return np.isfinite(y) & (y >= 0) & (np.mod(y, 1.0) == 0)

    def logpdf(self, y, theta):
        (lam,) = theta
        y = np.asarray(y, dtype=float)
        return y * np.log(lam) - lam - special.gammaln(y + 1.0)

    def score(self, y, theta):
        (lam,) = theta
        return np.stack([np.asarray(y, dtype=float) / lam - 1.0])

    def information(self, theta):
        (lam,) = theta
        return np.array([[1.0 / lam]])

    def sample(self, theta, rng, size=None):
        (lam,) = theta
        if size is None:
            return float(rng.poisson(lam))
        return rng.poisson(lam, size=size).astype(float)

    def moments(self, theta):
        (lam,) = theta
        return lam, lam

    def cdf(self, theta, x):
        (lam,) = theta
        return stats.poisson.cdf(x, lam)

    def ppf(self, theta, p):
        (lam,) = theta
        return stats.poisson.ppf(p, lam).astype(float)


class Gamma(UnivariateDistribution):
    """Gamma with (scale, shape): density y^(k-1) exp(-y/s) / (Gamma(k) s^k)."""

    label = "gamma"
    name = "Gamma"
    roles = ("scale", "shape")
    scalings = (IDENTITY, INV, INVSQRT)
    bounds = ((0.0, np.inf), (0.0, np.inf))

    def in_support(self, y):
        y = np.asarray(y, dtype=float)
        return np.isfinite(y) & (y >= 0)

    def in_interior(self, y):
        y = np.asarray(y, dtype=float)
        return np.isfinite(y) & (y > 0)

    def logpdf(self, y, theta):
        sc, k = theta
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (k - 1.0) * np.log(y) - y / sc - special.gammaln(k) - k * np.log(sc)
        if k == 1.0:
            out = np.where(y == 0.0, -np.log(sc), out)
        return out

    def score(self, y, theta):
        sc, k = theta
        y = np.asarray(y, dtype=float)
        ds = y / sc**2 - k / sc
        dk = np.log(y) - np.log(sc) - special.digamma(k)
        return np.stack([ds, dk])

    def information(self, theta):
        sc, k = theta
        return np.array([[k / sc**2, 1.0 / sc], [1.0 / sc, special.polygamma(1, k)]])

    def sample(self, theta, rng, size=None):
        sc, k = theta
        return rng.gamma(k, sc, size=size)

    def moments(self, theta):
        sc, k = theta
        return k * sc, k * sc**2

    def cdf(self, theta, x):
        sc, k = theta
        return stats.gamma.cdf(x, k, scale=sc)

    def ppf(self, theta, p):
        sc, k = theta
        return stats.gamma.ppf(p, k, scale=sc)


class Exponential(UnivariateDistribution):
    """Exponential in the rate parametrization ('location' = rate)."""

    label = "exp"
    name = "Exponential"
    roles = ("location",)
    scalings = (IDENTITY, INV, INVSQRT)
    bounds = ((0.0, np.inf),)

    def in_support(self, y):
        y = np.asarray(y, dtype=float)
        return np.isfinite(y) & (y >= 0)

    def in_interior(self, y):
        y = np.asarray(y, dtype=float)
        return np.isfinite(y) & (y > 0)

    def logpdf(self, y, theta):
        (lam,) = theta
        return np.log(lam) - lam * np.asarray(y, dtype=float)

    def score(self, y, theta):
        (lam,) = theta
        return np.stack([1.0 / lam - np.asarray(y, dtype=float)])

    def information(self, theta):
        (lam,) = theta
        return np.array([[1.0 / lam**2]])

    def sample(self, theta, rng, size=None):
        (lam,) = theta
        return rng.exponential(1.0 / lam, size=size)

    def moments(self, theta):
        (lam,) = theta
        return 1.0 / lam, 1.0 / lam**2

    def cdf(self, theta, x):
        (lam,) = theta
        return stats.expon.cdf(x, scale=1.0 / lam)

    def ppf(self, theta, p):
        (lam,) = theta
        return stats.expon.ppf(p, scale=1.0 / lam)


class Beta(UnivariateDistribution):
    """Beta distribution; 'shape' is alpha and 'scale' is beta."""

    label = "beta"
    name = "Beta"
    roles = ("scale", "shape")
    scalings = (IDENTITY, INV, INVSQRT)
    bounds = ((0.0, np.inf), (0.0, np.inf))

    def in_support(self, y):
        y = np.asarray(y, dtype=float)
        return np.isfinite(y) & (y >= 0) & (y <= 1)

    def in_interior(self, y):
        y = np.asarray(y, dtype=float)
        return np.isfinite(y) & (y > 0) & (y < 1)

    def logpdf(self, y, theta):
        b, a = theta
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = (
                (a - 1.0) * np.log(y)
                + (b - 1.0) * np.log1p(-y)
                - special.betaln(a, b)
            )
        if a == 1.0:
            out = np.where(y == 0.0, -special.betaln(a, b), out)
        if b == 1.0:
            out = np.where(y == 1.0, -special.betaln(a, b), out)
        return out

    def score(self, y, theta):
        b, a = theta
        y = np.asarray(y, dtype=float)
        psi_ab = special.digamma(a + b)
        db = np.log1p(-y) - special.digamma(b) + psi_ab
        da = np.log(y) - special.digamma(a) + psi_ab
        return np.stack([db, da])

    def information(self, theta):
        b, a = theta
        t_ab = special.polygamma(1, a + b)
        return np.array(
            [
                [special.polygamma(1, b) - t_ab, -t_ab],
                [-t_ab, special.polygamma(1, a) - t_ab],
            ]
        )

    def sample(self, theta, rng, size=None):
        b, a = theta
        return rng.beta(a, b, size=size)

    def moments(self, theta):
        b, a = theta
        mean = a / (a + b)
        return mean, a * b / ((a + b) ** 2 * (a + b + 1.0))

    def cdf(self, theta, x):
        b, a = theta
        return stats.beta.cdf(x, a, b)

    def ppf(self, theta, p):
        b, a = theta
        return stats.beta.ppf(p, a, b)


UNIVARIATE = {
    cls.label: cls()
    for cls in (
        Normal,
        StudentT,
        SkewStudentT,
        AsymmetricLaplace,
        Poisson,
        Gamma,
        Exponential,
        Beta,
    )
}
