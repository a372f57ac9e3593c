import numpy as np
import pytest

from scoredriven import distributions as dists
from scoredriven.errors import (
    DimensionUnsupported,
    MultivariateUnsupported,
    ScalingUnsupported,
    SupportViolation,
    UnknownDistribution,
)

from conftest import fd_gradient, random_theta

UNIVARIATE = ["norm", "std", "sstd", "ald", "poi", "gamma", "exp", "beta"]
CONTINUOUS = ["norm", "std", "sstd", "ald", "gamma", "exp", "beta"]


@pytest.mark.parametrize("dist", UNIVARIATE)
def test_score_matches_fd_gradient(dist):
    rng = np.random.default_rng(hash(dist) % 2**32)
    for _ in range(50):
        theta = random_theta(dist, 1, rng)
        y = dists.sample(dist, theta, rng)
        d = dists.UNIVARIATE[dist]
        if not d.in_interior(np.atleast_1d(y)).all():
            continue
        analytic = dists.score_natural(dist, y, theta)
        numeric = fd_gradient(lambda t: dists.log_density(dist, y, t), theta)
        np.testing.assert_allclose(analytic, numeric, rtol=2e-5, atol=2e-7)


@pytest.mark.parametrize("dist", ["mvnorm", "mvt"])
@pytest.mark.parametrize("n", [2, 3])
def test_multivariate_score_matches_fd_gradient(dist, n):
    rng = np.random.default_rng(n * 101)
    for _ in range(25):
        theta = random_theta(dist, n, rng)
        y = dists.sample(dist, theta, rng, n)
        analytic = dists.score_natural(dist, y, theta, n)
        numeric = fd_gradient(lambda t: dists.log_density(dist, y, t, n), theta)
        np.testing.assert_allclose(analytic, numeric, rtol=5e-5, atol=5e-7)


@pytest.mark.parametrize("dist", ["norm", "std", "poi", "gamma", "exp", "beta"])
def test_information_is_symmetric_psd(dist):
    rng = np.random.default_rng(7)
    for _ in range(20):
        theta = random_theta(dist, 1, rng)
        info = dists.information_natural(dist, theta)
        np.testing.assert_allclose(info, info.T, atol=1e-12)
        assert np.linalg.eigvalsh(info).min() > 0


@pytest.mark.parametrize("dist", ["norm", "std", "poi", "gamma", "exp", "beta"])
def test_information_matches_score_outer_product(dist):
    # small-sample version of the Fisher identity E[ss'] = I(theta)
    rng = np.random.default_rng(13)
    theta = random_theta(dist, 1, rng)
    n_draws = 200_000
    ys = dists.sample(dist, theta, rng, size=n_draws)
    d = dists.UNIVARIATE[dist]
    keep = d.in_interior(np.atleast_1d(ys))
    scores = np.atleast_2d(d.score(ys[keep], theta))
    emp = scores @ scores.T / keep.sum()
    info = dists.information_natural(dist, theta)
    outer = np.einsum("it,jt->ijt", scores, scores)
    mc_se = outer.std(axis=2) / np.sqrt(keep.sum())
    assert np.all(np.abs(emp - info) <= 5.0 * mc_se + 1e-10)


@pytest.mark.parametrize("dist", UNIVARIATE)
def test_moments_match_simulation(dist):
    rng = np.random.default_rng(29)
    theta = random_theta(dist, 1, rng)
    mean, var = dists.moments(dist, theta)
    ys = dists.sample(dist, theta, rng, size=200_000)
    se_mean = ys.std() / np.sqrt(len(ys))
    assert abs(ys.mean() - mean) <= 6.0 * se_mean + 1e-8
    assert abs(ys.var() - var) <= 0.05 * var + 6.0 * se_mean


@pytest.mark.parametrize("dist", CONTINUOUS)
def test_cdf_ppf_roundtrip(dist):
    rng = np.random.default_rng(31)
    theta = random_theta(dist, 1, rng)
    for p in (0.01, 0.25, 0.5, 0.75, 0.99):
        q = dists.quantile(dist, theta, p)
        assert dists.cdf(dist, theta, q) == pytest.approx(p, abs=1e-8)


@pytest.mark.parametrize("dist", UNIVARIATE)
def test_samples_stay_in_support(dist):
    rng = np.random.default_rng(37)
    theta = random_theta(dist, 1, rng)
    ys = dists.sample(dist, theta, rng, size=5000)
    assert dists.UNIVARIATE[dist].in_support(np.atleast_1d(ys)).all()


def test_unknown_distribution_rejected():
    with pytest.raises(UnknownDistribution):
        dists.dist_info("snorm")


def test_dimension_limits():
    with pytest.raises(DimensionUnsupported):
        dists.dist_info("mvnorm", 5)
    with pytest.raises(DimensionUnsupported):
        dists.dist_info("std", 2)
    info = dists.dist_info("mvt", 3)
    assert info.num_params == 10


def test_multivariate_quantile_unsupported():
    theta = random_theta("mvnorm", 2, np.random.default_rng(0))
    with pytest.raises(MultivariateUnsupported):
        dists.quantile("mvnorm", theta, 0.5, 2)


def test_multivariate_information_unsupported():
    theta = random_theta("mvnorm", 2, np.random.default_rng(0))
    with pytest.raises(ScalingUnsupported):
        dists.information_natural("mvnorm", theta, 2)


def test_score_at_boundary_rejected():
    with pytest.raises(SupportViolation):
        dists.score_natural("gamma", 0.0, np.array([1.0, 2.0]))
    with pytest.raises(SupportViolation):
        dists.score_natural("beta", 1.0, np.array([2.0, 2.0]))


def test_registry_lists_ten_families():
    labels = dists.available_distributions()
    assert labels == sorted(
        ["norm", "std", "sstd", "ald", "poi", "gamma", "exp", "beta"]
    ) + sorted(["mvnorm", "mvt"])
