import numpy as np
import pytest

from scoredriven.core import Coefficients, GasSpec, simulate, target_kappa


@pytest.fixture(scope="session")
def std_spec():
    return GasSpec(
        dist="std",
        time_varying={"location": True, "scale": True, "shape": False},
    )


@pytest.fixture(scope="session")
def std_coeffs(std_spec):
    kappa = target_kappa(std_spec, [0.9, 0.95, 0.0], [0.1, 1.5, 7.0])
    return Coefficients(kappa=kappa, a=[0.1, 0.4, 0.0], b=[0.9, 0.95, 0.0])


@pytest.fixture(scope="session")
def std_series(std_spec, std_coeffs):
    return simulate(std_spec, std_coeffs, 1000, seed=11).series


def random_theta(dist, n, rng):
    """A random natural parameter vector strictly inside the bounds."""
    if dist == "norm":
        return np.array([rng.uniform(-2, 2), rng.uniform(0.3, 3.0)])
    if dist == "std":
        return np.array(
            [rng.uniform(-2, 2), rng.uniform(0.3, 3.0), rng.uniform(2.5, 30.0)]
        )
    if dist == "sstd":
        return np.array(
            [
                rng.uniform(-2, 2),
                rng.uniform(0.3, 3.0),
                rng.uniform(0.5, 2.0),
                rng.uniform(2.5, 30.0),
            ]
        )
    if dist == "ald":
        return np.array(
            [rng.uniform(-2, 2), rng.uniform(0.3, 3.0), rng.uniform(0.5, 2.0)]
        )
    if dist == "poi":
        return np.array([rng.uniform(0.5, 20.0)])
    if dist == "gamma":
        return np.array([rng.uniform(0.3, 3.0), rng.uniform(0.5, 8.0)])
    if dist == "exp":
        return np.array([rng.uniform(0.2, 5.0)])
    if dist == "beta":
        return np.array([rng.uniform(0.5, 6.0), rng.uniform(0.5, 6.0)])
    if dist in ("mvnorm", "mvt"):
        mu = rng.uniform(-2, 2, n)
        sg = rng.uniform(0.3, 3.0, n)
        from scoredriven.distributions import corr_vector_from_matrix
        from scoredriven.links import correlation_from_angles

        angles = rng.uniform(0.3, np.pi - 0.3, n * (n - 1) // 2)
        rho = corr_vector_from_matrix(correlation_from_angles(angles, n))
        theta = np.concatenate([mu, sg, rho])
        if dist == "mvt":
            theta = np.append(theta, rng.uniform(3.0, 30.0))
        return theta
    raise ValueError(dist)


def fd_gradient(fun, x, step=1e-6):
    """Central finite-difference gradient, relative step."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(len(x)):
        h = step * max(1.0, abs(x[i]))
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (fun(xp) - fun(xm)) / (2.0 * h)
    return g
