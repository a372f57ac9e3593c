"""End-to-end acceptance checks.

Each test pins one externally verifiable property of the package at a
fixed tolerance; numbers quoted in comments are frozen oracle values.
"""

import json
import os
import time
from pathlib import Path

import jsonschema
import numpy as np
import pytest
from referencing import Registry, Resource
from scipy import stats

from scoredriven import cli
from scoredriven import distributions as dists
from scoredriven import estimation as est
from scoredriven import links as lk
from scoredriven import scoring as sc
from scoredriven.core import (
    Coefficients,
    GasSpec,
    gas_filter,
    scaled_score,
    simulate,
    target_kappa,
)

from conftest import random_theta

SCHEMA_DIR = Path(__file__).resolve().parent.parent / "docs" / "schemas"


# ---------------------------------------------------------------------------
# score-gradient agreement, >= 400 points per family, rel err <= 1e-6


def _fd_gradient(fun, x, step=1e-4):
    """Fourth-order central differences; accurate to well below 1e-6."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(len(x)):
        h = step * max(1.0, abs(x[i]))
        f = [fun(np.concatenate([x[:i], [x[i] + k * h], x[i + 1:]]))
             for k in (-2, -1, 1, 2)]
        g[i] = (f[0] - 8.0 * f[1] + 8.0 * f[2] - f[3]) / (12.0 * h)
    return g


@pytest.mark.parametrize(
    "dist,n",
    [("norm", 1), ("std", 1), ("sstd", 1), ("ald", 1), ("poi", 1),
     ("gamma", 1), ("exp", 1), ("beta", 1),
     ("mvnorm", 2), ("mvnorm", 3), ("mvt", 2), ("mvt", 3)],
)
def test_analytic_scores_match_finite_differences(dist, n):
    from scoredriven.distributions.multivariate import corr_matrix_from_vector

    rng = np.random.default_rng(abs(hash((dist, n))) % 2**32)
    checked = 0
    while checked < 400:
        theta = random_theta(dist, n, rng)
        if n == 1:
            # the difference stencil steps 2h to each side; keep every
            # coordinate far enough from its bound that all stencil points
            # are valid parameters
            margin = 3e-4 * np.maximum(1.0, np.abs(theta))
            bounds = np.array(dists.UNIVARIATE[dist].bounds)
            if np.any(theta - margin <= bounds[:, 0]) or np.any(
                theta + margin >= bounds[:, 1]
            ):
                continue
        if n > 1:
            # near-singular correlation matrices make any fixed-step finite
            # difference untrustworthy; keep a curvature margin so the
            # numerical oracle itself stays accurate to well below 1e-6
            rho = theta[2 * n : 2 * n + n * (n - 1) // 2]
            if np.linalg.eigvalsh(corr_matrix_from_vector(rho, n)).min() < 0.15:
                continue
        y = dists.sample(dist, theta, rng, n)
        if n == 1 and not dists.UNIVARIATE[dist].in_interior(np.atleast_1d(y)).all():
            continue
        analytic = dists.score_natural(dist, y, theta, n)
        numeric = _fd_gradient(lambda t: dists.log_density(dist, y, t, n), theta)
        assert np.all(
            np.abs(analytic - numeric) <= 1e-6 * np.maximum(1.0, np.abs(numeric))
        ), f"{dist} n={n} point {checked}"
        # the working-space score must obey the same identity through the links
        links = lk.links_for(dist, n)
        tilde = lk.unmap_params(links, theta)
        jac = lk.jacobian(links, tilde)
        analytic_t = lk.tilde_score(jac, analytic)
        numeric_t = _fd_gradient(
            lambda x: dists.log_density(dist, y, lk.map_params(links, x), n),
            tilde,
        )
        assert np.all(
            np.abs(analytic_t - numeric_t)
            <= 1e-6 * np.maximum(1.0, np.abs(numeric_t))
        )
        checked += 1


# ---------------------------------------------------------------------------
# information matrix equals MC E[score score'] at 10^6 draws, 3 MC SEs


@pytest.mark.parametrize("dist", ["norm", "std", "poi", "gamma", "exp", "beta"])
def test_information_matrix_matches_monte_carlo(dist):
    rng = np.random.default_rng(sum(map(ord, dist)))
    n_draws = 1_000_000
    for point in range(5):
        theta = random_theta(dist, 1, rng)
        ys = dists.sample(dist, theta, rng, size=n_draws)
        d = dists.UNIVARIATE[dist]
        keep = d.in_interior(np.atleast_1d(ys))
        scores = np.atleast_2d(d.score(ys[keep], theta))
        m = keep.sum()
        outer = np.einsum("it,jt->ijt", scores, scores)
        emp = outer.mean(axis=2)
        mc_se = outer.std(axis=2) / np.sqrt(m)
        info = dists.information_natural(dist, theta)
        assert np.all(np.abs(emp - info) <= 3.0 * mc_se + 1e-12), (
            f"{dist} point {point}"
        )


# ---------------------------------------------------------------------------
# scaled score is a martingale difference; unit covariance at gamma = 1/2


def _vectorized_scaled_scores(spec, theta, tilde, ys):
    """Scaled scores for many draws at a fixed state, built from the
    vectorized natural score plus the (constant) jacobian and information."""
    d = dists.UNIVARIATE[spec.dist]
    grads = np.atleast_2d(d.score(ys, theta))
    jac = lk.jacobian(spec.links, tilde)
    tilde_grads = jac.T @ grads
    if spec.gamma == 0.0:
        return tilde_grads
    info_t = lk.tilde_info(jac, dists.information_natural(spec.dist, theta))
    if spec.gamma == 1.0:
        return np.linalg.solve(info_t, tilde_grads)
    vals, vecs = np.linalg.eigh(info_t)
    return ((vecs / np.sqrt(vals)) @ vecs.T) @ tilde_grads


@pytest.mark.parametrize("dist", ["norm", "std"])
@pytest.mark.parametrize("scaling", ["Identity", "InvSqrt", "Inv"])
def test_scaled_score_is_martingale_difference(dist, scaling):
    spec = GasSpec(dist=dist, scaling=scaling,
                   time_varying={"location": True, "scale": True})
    theta = np.array([0.2, 1.3]) if dist == "norm" else np.array([0.2, 1.3, 8.0])
    tilde = lk.unmap_params(spec.links, theta)
    rng = np.random.default_rng(len(dist) + len(scaling))
    n_draws = 1_000_000
    ys = dists.sample(dist, theta, rng, size=n_draws)
    scores = _vectorized_scaled_scores(spec, theta, tilde, ys)
    # the vectorized construction must agree with the filtering primitive
    for y in ys[:50]:
        one = scaled_score(spec, y, tilde)
        np.testing.assert_allclose(
            one, _vectorized_scaled_scores(spec, theta, tilde, np.array([y]))[:, 0],
            rtol=1e-10,
        )
    se = scores.std(axis=1) / np.sqrt(n_draws)
    assert np.all(np.abs(scores.mean(axis=1)) <= 4.0 * se)
    if scaling == "InvSqrt":
        outer = np.einsum("it,jt->ijt", scores, scores)
        cov = outer.mean(axis=2)
        cov_se = outer.std(axis=2) / np.sqrt(n_draws)
        j = scores.shape[0]
        assert np.all(np.abs(cov - np.eye(j)) <= 4.0 * cov_se)


# ---------------------------------------------------------------------------
# link layer round trips and hyperspherical correlation matrices


def test_link_roundtrips_and_correlation_validity():
    rng = np.random.default_rng(404)
    dist_cycle = ["norm", "std", "sstd", "ald", "poi", "gamma", "exp", "beta"]
    for k in range(10_000):
        dist = dist_cycle[k % len(dist_cycle)]
        links = lk.links_for(dist)
        theta = random_theta(dist, 1, rng)
        back = lk.map_params(links, lk.unmap_params(links, theta))
        assert np.all(np.abs(back - theta) <= 1e-10 * np.maximum(1.0, np.abs(theta)))
    for n in (2, 3, 4):
        m = n * (n - 1) // 2
        for _ in range(10_000):
            r = lk.correlation_from_angles(rng.uniform(-6, 6, m), n)
            assert np.all(np.diag(r) == 1.0)
            assert np.all(np.abs(r - r.T) <= 1e-15)
            assert np.linalg.eigvalsh(r).min() >= -1e-12


# ---------------------------------------------------------------------------
# filter correctness: hand-computed single step and exact initialization


def test_filter_single_step_and_initialization():
    spec = GasSpec(dist="std",
                   time_varying={"location": True, "scale": True, "shape": True})
    kappa = np.array([0.05, -0.02, 0.4])
    a = np.array([0.1, 0.15, 0.07])
    b = np.array([0.85, 0.9, 0.7])
    coeffs = Coefficients(kappa=kappa, a=a, b=b)
    y0 = -0.4

    tilde1 = kappa / (1.0 - b)
    assert np.array_equal(
        gas_filter(spec, coeffs, np.array([y0])).tilde_params[0], tilde1
    )

    # hand evaluation of the update: tilde_2 = kappa + A s~ + B tilde_1 with
    # the Student-t score and the exp / modified-logistic link jacobians
    mu = tilde1[0]
    phi = np.exp(tilde1[1])
    nu = 2.01 + (50.0 - 2.01) / (1.0 + np.exp(-tilde1[2]))
    z = (y0 - mu) / phi
    w = 1.0 + z * z / nu
    from scipy.special import digamma

    grad = np.array([
        (nu + 1.0) * z / (phi * nu * w),
        -1.0 / phi + (nu + 1.0) * z * z / (nu * phi * w),
        0.5 * digamma((nu + 1.0) / 2.0) - 0.5 * digamma(nu / 2.0)
        - 0.5 / nu - 0.5 * np.log(w)
        + (nu + 1.0) * z * z / (2.0 * nu * nu * w),
    ])
    jac_diag = np.array([1.0, phi, (nu - 2.01) * (50.0 - nu) / (50.0 - 2.01)])
    expected_next = kappa + a * (jac_diag * grad) + b * tilde1
    out = gas_filter(spec, coeffs, np.array([y0]))
    np.testing.assert_allclose(out.next_tilde, expected_next, atol=1e-12)


# ---------------------------------------------------------------------------
# simulate -> estimate recovery over 100 replications


def test_simulate_estimate_recovery_study():
    start = time.perf_counter()
    spec = GasSpec(dist="std",
                   time_varying={"location": True, "scale": True, "shape": False})
    kappa = target_kappa(spec, [0.9, 0.95, 0.0], [0.1, 1.5, 7.0])
    coeffs = Coefficients(kappa=kappa, a=[0.1, 0.4, 0.0], b=[0.9, 0.95, 0.0])
    b_hat, a_hat, covered = [], [], []
    for seed in range(100):
        y = simulate(spec, coeffs, 5000, seed=seed).series
        fr = est.fit(spec, y)
        se = est.std_errors(fr, y, method="robust")
        b2, se_b2 = fr.coeffs.b[1], se[6]
        b_hat.append(b2)
        a_hat.append(fr.coeffs.a[1])
        covered.append(abs(b2 - 0.95) <= 1.959963984540054 * se_b2)
    elapsed = time.perf_counter() - start
    assert abs(np.median(b_hat) - 0.95) <= 0.05
    assert abs(np.median(a_hat) - 0.4) <= 0.15
    coverage = np.mean(covered)
    assert 0.85 <= coverage <= 0.99
    assert elapsed < 1200.0


# ---------------------------------------------------------------------------
# structural fit outputs: 7 free coefficients and exact AIC/BIC identities


def test_fit_report_count_and_information_criteria():
    spec = GasSpec(dist="std",
                   time_varying={"location": True, "scale": True, "shape": False})
    kappa = target_kappa(spec, [0.9, 0.95, 0.0], [0.1, 1.5, 7.0])
    coeffs = Coefficients(kappa=kappa, a=[0.1, 0.4, 0.0], b=[0.9, 0.95, 0.0])
    y = simulate(spec, coeffs, 800, seed=77).series
    result = est.fit(spec, y)
    assert result.num_coefficients == 7
    assert result.coeff_names == [
        "kappa1", "kappa2", "kappa3", "a1", "a2", "b1", "b2",
    ]
    assert abs(result.aic - (2 * 7 - 2 * result.loglik)) <= 1e-10
    assert abs(result.bic - (7 * np.log(800) - 2 * result.loglik)) <= 1e-10


# ---------------------------------------------------------------------------
# wCRPS oracle and tail decomposition


def test_wcrps_normal_oracle_and_tail_decomposition():
    # closed-form CRPS of the standard normal at y = 0: 2 phi(0) - 1/sqrt(pi)
    closed_form = 2.0 * stats.norm.pdf(0.0) - 1.0 / np.sqrt(np.pi)
    assert round(closed_form, 5) == 0.23369
    _, avg = sc.wcrps([stats.norm.cdf], [0.0], sc.WeightSpec("uniform"),
                      -10.0, 10.0, 100_000)
    assert abs(avg - closed_form) <= 1e-4

    rng = np.random.default_rng(808)
    ys = rng.normal(0, 1, 25)
    cdfs = [stats.norm.cdf] * len(ys)
    pu, _ = sc.wcrps(cdfs, ys, sc.WeightSpec("uniform"), -10, 10, 1000)
    pr, _ = sc.wcrps(cdfs, ys, sc.WeightSpec("tail_r"), -10, 10, 1000)
    pl, _ = sc.wcrps(cdfs, ys, sc.WeightSpec("tail_l"), -10, 10, 1000)
    assert np.all(np.abs(pu - (pr + pl)) <= 1e-12)


# ---------------------------------------------------------------------------
# Diebold-Mariano size calibration under the null


def test_dm_size_calibration_and_antisymmetry():
    rng = np.random.default_rng(909)
    h_len = 3000
    rejections = 0
    trials = 10_000
    for _ in range(trials):
        d = rng.standard_normal(h_len)
        result = sc.dm_test(d, np.zeros(h_len))
        if abs(result.statistic) > 1.959963984540054:
            rejections += 1
    rate = rejections / trials
    assert 0.03 <= rate <= 0.07

    a = rng.standard_normal(200)
    b = rng.standard_normal(200)
    assert sc.dm_test(a, b).statistic == -sc.dm_test(b, a).statistic


# ---------------------------------------------------------------------------
# no lookahead in the rolling engine


def test_roll_has_no_lookahead():
    from scoredriven.forecasting import roll

    spec = GasSpec(dist="norm", time_varying={"location": False, "scale": True})
    kappa = target_kappa(spec, [0.0, 0.9], [0.0, 1.0])
    coeffs = Coefficients(kappa=kappa, a=[0.0, 0.08], b=[0.0, 0.9])
    y = simulate(spec, coeffs, 360, seed=10).series
    fl = 36
    base = roll(spec, y, forecast_length=fl, refit_every=12)
    t_in = len(y) - fl
    for k in (0, 7, 18, 35):  # positions of the perturbed future observation
        mutated = y.copy()
        mutated[t_in + k] += 9.0
        alt = roll(spec, mutated, forecast_length=fl, refit_every=12)
        # predictions at steps 0..k use only data before the mutation
        assert np.array_equal(
            base.predicted_params[: k + 1], alt.predicted_params[: k + 1]
        )
        assert np.array_equal(base.log_scores[:k], alt.log_scores[:k])


# ---------------------------------------------------------------------------
# CLI pipeline: byte-reproducible and schema-valid


def _load_schema(name):
    return json.loads((SCHEMA_DIR / name).read_text())


def _validate(doc, name):
    registry = Registry().with_resources(
        (s, Resource.from_contents(_load_schema(s)))
        for s in os.listdir(SCHEMA_DIR)
    )
    jsonschema.validate(doc, _load_schema(name), registry=registry)


def _run_pipeline(root):
    # run with the output directory as cwd so every recorded path is the
    # same relative name in both runs and the JSON bytes can match exactly
    root.mkdir(exist_ok=True)
    prev = os.getcwd()
    os.chdir(root)
    try:
        files = {
            "sim": root / "sim.json",
            "fit": root / "fit.json",
            "forecast": root / "forecast.json",
            "roll": root / "roll.json",
            "backtest": root / "backtest.json",
        }
        base = ["--dist", "norm", "--gas-par", "location=false,scale=true"]
        assert cli.main(
            ["simulate", *base, "--theta-star", "0.0,1.0", "--a-diag",
             "0,0.08", "--b-diag", "0,0.9", "--length", "300", "--seed", "4",
             "--series-out", "sim.csv", "--out", "sim.json"]
        ) == 0
        assert cli.main(["fit", "sim.csv", *base, "--out", "fit.json"]) == 0
        assert cli.main(
            ["forecast", "sim.csv", *base, "--horizon", "4", "--draws", "500",
             "--seed", "4", "--out", "forecast.json"]
        ) == 0
        assert cli.main(
            ["roll", "sim.csv", *base, "--forecast-length", "24",
             "--refit-every", "24", "--out", "roll.json"]
        ) == 0
        assert cli.main(
            ["backtest", "roll.json", "--lower", "-8", "--upper", "8",
             "--grid-k", "500", "--out", "backtest.json"]
        ) == 0
    finally:
        os.chdir(prev)
    return root / "sim.csv", files


def test_cli_pipeline_reproducible_and_schema_valid(tmp_path):
    start = time.perf_counter()
    csv1, files1 = _run_pipeline(tmp_path / "run1")
    csv2, files2 = _run_pipeline(tmp_path / "run2")
    assert csv1.read_bytes() == csv2.read_bytes()
    for key in files1:
        assert files1[key].read_bytes() == files2[key].read_bytes(), key
    _validate(json.loads(files1["sim"].read_text()), "simulate.json")
    _validate(json.loads(files1["fit"].read_text()), "fit.json")
    _validate(json.loads(files1["forecast"].read_text()), "forecast.json")
    _validate(json.loads(files1["roll"].read_text()), "roll.json")
    _validate(json.loads(files1["backtest"].read_text()), "backtest.json")
    assert time.perf_counter() - start < 120.0
