"""Rolling density-forecast comparison between two specifications.

Data come from a Student-t model with time-varying scale. A Gaussian
competitor with the same dynamics is fit to the same series. Both are
run through the rolling one-step-ahead engine and compared on log score
and weighted CRPS, with a Diebold-Mariano test on the log scores.
"""

import numpy as np

from scoredriven import (
    Coefficients,
    GasSpec,
    backtest_density,
    dm_test,
    roll,
    simulate,
    target_kappa,
)

tv = {"location": False, "scale": True, "shape": False}
spec_t = GasSpec(dist="std", time_varying=tv)
spec_n = GasSpec(dist="norm",
                 time_varying={"location": False, "scale": True})

kappa = target_kappa(spec_t, [0.0, 0.95, 0.0], [0.0, 1.0, 5.0])
coeffs = Coefficients(kappa=kappa, a=[0.0, 0.08, 0.0], b=[0.0, 0.95, 0.0])
y = simulate(spec_t, coeffs, 1500, seed=12).series

L = 250
roll_t = roll(spec_t, y, forecast_length=L, refit_every=50)
roll_n = roll(spec_n, y, forecast_length=L, refit_every=50)

bt_t = backtest_density(roll_t, spec_t, lower=-12.0, upper=12.0)
bt_n = backtest_density(roll_n, spec_n, lower=-12.0, upper=12.0)

print(f"out-of-sample points: {L}, refits: {len(roll_t.refit_indices)}")
print(f"{'metric':14s} {'student-t':>10s} {'gaussian':>10s}")
print(f"{'avg NLS':14s} {bt_t.average_nls:10.4f} {bt_n.average_nls:10.4f}")
for profile in ("uniform", "center", "tails", "tail_r", "tail_l"):
    print(f"{'wCRPS ' + profile:14s} "
          f"{bt_t.average_wcrps[profile]:10.4f} "
          f"{bt_n.average_wcrps[profile]:10.4f}")

# negated log scores are losses; negative statistic favors the t model
dm = dm_test(-np.asarray(roll_t.log_scores), -np.asarray(roll_n.log_scores))
print(f"DM on log scores: stat = {dm.statistic:.3f}, "
      f"p = {dm.p_value:.4f}, bandwidth = {dm.bandwidth}")
