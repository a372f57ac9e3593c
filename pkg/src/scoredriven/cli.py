"""Command-line front end: CSV ingestion, model configuration and JSON
emission for the fit / simulate / forecast / roll / backtest / dm workflows.

Exit codes: 0 success, 2 input or parse errors, 3 domain errors. Errors are
emitted as JSON objects on standard error.
"""

import argparse
import csv
import json
import sys
from datetime import date

import numpy as np

from . import distributions as dists
from . import estimation, forecasting, scoring
from .core import Coefficients, GasSpec, simulate, target_kappa
from .errors import ScoreDrivenError, UnknownDistribution

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_DOMAIN = 3

_CONFIG_KEYS = {
    "dist": str,
    "dim": int,
    "scaling": str,
    "gas_par": str,
    "scalar_parameters": bool,
    "column": str,
    "horizon": int,
    "draws": int,
    "return_draws": bool,
    "forecast_length": int,
    "refit_every": int,
    "refit_window": str,
    "lower": float,
    "upper": float,
    "grid_k": int,
    "weight_a": float,
    "weight_b": float,
    "seed": int,
    "length": int,
    "kappa": str,
    "a_diag": str,
    "b_diag": str,
    "theta_star": str,
    "max_iterations": int,
    "gradient_tolerance": float,
    "step_tolerance": float,
}


class InputError(Exception):
    pass


def _parse_bool(text):
    t = str(text).strip().lower()
    if t in ("true", "1", "yes"):
        return True
    if t in ("false", "0", "no"):
        return False
    raise InputError(f"expected a boolean, got {text!r}")


def read_config_file(path):
    """key=value lines; blank lines and #-comments ignored."""
    values = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise InputError(f"{path}:{lineno}: expected key=value")
                key, _, val = line.partition("=")
                key = key.strip().replace("-", "_")
                if key not in _CONFIG_KEYS:
                    raise InputError(f"{path}:{lineno}: unknown key {key!r}")
                caster = _CONFIG_KEYS[key]
                values[key] = _parse_bool(val) if caster is bool else caster(val.strip())
    except OSError as exc:
        raise InputError(f"cannot read config file {path}: {exc}") from exc
    return values


def read_series_csv(path, column=None):
    """Read a series file: mandatory header, optional leading ISO-8601
    `date` column, one or more numeric columns. Returns (values, dates,
    column_names); values is 1-D if a single column remains or is selected.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if len(rows) < 2:
        raise InputError(f"{path}: need a header row plus at least one data row")
    header = [h.strip() for h in rows[0]]
    has_date = header and header[0].lower() == "date"
    names = header[1:] if has_date else header
    if not names:
        raise InputError(f"{path}: no numeric columns")
    dates = [] if has_date else None
    data = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise InputError(f"{path}:{lineno}: expected {len(header)} cells")
        cells = row[1:] if has_date else row
        if has_date:
            try:
                date.fromisoformat(row[0].strip())
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: bad date {row[0]!r}") from exc
            dates.append(row[0].strip())
        try:
            parsed = [float(c) for c in cells]
        except ValueError as exc:
            raise InputError(f"{path}:{lineno}: non-numeric cell") from exc
        if not all(np.isfinite(parsed)):
            raise InputError(f"{path}:{lineno}: non-finite value")
        data.append(parsed)
    values = np.asarray(data, dtype=float)
    if column is not None:
        if column not in names:
            raise InputError(f"{path}: no column named {column!r}")
        values = values[:, names.index(column)]
        names = [column]
    elif values.shape[1] == 1:
        values = values[:, 0]
    return values, dates, names


def write_series_csv(path, values, column_names, dates=None):
    values = np.atleast_2d(np.asarray(values, dtype=float))
    if values.shape[0] == 1 and len(column_names) == 1:
        values = values.T
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        header = (["date"] if dates else []) + list(column_names)
        writer.writerow(header)
        for i, row in enumerate(values):
            prefix = [dates[i]] if dates else []
            writer.writerow(prefix + [repr(float(v)) for v in row])


def emit_json(doc, out_path=None):
    text = json.dumps(doc, indent=2)  # repr-based floats keep 17 digits
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def _parse_gas_par(text):
    """shape=false,scale=true style flags for the time_varying map."""
    out = {}
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if "=" not in item:
            raise InputError(f"bad gas-par entry {item!r}; expected name=bool")
        key, _, val = item.partition("=")
        out[key.strip()] = _parse_bool(val)
    return out


def _parse_vector(text):
    try:
        return np.array([float(v) for v in text.split(",")], dtype=float)
    except ValueError as exc:
        raise InputError(f"bad numeric vector {text!r}") from exc


def _merged(args, file_keys):
    """Effective setting: command line wins over config file."""
    merged = dict(file_keys)
    for key in _CONFIG_KEYS:
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    return merged


def _build_spec(cfg):
    if "dist" not in cfg:
        raise InputError("--dist is required")
    tv = _parse_gas_par(cfg["gas_par"]) if cfg.get("gas_par") else None
    return GasSpec(
        dist=cfg["dist"],
        n=int(cfg.get("dim", 1)),
        scaling=cfg.get("scaling", "Identity"),
        time_varying=tv,
        scalar_parameters=bool(cfg.get("scalar_parameters", False)),
    )


def _optimizer_config(cfg):
    kwargs = {}
    for key in ("max_iterations", "gradient_tolerance", "step_tolerance", "seed"):
        if key in cfg:
            kwargs[key] = cfg[key]
    return estimation.OptimizerConfig(**kwargs)


def _spec_block(spec):
    return {
        "dist": spec.dist,
        "n": int(spec.n),
        "scaling": spec.scaling,
        "time_varying": dict(spec.time_varying),
        "scalar_parameters": bool(spec.scalar_parameters),
    }


def cmd_info(args, cfg):
    info = dists.dist_info(cfg["dist"], int(cfg.get("dim", 1)))
    emit_json(
        {
            "label": info.label,
            "name": info.name,
            "kind": info.kind,
            "param_roles": list(info.param_roles),
            "num_params": int(info.num_params),
            "supported_scalings": list(info.supported_scalings),
            # JSON has no Infinity literal; unbounded ends become null
            "bounds": [
                [
                    float(lo) if np.isfinite(lo) else None,
                    float(hi) if np.isfinite(hi) else None,
                ]
                for lo, hi in info.bounds
            ],
        },
        args.out,
    )


def _load_univariate_or_matrix(cfg, spec):
    values, _, _ = read_series_csv(cfg["data"], cfg.get("column"))
    if spec.n == 1 and values.ndim == 2:
        raise InputError("univariate model but several columns; use --column")
    if spec.n > 1 and (values.ndim != 2 or values.shape[1] != spec.n):
        raise InputError(f"multivariate model needs exactly {spec.n} columns")
    return values


def _fit_dict(fit_result):
    """Fit report for JSON emission; wall-clock timing is nulled so command
    output is byte-reproducible under a fixed seed."""
    doc = fit_result.to_dict()
    doc["elapsed_seconds"] = None
    return doc


def cmd_fit(args, cfg):
    spec = _build_spec(cfg)
    y = _load_univariate_or_matrix(cfg, spec)
    result = estimation.fit(spec, y, _optimizer_config(cfg))
    emit_json(_fit_dict(result), args.out)
    return result


def cmd_simulate(args, cfg):
    spec = _build_spec(cfg)
    j = spec.num_params
    tv = spec.tv_mask()
    a = _parse_vector(cfg["a_diag"]) if cfg.get("a_diag") else np.where(tv, 0.05, 0.0)
    b = _parse_vector(cfg["b_diag"]) if cfg.get("b_diag") else np.where(tv, 0.9, 0.0)
    if cfg.get("kappa"):
        kappa = _parse_vector(cfg["kappa"])
    elif cfg.get("theta_star"):
        kappa = target_kappa(spec, b, _parse_vector(cfg["theta_star"]))
    else:
        raise InputError("simulate needs --kappa or --theta-star")
    if not (len(kappa) == len(a) == len(b) == j):
        raise InputError(f"kappa, a and b must have {j} entries for {spec.dist}")
    coeffs = Coefficients(kappa=kappa, a=a, b=b)
    t_len = int(cfg.get("length", 1000))
    sim = simulate(spec, coeffs, t_len, seed=int(cfg.get("seed", 0)))

    if not args.series_out:
        raise InputError("simulate needs --series-out for the CSV path")
    if spec.n > 1:
        names = [f"y{i + 1}" for i in range(spec.n)]
        series = sim.series
    else:
        names = ["y"]
        series = sim.series[:, None]
    write_series_csv(args.series_out, series, names)
    emit_json(
        {
            "spec": _spec_block(spec),
            "T": t_len,
            "seed": int(sim.seed),
            "kappa": [float(v) for v in coeffs.kappa],
            "a": [float(v) for v in coeffs.a],
            "b": [float(v) for v in coeffs.b],
            "series_path": args.series_out,
        },
        args.out,
    )


def cmd_forecast(args, cfg):
    spec = _build_spec(cfg)
    y = _load_univariate_or_matrix(cfg, spec)
    fit_result = estimation.fit(spec, y, _optimizer_config(cfg))
    result = forecasting.forecast(
        fit_result,
        horizon=int(cfg.get("horizon", 1)),
        num_draws=int(cfg.get("draws", forecasting.DEFAULT_NUM_DRAWS)),
        return_draws=bool(cfg.get("return_draws", False)),
        seed=int(cfg.get("seed", 0)),
    )
    doc = result.to_dict()
    doc["spec"] = _spec_block(spec)
    doc["fit"] = _fit_dict(fit_result)
    emit_json(doc, args.out)


def cmd_roll(args, cfg):
    spec = _build_spec(cfg)
    y = _load_univariate_or_matrix(cfg, spec)
    if "forecast_length" not in cfg:
        raise InputError("--forecast-length is required")
    result = forecasting.roll(
        spec,
        y,
        forecast_length=int(cfg["forecast_length"]),
        refit_every=int(cfg.get("refit_every", 1)),
        refit_window=cfg.get("refit_window", "recursive"),
        config=_optimizer_config(cfg),
    )
    doc = result.to_dict()
    doc["spec"] = _spec_block(spec)
    for fit_doc in doc["fits"]:
        fit_doc["elapsed_seconds"] = None
    emit_json(doc, args.out)


class _RollView:
    """Just the fields backtest_density needs, rebuilt from a roll JSON."""

    def __init__(self, doc):
        self.predicted_params = np.asarray(doc["predicted_params"], dtype=float)
        self.realized = np.asarray(doc["realized"], dtype=float)
        self.log_scores = np.asarray(doc["log_scores"], dtype=float)


def cmd_backtest(args, cfg):
    try:
        with open(cfg["roll_json"], encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read roll JSON: {exc}") from exc
    if "spec" not in doc:
        raise InputError("roll JSON is missing the spec block")
    sp = doc["spec"]
    spec = GasSpec(
        dist=sp["dist"],
        n=int(sp["n"]),
        scaling=sp["scaling"],
        time_varying=sp["time_varying"],
        scalar_parameters=bool(sp["scalar_parameters"]),
    )
    if "lower" not in cfg or "upper" not in cfg:
        raise InputError("--lower and --upper are required")
    result = scoring.backtest_density(
        _RollView(doc),
        spec,
        lower=float(cfg["lower"]),
        upper=float(cfg["upper"]),
        num_cells=int(cfg.get("grid_k", 1000)),
        weight_a=float(cfg.get("weight_a", 0.0)),
        weight_b=float(cfg.get("weight_b", 1.0)),
    )
    emit_json(result.to_dict(), args.out)


def _read_score_column(path):
    values, _, _ = read_series_csv(path)
    if values.ndim != 1:
        raise InputError(f"{path}: expected a single score column")
    return values


def cmd_dm(args, cfg):
    scores_a = _read_score_column(cfg["scores_a"])
    scores_b = _read_score_column(cfg["scores_b"])
    result = scoring.dm_test(scores_a, scores_b)
    emit_json(result.to_dict(), args.out)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="scoredriven",
        description="Score-driven time-varying parameter models",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, data=False):
        p.add_argument("--config", help="key=value config file; flags override it")
        p.add_argument("--out", help="write the JSON result here instead of stdout")
        p.add_argument("--dist")
        p.add_argument("--dim", type=int)
        p.add_argument("--scaling", choices=("Identity", "Inv", "InvSqrt"))
        p.add_argument("--gas-par", dest="gas_par",
                       help="time-varying flags, e.g. shape=false,scale=true")
        p.add_argument("--scalar-parameters", dest="scalar_parameters",
                       action="store_const", const=True)
        p.add_argument("--seed", type=int)
        if data:
            p.add_argument("data", help="series CSV (header row required)")
            p.add_argument("--column", help="column to model (univariate)")
            p.add_argument("--max-iterations", dest="max_iterations", type=int)
            p.add_argument("--gradient-tolerance", dest="gradient_tolerance",
                           type=float)
            p.add_argument("--step-tolerance", dest="step_tolerance", type=float)

    p = sub.add_parser("info", help="describe a distribution")
    add_common(p)

    p = sub.add_parser("fit", help="maximum-likelihood fit")
    add_common(p, data=True)

    p = sub.add_parser("simulate", help="simulate a path to CSV")
    add_common(p)
    p.add_argument("--length", type=int)
    p.add_argument("--kappa", help="comma-separated intercepts")
    p.add_argument("--a-diag", dest="a_diag", help="comma-separated score loadings")
    p.add_argument("--b-diag", dest="b_diag", help="comma-separated persistences")
    p.add_argument("--theta-star", dest="theta_star",
                   help="unconditional natural parameters (targets kappa)")
    p.add_argument("--series-out", dest="series_out", help="CSV output path")

    p = sub.add_parser("forecast", help="fit then forecast")
    add_common(p, data=True)
    p.add_argument("--horizon", type=int)
    p.add_argument("--draws", type=int)
    p.add_argument("--return-draws", dest="return_draws",
                   action="store_const", const=True)

    p = sub.add_parser("roll", help="rolling one-step backtest")
    add_common(p, data=True)
    p.add_argument("--forecast-length", dest="forecast_length", type=int)
    p.add_argument("--refit-every", dest="refit_every", type=int)
    p.add_argument("--refit-window", dest="refit_window",
                   choices=("recursive", "moving"))

    p = sub.add_parser("backtest", help="score a roll JSON")
    add_common(p)
    p.add_argument("roll_json", help="output of the roll command")
    p.add_argument("--lower", type=float)
    p.add_argument("--upper", type=float)
    p.add_argument("--grid-k", dest="grid_k", type=int)
    p.add_argument("--weight-a", dest="weight_a", type=float)
    p.add_argument("--weight-b", dest="weight_b", type=float)

    p = sub.add_parser("dm", help="Diebold-Mariano test on two score CSVs")
    add_common(p)
    p.add_argument("scores_a", help="CSV of losses for forecaster A")
    p.add_argument("scores_b", help="CSV of losses for forecaster B")

    return parser


_COMMANDS = {
    "info": cmd_info,
    "fit": cmd_fit,
    "simulate": cmd_simulate,
    "forecast": cmd_forecast,
    "roll": cmd_roll,
    "backtest": cmd_backtest,
    "dm": cmd_dm,
}


def _error_json(kind, exc):
    sys.stderr.write(
        json.dumps({"error": kind, "type": type(exc).__name__, "message": str(exc)})
        + "\n"
    )


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        file_cfg = read_config_file(args.config) if args.config else {}
        cfg = _merged(args, file_cfg)
        for attr in ("data", "roll_json", "scores_a", "scores_b"):
            if getattr(args, attr, None) is not None:
                cfg[attr] = getattr(args, attr)
        _COMMANDS[args.command](args, cfg)
    except InputError as exc:
        _error_json("input", exc)
        return EXIT_INPUT
    except (ValueError, KeyError, UnknownDistribution) as exc:
        _error_json("input", exc)
        return EXIT_INPUT
    except ScoreDrivenError as exc:
        _error_json("domain", exc)
        return EXIT_DOMAIN
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
