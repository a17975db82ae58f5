"""Command-line front end.

Subcommands: paths, detect, validity, false-alarms, check-theorem1,
check-chernoff.  Every run is fully determined by its flag set: outputs
carry no timestamps or machine state, so identical flags give byte-identical
files.  Floats in CSV output use 17 significant digits; JSON uses the
shortest round-trip decimal form and a fixed key order.  Exit codes:
0 success, 1 runtime error, 2 usage error.

A --config FILE escape hatch accepts a JSON object with the same keys as
the long flags; explicit flags win over config values.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Any

import numpy as np

from . import _backend, models, sim
from .core import ProcessPath, cusum_statistic

_LN10 = math.log(10.0)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ccd",
        description="Conformal CUSUM change detection experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser, model: bool = True) -> None:
        if model:
            p.add_argument(
                "--model",
                choices=("bernoulli", "gauss-mean", "gauss-var"),
                default=None,
                help="distribution pair",
            )
            p.add_argument("--theta0", type=float, default=None,
                           help="pre-change Bernoulli parameter")
            p.add_argument("--theta1", type=float, default=None,
                           help="post-change Bernoulli parameter")
            p.add_argument("--mu", type=float, default=None,
                           help="post-change mean (gauss-mean)")
            p.add_argument("--sigma", type=float, default=None,
                           help="post-change standard deviation (gauss-var)")
        p.add_argument("--seed", type=int, default=None,
                       help="base seed (default 42)")
        p.add_argument("--out", default=None,
                       help="output file (default stdout)")
        p.add_argument("--config", default=None,
                       help="JSON file providing defaults for the same keys")

    p = sub.add_parser("paths", help="one experiment's process paths as CSV")
    add_common(p)
    p.add_argument("--n0", type=int, default=None, help="pre-change length")
    p.add_argument("--n1", type=int, default=None, help="post-change length (default 0)")
    p.add_argument("--run", type=int, default=None, help="run index (default 0)")

    p = sub.add_parser("detect", help="alarm steps of the three processes as JSON")
    add_common(p)
    p.add_argument("--c", type=float, default=None, help="alarm threshold, > 1")
    p.add_argument("--input", default=None,
                   help="observation CSV (one value per line, optional 'z' header, "
                        "# comments); omit to generate via --n0/--n1")
    p.add_argument("--n0", type=int, default=None, help="pre-change length")
    p.add_argument("--n1", type=int, default=None, help="post-change length (default 0)")
    p.add_argument("--run", type=int, default=None, help="run index (default 0)")

    p = sub.add_parser("validity", help="pre-change final-value quantiles as JSON")
    add_common(p)
    p.add_argument("--n0", type=int, default=None, help="pre-change length")
    p.add_argument("--sims", type=int, default=None, help="number of runs")

    p = sub.add_parser("false-alarms", help="pre-change alarm statistics as JSON")
    add_common(p)
    p.add_argument("--n0", type=int, default=None, help="pre-change length")
    p.add_argument("--c", type=float, default=None, help="alarm threshold, > 1")
    p.add_argument("--sims", type=int, default=None, help="number of runs")

    p = sub.add_parser("check-theorem1", help="Bernoulli efficiency bound check as JSON")
    add_common(p, model=False)
    p.add_argument("--theta0", type=float, default=None)
    p.add_argument("--theta1", type=float, default=None)
    p.add_argument("--n0", type=int, default=None, help="pre-change length")
    p.add_argument("--n1", type=int, default=None, help="post-change length")
    p.add_argument("--epsilon", type=float, default=None, help="failure budget in (0,1)")
    p.add_argument("--sims", type=int, default=None, help="number of runs")

    p = sub.add_parser("check-chernoff", help="multiplicative Chernoff tail check as JSON")
    add_common(p, model=False)
    p.add_argument("--theta", type=float, default=None,
                   help="constant success probability (with --n)")
    p.add_argument("--thetas", default=None,
                   help="comma-separated success probabilities (alternative to --theta)")
    p.add_argument("--n", type=int, default=None, help="sequence length (with --theta)")
    p.add_argument("--delta", type=float, default=None, help="relative overshoot, > 0")
    p.add_argument("--mu", type=float, default=None,
                   help="mean bound (default: sum of the probabilities)")
    p.add_argument("--sims", type=int, default=None, help="number of runs")

    return parser


def _merge_config(args: argparse.Namespace, parser: argparse.ArgumentParser) -> None:
    if getattr(args, "config", None) is None:
        return
    try:
        with open(args.config, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        parser.error(f"--config: {e}")
    if not isinstance(cfg, dict):
        parser.error("--config: the file must hold a JSON object")
    for key, value in cfg.items():
        attr = str(key).replace("-", "_")
        if attr in ("config", "command") or not hasattr(args, attr):
            parser.error(f"--config: unknown key {key!r} for this command")
        if getattr(args, attr) is None:
            setattr(args, attr, value)


def _require(parser, value, flag: str):
    if value is None:
        parser.error(f"{flag} is required")
    return value


def _build_pair(args, parser) -> models.PrePostPair:
    model = _require(parser, args.model, "--model")
    if model == "bernoulli":
        if args.mu is not None or args.sigma is not None:
            parser.error("--mu/--sigma do not apply to --model bernoulli")
        theta0 = _require(parser, args.theta0, "--theta0")
        theta1 = _require(parser, args.theta1, "--theta1")
        try:
            return models.BernoulliPair(float(theta0), float(theta1))
        except ValueError as e:
            parser.error(f"--theta0/--theta1: {e}")
    elif model == "gauss-mean":
        if args.theta0 is not None or args.theta1 is not None or args.sigma is not None:
            parser.error("only --mu applies to --model gauss-mean")
        mu = _require(parser, args.mu, "--mu")
        try:
            return models.GaussMeanPair(float(mu))
        except ValueError as e:
            parser.error(f"--mu: {e}")
    elif model == "gauss-var":
        if args.theta0 is not None or args.theta1 is not None or args.mu is not None:
            parser.error("only --sigma applies to --model gauss-var")
        sigma = _require(parser, args.sigma, "--sigma")
        try:
            return models.GaussVarPair(float(sigma))
        except ValueError as e:
            parser.error(f"--sigma: {e}")
    parser.error(f"--model: unknown model {model!r}")


def _model_record(pair: models.PrePostPair) -> dict[str, Any]:
    if isinstance(pair, models.BernoulliPair):
        return {"model": pair.kind, "theta0": pair.theta0, "theta1": pair.theta1}
    if isinstance(pair, models.GaussMeanPair):
        return {"model": pair.kind, "mu": pair.mu}
    return {"model": pair.kind, "sigma": pair.sigma}


def _int_flag(parser, value, flag: str, default=None, minimum=None):
    if value is None:
        if default is None:
            parser.error(f"{flag} is required")
        value = default
    try:
        v = int(value)
    except (TypeError, ValueError):
        parser.error(f"{flag}: expected an integer, got {value!r}")
    if minimum is not None and v < minimum:
        parser.error(f"{flag}: must be at least {minimum}, got {v}")
    return v


def _float_flag(parser, value, flag: str, default=None):
    if value is None:
        if default is None:
            parser.error(f"{flag} is required")
        value = default
    try:
        return float(value)
    except (TypeError, ValueError):
        parser.error(f"{flag}: expected a number, got {value!r}")


def _threshold_flag(parser, value) -> float:
    c = _float_flag(parser, value, "--c")
    if not c > 1.0:
        parser.error(f"--c: alarm threshold must exceed 1, got {c}")
    return c


def _write_text(out_path: str | None, text: str) -> None:
    if out_path is None:
        sys.stdout.write(text)
    else:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def emit_paths_csv(path: ProcessPath) -> str:
    cus_lrm = cusum_statistic(path.log_lrm)
    cus_cep = cusum_statistic(path.log_cep)
    cus_ctm = cusum_statistic(path.log_ctm)
    lines = ["n,log10_lrm,log10_cep,log10_ctm,cusum_lrm,cusum_cep,cusum_ctm"]
    for i in range(path.log_lrm.size):
        lines.append(
            f"{i},{_fmt(path.log_lrm[i] / _LN10)},{_fmt(path.log_cep[i] / _LN10)},"
            f"{_fmt(path.log_ctm[i] / _LN10)},{_fmt(cus_lrm[i])},{_fmt(cus_cep[i])},"
            f"{_fmt(cus_ctm[i])}"
        )
    return "\n".join(lines) + "\n"


def emit_json(record: dict[str, Any]) -> str:
    return json.dumps(record, indent=2) + "\n"


def read_observations(path: str) -> np.ndarray:
    values: list[float] = []
    saw_data = False
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if not saw_data and line == "z":
                saw_data = True
                continue
            saw_data = True
            try:
                values.append(float(line))
            except ValueError:
                raise ValueError(
                    f"{path}:{lineno}: expected one numeric observation, got {line!r}"
                ) from None
    return np.asarray(values, dtype=np.float64)


def _cmd_paths(args, parser) -> int:
    pair = _build_pair(args, parser)
    n0 = _int_flag(parser, args.n0, "--n0", minimum=0)
    n1 = _int_flag(parser, args.n1, "--n1", default=0, minimum=0)
    seed = _int_flag(parser, args.seed, "--seed", default=42)
    run = _int_flag(parser, args.run, "--run", default=0, minimum=0)
    config = sim.ExperimentConfig(pair=pair, n0=n0, n1=n1, base_seed=seed)
    path = sim.run_paths(config, run)
    _write_text(args.out, emit_paths_csv(path))
    return 0


def _cmd_detect(args, parser) -> int:
    pair = _build_pair(args, parser)
    c = _threshold_flag(parser, args.c)
    seed = _int_flag(parser, args.seed, "--seed", default=42)
    run = _int_flag(parser, args.run, "--run", default=0, minimum=0)
    if args.input is not None:
        if args.n0 is not None or args.n1 is not None:
            parser.error("--input replaces --n0/--n1; give one or the other")
        z = read_observations(args.input)
    else:
        if args.n0 is None:
            parser.error("either --input or --n0 is required")
        n0 = _int_flag(parser, args.n0, "--n0", minimum=0)
        n1 = _int_flag(parser, args.n1, "--n1", default=0, minimum=0)
        config = sim.ExperimentConfig(pair=pair, n0=n0, n1=n1, base_seed=seed)
        z = sim.generate_stream(config, run)
    taus = sim.tie_break_draws(seed, run, z.size)
    path = sim.paths_from_observations(pair, pair.cao_betting(), z, taus)
    log_c = math.log(c)
    record = {
        "threshold": c,
        "n_steps": int(z.size),
        "seed": seed,
        "run": run,
    }
    record.update(_model_record(pair))
    alarms = {}
    for name, arr in (("lrm", path.log_lrm), ("cep", path.log_cep), ("ctm", path.log_ctm)):
        alarms[name] = [int(i) for i in _backend.cusum_alarms(arr, log_c)]
    record["alarms"] = alarms
    record["n_alarms"] = {k: len(v) for k, v in alarms.items()}
    _write_text(args.out, emit_json(record))
    return 0


def _quantile_record(values: tuple[float, ...]) -> dict[str, float]:
    return {
        "q05": values[0],
        "q25": values[1],
        "q50": values[2],
        "q75": values[3],
        "q95": values[4],
    }


def _cmd_validity(args, parser) -> int:
    pair = _build_pair(args, parser)
    n0 = _int_flag(parser, args.n0, "--n0", minimum=1)
    sims = _int_flag(parser, args.sims, "--sims", minimum=1)
    seed = _int_flag(parser, args.seed, "--seed", default=42)
    config = sim.ExperimentConfig(pair=pair, n0=n0, n1=0, base_seed=seed, sims=sims)
    summary = sim.validity_study(config)
    record: dict[str, Any] = {"sims": sims, "n0": n0, "seed": seed}
    record.update(_model_record(pair))
    record["levels"] = list(summary.levels)
    record["lrm"] = _quantile_record(summary.lrm)
    record["cep"] = _quantile_record(summary.cep)
    record["ctm"] = _quantile_record(summary.ctm)
    _write_text(args.out, emit_json(record))
    return 0


def _alarm_record(stats: sim.AlarmStats) -> dict[str, Any]:
    return {
        "n_alarms": stats.n_alarms,
        "total_steps": stats.total_steps,
        "alarm_rate": stats.alarm_rate,
        "rate_stderr": stats.rate_stderr,
        "n_gaps": stats.n_gaps,
        "mean_gap": stats.mean_gap,
    }


def _cmd_false_alarms(args, parser) -> int:
    pair = _build_pair(args, parser)
    n0 = _int_flag(parser, args.n0, "--n0", minimum=1)
    c = _threshold_flag(parser, args.c)
    sims = _int_flag(parser, args.sims, "--sims", minimum=1)
    seed = _int_flag(parser, args.seed, "--seed", default=42)
    config = sim.ExperimentConfig(
        pair=pair, n0=n0, n1=0, threshold=c, base_seed=seed, sims=sims
    )
    report = sim.false_alarm_study(config)
    record: dict[str, Any] = {
        "threshold": c,
        "sims": sims,
        "n0": n0,
        "seed": seed,
        "bound_rate": 1.0 / c,
    }
    record.update(_model_record(pair))
    record["lrm"] = _alarm_record(report.lrm)
    record["cep"] = _alarm_record(report.cep)
    record["ctm"] = _alarm_record(report.ctm)
    _write_text(args.out, emit_json(record))
    return 0


def _cmd_check_theorem1(args, parser) -> int:
    theta0 = _float_flag(parser, args.theta0, "--theta0")
    theta1 = _float_flag(parser, args.theta1, "--theta1")
    n0 = _int_flag(parser, args.n0, "--n0", minimum=1)
    n1 = _int_flag(parser, args.n1, "--n1", minimum=1)
    epsilon = _float_flag(parser, args.epsilon, "--epsilon")
    sims = _int_flag(parser, args.sims, "--sims", minimum=1)
    seed = _int_flag(parser, args.seed, "--seed", default=42)
    try:
        report = sim.theorem1_check(theta0, theta1, n0, n1, epsilon, sims, base_seed=seed)
    except ValueError as e:
        parser.error(str(e))
    record = {
        "theta0": report.theta0,
        "theta1": report.theta1,
        "n0": report.n0,
        "n1": report.n1,
        "epsilon": report.epsilon,
        "sims": report.sims,
        "seed": report.base_seed,
        "b_const": report.b_const,
        "delta": report.delta,
        "c_const": report.c_const,
        "bound_rhs_final": float(report.bound_rhs[-1]),
        "violation_frequency": report.violation_frequency,
        "violation_stderr": report.violation_stderr,
        "max_log_ratio_median": float(np.median(report.max_log_ratio)),
        "max_log_ratio_max": float(np.max(report.max_log_ratio)),
        "anomalous_mean": report.anomalous_mean,
        "anomalous_stderr": report.anomalous_stderr,
        "anomalous_mean_bound": report.anomalous_mean_bound,
        "prefix_within_delta_rate": float(np.mean(report.prefix_within_delta)),
    }
    _write_text(args.out, emit_json(record))
    return 0


def _cmd_check_chernoff(args, parser) -> int:
    if args.thetas is not None:
        if args.theta is not None or args.n is not None:
            parser.error("--thetas replaces --theta/--n; give one or the other")
        try:
            thetas = [float(v) for v in str(args.thetas).split(",") if v.strip() != ""]
        except ValueError:
            parser.error(f"--thetas: expected comma-separated numbers, got {args.thetas!r}")
        if not thetas:
            parser.error("--thetas: need at least one probability")
    else:
        theta = _float_flag(parser, args.theta, "--theta")
        n = _int_flag(parser, args.n, "--n", minimum=1)
        thetas = [theta] * n
    delta = _float_flag(parser, args.delta, "--delta")
    sims = _int_flag(parser, args.sims, "--sims", minimum=1)
    seed = _int_flag(parser, args.seed, "--seed", default=42)
    mu = None if args.mu is None else _float_flag(parser, args.mu, "--mu")
    try:
        report = sim.chernoff_check(thetas, delta, sims, mu=mu, base_seed=seed)
    except ValueError as e:
        parser.error(str(e))
    record = {
        "delta": report.delta,
        "mu": report.mu,
        "n": report.n,
        "sims": report.sims,
        "seed": report.base_seed,
        "tail_estimate": report.tail_estimate,
        "tail_stderr": report.tail_stderr,
        "chernoff_bound": report.chernoff_bound,
        "relaxed_bound": report.relaxed_bound,
        "bounds_ordered": report.bounds_ordered,
        "supermartingale_mean": [float(v) for v in report.supermartingale_mean],
        "supermartingale_stderr": [float(v) for v in report.supermartingale_stderr],
    }
    _write_text(args.out, emit_json(record))
    return 0


_COMMANDS = {
    "paths": _cmd_paths,
    "detect": _cmd_detect,
    "validity": _cmd_validity,
    "false-alarms": _cmd_false_alarms,
    "check-theorem1": _cmd_check_theorem1,
    "check-chernoff": _cmd_check_chernoff,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _merge_config(args, parser)
    try:
        return _COMMANDS[args.command](args, parser)
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
