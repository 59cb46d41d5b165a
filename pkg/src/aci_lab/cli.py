"""Command-line entry point.

Subcommands mirror the harness: ``online`` and ``offline`` run one
experiment, ``sweep`` runs the calibration-fraction grid, ``lemma-stress``
runs every predictor against adversarial synthetic streams and checks the
level-confinement and coverage bounds, ``report`` re-aggregates existing
trace files.  A flat key=value config file can seed any invocation;
explicit flags win over the file.
"""

import argparse
import os
import sys

from .aci import confinement_interval
from .harness import (ConfigError, build_config, emit_sweep, lemma_stress_matrix,
                      parse_config_file, parse_trace, run_offline, run_online,
                      run_sweep, write_run_outputs, format_float,
                      ONLINE_PREDICTORS, OFFLINE_PREDICTORS)
from .metrics import summarize_run


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--dataset", help="wine | usps | synth-reg | synth-class")
    p.add_argument("--predictor", help="predictor id")
    p.add_argument("--eps", type=float, help="target error rate (default 0.1)")
    p.add_argument("--eps1", type=float, help="starting level (default: eps)")
    p.add_argument("--delta", type=float,
                   help="guarantee accuracy used to derive the step size (default 0.01)")
    p.add_argument("--gamma", type=float,
                   help="explicit step size; overrides --delta")
    p.add_argument("--warmup", type=int, help="initial history size (default 100)")
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--k", type=int, help="neighbour count where applicable")
    p.add_argument("--ridge-a", dest="ridge_a", type=float,
                   help="ridge coefficient for the regression predictors")
    p.add_argument("--order", help="wine file order: white-then-red | red-then-white")
    p.add_argument("--standardize", action="store_const", const="true",
                   help="standardize features")
    p.add_argument("--subsample", type=int, help="desk-scale stream subsample")
    p.add_argument("--full", action="store_const", const="true",
                   help="full-scale run (no default subsampling)")
    p.add_argument("--white-path", dest="white_path")
    p.add_argument("--red-path", dest="red_path")
    p.add_argument("--train-path", dest="train_path")
    p.add_argument("--test-path", dest="test_path")
    p.add_argument("--n", type=int, help="synthetic stream length")
    p.add_argument("--p", type=int, help="synthetic feature count")
    p.add_argument("--changepoint-frac", dest="changepoint_frac", type=float)
    p.add_argument("--drift", type=float, help="synthetic shift magnitude")
    p.add_argument("--noise-scale", dest="noise_scale", type=float)
    p.add_argument("--n-classes", dest="n_classes", type=int)
    p.add_argument("--class-sep", dest="class_sep", type=float)
    p.add_argument("--cal-fraction", dest="cal_fraction", type=float)
    p.add_argument("--test-fraction", dest="test_fraction", type=float)
    p.add_argument("--pool-subsample", dest="pool_subsample", type=int)
    p.add_argument("--seeds", help="comma-separated trial seeds (sweep)")
    p.add_argument("--cal-fractions", dest="cal_fractions",
                   help="comma-separated calibration fractions (sweep)")
    p.add_argument("--out", help="output directory")


def _config_from_args(args) -> dict:
    mapping = {}
    if args.config:
        mapping.update(parse_config_file(args.config))
    skip = {"config", "command", "traces", "task"}
    for key, value in vars(args).items():
        if key in skip or value is None:
            continue
        mapping[key] = value if isinstance(value, str) else str(value)
    return mapping


def _print_summary(result) -> None:
    s = result.summary
    print(f"dataset={result.dataset_name} predictor={result.config.predictor} "
          f"n={s.n_steps} gamma={format_float(result.gamma)}")
    parts = [f"mean_err={format_float(s.mean_err)}",
             f"bound={format_float(s.bound)}",
             f"bound_satisfied={s.bound_satisfied}"]
    if s.oe is not None:
        parts.append(f"oe={format_float(s.oe)}")
    if s.mean_winkler_finite is not None:
        parts.append(f"winkler={format_float(s.mean_winkler_finite)}")
    if s.mean_width_finite is not None:
        parts.append(f"width={format_float(s.mean_width_finite)}")
    if s.frac_inf is not None:
        parts.append(f"frac_inf={format_float(s.frac_inf)}")
    print("  " + " ".join(parts))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="aci-lab",
        description="online set prediction under adaptive error-rate control")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (("online", "stream one dataset through an online predictor"),
                            ("offline", "fixed train/test run with a split predictor"),
                            ("sweep", "calibration-fraction grid with seeded trials")):
        p = sub.add_parser(name, help=help_text)
        _add_common(p)

    p = sub.add_parser("lemma-stress",
                       help="confinement and coverage checks across all predictors")
    _add_common(p)

    p = sub.add_parser("report", help="re-aggregate existing trace files")
    p.add_argument("traces", nargs="+", help="trace CSV paths")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--eps1", type=float)
    p.add_argument("--gamma", type=float, required=True)

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _dispatch(args) -> int:
    if args.command == "report":
        eps1 = args.eps if args.eps1 is None else args.eps1
        for path in args.traces:
            records = parse_trace(path)
            s = summarize_run(records, args.eps, eps1, args.gamma)
            print(f"{path}: n={s.n_steps} mean_err={format_float(s.mean_err)} "
                  f"bound={format_float(s.bound)} satisfied={s.bound_satisfied}")
        return 0

    cfg = build_config(_config_from_args(args))

    if args.command == "online":
        if cfg.predictor not in ONLINE_PREDICTORS:
            raise ConfigError(f"online needs one of {ONLINE_PREDICTORS}")
        result = run_online(cfg)
        _print_summary(result)
        if cfg.out:
            paths = write_run_outputs(cfg.out, result)
            print("  wrote " + " ".join(sorted(paths.values())))
        return 0

    if args.command == "offline":
        if cfg.predictor not in OFFLINE_PREDICTORS:
            raise ConfigError(f"offline needs one of {OFFLINE_PREDICTORS}")
        result = run_offline(cfg)
        _print_summary(result)
        if cfg.out:
            paths = write_run_outputs(cfg.out, result)
            print("  wrote " + " ".join(sorted(paths.values())))
        return 0

    if args.command == "sweep":
        sweep = run_sweep(cfg)
        for frac, method, metric, mean, half, n in sweep.rows:
            frac_s = "-" if frac is None else format_float(frac)
            print(f"cal={frac_s} {method} {metric} = {format_float(mean)} "
                  f"+/- {format_float(half)} (T={n})")
        if cfg.out:
            os.makedirs(cfg.out, exist_ok=True)
            path = os.path.join(cfg.out, "sweep.csv")
            emit_sweep(path, sweep)
            print(f"wrote {path}")
        return 0

    # lemma-stress
    failures = 0
    for pid, stream, result in lemma_stress_matrix(eps=cfg.eps, delta=cfg.delta,
                                                   seed=cfg.seed):
        lo, hi = confinement_interval(result.gamma)
        confined = lo <= result.eps_min and result.eps_max <= hi
        ok = confined and result.summary.bound_satisfied
        failures += 0 if ok else 1
        status = "ok" if ok else "FAIL"
        print(f"[{status}] {pid:12s} {stream:16s} "
              f"mean_err={format_float(result.summary.mean_err)} "
              f"bound={format_float(result.summary.bound)} "
              f"eps_range=[{format_float(result.eps_min)}, {format_float(result.eps_max)}]")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
