"""Command-line entry point: ``maclaurin-gp {gen-sinc,fit-ref,run,sweep,report}``.

Errors are reported as a JSON object on stderr with a nonzero exit code.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .data import SincSpec, generate_sinc, save_csv
from .errors import InputError, NumericalError
from .experiment import RunConfig, fit_reference, replicate_data, run_experiment, sweep

EXIT_INPUT = 2
EXIT_NUMERICAL = 3


def _load_config(args) -> RunConfig:
    config = RunConfig.from_json(args.config)
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "out", None) is not None:
        overrides["out"] = args.out
    return config.replace(**overrides) if overrides else config


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def cmd_gen_sinc(args):
    spec = SincSpec(n_points=args.n_points, noise_variance=args.noise_variance,
                    normalized=not args.unnormalized)
    data = generate_sinc(spec, np.random.default_rng(args.seed))
    save_csv(args.out, data)
    print(json.dumps({"written": args.out, "n_points": data.n}))


def cmd_fit_ref(args):
    config = _load_config(args)
    train, _ = replicate_data(config, config.seed)
    params = fit_reference(train, config, config.seed)
    payload = {"seed": config.seed, "n_train": train.n, "params": params.to_dict()}
    if config.out:
        os.makedirs(config.out, exist_ok=True)
        with open(os.path.join(config.out, "reference.json"), "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
    print(json.dumps(payload))


def _print_summary(label, summary):
    kl, rm = summary["mean_kl"], summary["rmse"]
    line = f"{label:<24} mean_kl {kl['median']:.6g} (iqr {kl['iqr']:.3g})  rmse {rm['median']:.6g}"
    if "n_clusters" in summary:
        line += f"  clusters {summary['n_clusters']['median']:g}"
    print(line)


def cmd_run(args):
    config = _load_config(args)
    result = run_experiment(config)
    _print_summary(config.method, result.summary())


def cmd_sweep(args):
    config = _load_config(args)
    values = [_parse_value(v) for v in args.values.split(",")]
    for v, res in sweep(config, args.param, values):
        _print_summary(f"{args.param}={v}", res.summary())


def cmd_report(args):
    path = os.path.join(args.run_dir, "report.json")
    if not os.path.isfile(path):
        sweep_csv = os.path.join(args.run_dir, "sweep.csv")
        if os.path.isfile(sweep_csv):
            with open(sweep_csv, encoding="utf-8") as fh:
                sys.stdout.write(fh.read())
            return
        raise InputError(f"no report.json or sweep.csv in {args.run_dir}")
    with open(path, encoding="utf-8") as fh:
        report = json.load(fh)
    _print_summary(report["method"], report["summary"])
    for rep in report["replicates"]:
        print(f"  seed {rep['seed']:<6} mean_kl {rep['mean_kl']:.6g}  rmse {rep['rmse']:.6g}  "
              f"lengthscale {rep['params']['lengthscale']:.4g}")


def build_parser():
    parser = argparse.ArgumentParser(prog="maclaurin-gp",
                                     description="Maclaurin-feature GP regression experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-sinc", help="write a noisy sinc training set as CSV")
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-points", type=int, default=50)
    p.add_argument("--noise-variance", type=float, default=0.01)
    p.add_argument("--unnormalized", action="store_true", help="use sin(z)/z instead of sin(pi z)/(pi z)")
    p.set_defaults(func=cmd_gen_sinc)

    for name, func, helptext in (
        ("fit-ref", cmd_fit_ref, "fit the reference GP hyperparameters"),
        ("run", cmd_run, "run one experiment"),
        ("sweep", cmd_sweep, "run an experiment for several values of one config key"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--seed", type=int, default=None, help="override the base seed")
        p.add_argument("--out", default=None, help="override the output directory")
        if name == "sweep":
            p.add_argument("--param", required=True, help="config key to vary, e.g. theta")
            p.add_argument("--values", required=True, help="comma-separated JSON values")
        p.set_defaults(func=func)

    p = sub.add_parser("report", help="summarize a finished run or sweep directory")
    p.add_argument("run_dir")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (InputError, OSError) as err:
        print(json.dumps({"error": type(err).__name__, "message": str(err)}), file=sys.stderr)
        return EXIT_INPUT
    except (NumericalError, ArithmeticError) as err:
        print(json.dumps({"error": type(err).__name__, "message": str(err)}), file=sys.stderr)
        return EXIT_NUMERICAL
    return 0


if __name__ == "__main__":
    sys.exit(main())
