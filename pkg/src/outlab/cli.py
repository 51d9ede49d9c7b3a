"""Command line entry point: ``outlab run`` and ``outlab verify``."""
from __future__ import annotations

import argparse
import sys

from .experiments import EXPERIMENTS, ConfigError, ExperimentConfig, default_workers, run_experiment

EXIT_OK, EXIT_TRIALS, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


def build_parser():
    parser = argparse.ArgumentParser(prog="outlab", description="Outlier eigenvalue experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one experiment")
    run.add_argument("--experiment", choices=EXPERIMENTS)
    run.add_argument("--config", help="JSON config file; flags override its values")
    run.add_argument("--seed", type=int, dest="master_seed")
    run.add_argument("--trials", type=int)
    run.add_argument("--n", type=int)
    run.add_argument("--atom")
    run.add_argument("--epsilon", type=float)
    run.add_argument("--mu", type=float)
    run.add_argument("--p", type=float)
    run.add_argument("--out")
    run.add_argument("--svg", action="store_true", dest="emit_svg", default=None)
    run.add_argument("--workers", type=int)

    verify = sub.add_parser("verify", help="run a verification suite")
    verify.add_argument("--suite", choices=["acceptance"], default="acceptance")
    verify.add_argument("--only", help="comma-separated criterion numbers")
    return parser


def _config_from_args(args) -> ExperimentConfig:
    keys = ("experiment", "master_seed", "trials", "n", "atom", "epsilon", "mu", "p", "out", "emit_svg", "workers")
    overrides = {k: getattr(args, k) for k in keys if getattr(args, k) is not None}
    if args.config:
        return ExperimentConfig.from_json(args.config, overrides)
    if "experiment" not in overrides:
        raise ConfigError("--experiment or --config is required")
    overrides.setdefault("workers", default_workers())
    return ExperimentConfig.from_dict(overrides)


def _run(args) -> int:
    try:
        cfg = _config_from_args(args)
    except (ConfigError, TypeError, ValueError) as exc:
        print(f"outlab: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"outlab: cannot read config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        result = run_experiment(cfg)
    except OSError as exc:
        print(f"outlab: cannot write outputs: {exc}", file=sys.stderr)
        return EXIT_IO
    s = result.summary
    print(f"{cfg.experiment}: {s['trials']} trials, {s['failed_trials']} failed, "
          f"passed={s['aggregate'].get('passed')} -> {result.out_dir}")
    return result.exit_code


def _verify(args) -> int:
    from .acceptance import run_catalog

    only = None
    if args.only:
        try:
            only = {int(x) for x in args.only.split(",") if x.strip()}
        except ValueError:
            print("outlab: --only takes comma-separated integers", file=sys.stderr)
            return EXIT_USAGE
    results = run_catalog(only=only, stream=sys.stdout)
    return EXIT_OK if all(r.passed for r in results) else EXIT_TRIALS


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "run":
        return _run(args)
    return _verify(args)


if __name__ == "__main__":
    sys.exit(main())
