"""Run one or more experiments at their default sizes.

    python scripts/run_experiment.py fig1 fig3 --out runs --workers 2
"""
import argparse
import json

from outlab.experiments import EXPERIMENTS, ExperimentConfig, run_experiment


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("experiments", nargs="*", default=list(EXPERIMENTS), choices=EXPERIMENTS)
    parser.add_argument("--out", default="runs")
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--workers", type=int, default=1)
    parser.add_argument("--trials", type=int)
    args = parser.parse_args()
    for name in args.experiments:
        cfg = ExperimentConfig(name, master_seed=args.seed, out=f"{args.out}/{name}", workers=args.workers,
                               trials=args.trials, emit_svg=name in ("fig1", "fig3", "fig4", "fig5"))
        result = run_experiment(cfg)
        agg = {k: v for k, v in result.summary["aggregate"].items() if not isinstance(v, list)}
        print(f"{name}: failed={result.summary['failed_trials']} {json.dumps(agg, default=str)}")


if __name__ == "__main__":
    main()
