import argparse
import sys
from typing import Optional, Sequence

import event_log
from event_log import log_event

import bench.experiment as experiment
import bench.report as report
import dataset.batching as batching
import model.mlp as mlp
import optim.nlls as nlls
import oracle.selftest as selftest
from bench import VERSION
from config_manager import load_config
from errors import ExperimentError
from optim.registry import OPTIMIZER_NAMES

# Route every package's log_event into the daily log file
for module in (batching, mlp, nlls, experiment, report, selftest):
    module.set_logger(log_event)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nlls-bench",
        description="Stochastic Gauss-Newton optimizers: experiments and self-checks.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    parser.add_argument("--log-dir", default=event_log.LOG_DIR, help="directory for daily log files")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("--config", required=True, help="path to a key = value config file")
    run.add_argument("--out", help="output directory (overrides output_dir)")
    run.add_argument("--seed", type=int, help="base seed (overrides base_seed)")
    run.add_argument("--verbose", action="store_true", help="echo log entries to stderr")

    sub.add_parser("list-optimizers", help="print the registered optimizer names")

    check = sub.add_parser("selftest", help="run the oracle checks")
    check.add_argument("--only", nargs="+", choices=sorted(selftest.CHECKS), help="run a subset of checks")
    return parser


def _run(args) -> int:
    cfg = load_config(args.config, output_dir=args.out, base_seed=args.seed)
    data = experiment.load_dataset(cfg)
    traces = experiment.run_experiment(cfg, data)
    out = report.write_outputs(cfg, traces, data)
    for name, trace in traces.items():
        print(f"{name:>14}  final mean loss {trace.final_mean:.6g}")
    print(f"results: {out}")
    return 0


def _selftest(args) -> int:
    results = selftest.run_selftest(args.only)
    for result in results:
        print(result.line())
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"{len(failed)} of {len(results)} checks failed: {', '.join(failed)}", file=sys.stderr)
        return 1
    print(f"all {len(results)} checks passed")
    return 0


def cli_main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 2 on usage errors, 0 for --help/--version
        return int(e.code or 0)

    event_log.configure(log_dir=args.log_dir, echo=getattr(args, "verbose", False))

    if args.command == "list-optimizers":
        for name in OPTIMIZER_NAMES:
            print(name)
        return 0

    try:
        if args.command == "run":
            log_event(f"run --config {args.config}", "G")
            return _run(args)
        log_event("selftest", "G")
        return _selftest(args)
    except (ExperimentError, ValueError, OSError) as e:
        log_event(f"{args.command} failed: {e}", "G")
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(cli_main())
