"""``beepsim`` command line.

Exit codes: 0 success, 1 usage error, 2 internal invariant violation or a
diverged execution, 3 a verification check failed.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .channel import DivergedExecution, ProtocolViolation, write_trace_csv
from .harness import (ENGINES, SWEEP_FIELDS, CampaignConfig, UsageError,
                      ball_bench, derive_seed, detect_bench, run_campaign, sweep_scaling,
                      write_campaign_json, write_metrics_csv, write_rows_csv)
from .protocols import PROTOCOLS

EXIT_OK, EXIT_USAGE, EXIT_INTERNAL, EXIT_VERIFY = 0, 1, 2, 3

log = logging.getLogger("beepsim")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _u64(text):
    value = int(text, 0)
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _n_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad n list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="beepsim", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name, help_text in (("lv", "Las Vegas naming (n known to stations)"),
                            ("mc", "Monte Carlo naming (n hidden from stations)")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--beta", type=int, default=2)
        p.add_argument("--trials", type=int, default=1)
        p.add_argument("--seed", type=_u64, default=0, help="master seed")
        p.add_argument("--out", choices=("csv", "json"), default="csv")
        p.add_argument("--trace", metavar="PATH",
                       help="write the round trace of trial 0 as CSV (runs it on the lockstep engine)")
        p.add_argument("--engine", choices=ENGINES, default="fast")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--max-rounds", type=int, default=None)

    p = sub.add_parser("detect-bench", help="empirical miss rate of collision checks")
    p.add_argument("--participants", type=int, required=True)
    p.add_argument("--calls", type=int, default=1)
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--seed", type=_u64, default=0)

    p = sub.add_parser("ball-process", help="standalone balls-into-bins process")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=_u64, default=0)

    p = sub.add_parser("sweep", help="normalised medians over several n")
    p.add_argument("--protocol", choices=sorted(PROTOCOLS), required=True)
    p.add_argument("--n-list", type=_n_list, default=[16, 64, 256, 1024])
    p.add_argument("--beta", type=int, default=2)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--engine", choices=ENGINES, default="fast")
    p.add_argument("--workers", type=int, default=1)

    sub.add_parser("verify", help="run every release check")
    return parser


def _cmd_protocol(args, out):
    config = CampaignConfig(args.command, [args.n], args.beta, args.trials, args.seed,
                            output=args.out, engine=args.engine, workers=args.workers,
                            max_rounds=args.max_rounds)
    if args.trace:
        mod = PROTOCOLS[args.command]
        seed = derive_seed(args.seed, args.n, 0)
        try:
            _, _, ex, _ = mod.lockstep_run(args.n, args.beta, seed, max_rounds=args.max_rounds)
            trace = ex.trace
        except DivergedExecution as exc:
            trace = exc.trace
        with open(args.trace, "w", newline="") as fh:
            write_trace_csv(trace, fh)
    result = run_campaign(config)
    if args.out == "json":
        write_campaign_json(result, out)
    else:
        write_metrics_csv(result.trials, out)
        for s in result.summaries:
            print(json.dumps(s, sort_keys=True), file=sys.stderr)
    return EXIT_INTERNAL if result.diverged else EXIT_OK


def _cmd_detect(args, out):
    bench = detect_bench(args.participants, args.calls, args.trials, args.seed)
    print(f"participants={bench.participants} calls={bench.calls} trials={bench.trials}", file=out)
    print(f"missed={bench.misses} frequency={bench.frequency:.6f} "
          f"expected={bench.expected:.6f} sigma={bench.sigma:.6f} "
          f"rounds={bench.rounds} bits={bench.bits}", file=out)
    return EXIT_OK


def _cmd_ball(args, out):
    bench = ball_bench(args.n, args.trials, args.seed)
    throws = sorted(bench.throws)
    print(f"n={bench.n} trials={bench.trials} mean_throws={sum(throws) / len(throws):.3f} "
          f"max_throws={throws[-1]} over_3n={bench.over_3n} bound={bench.bound:.3e}", file=out)
    return EXIT_OK


def _cmd_sweep(args, out):
    rows = sweep_scaling(args.protocol, args.n_list, args.beta, args.trials, args.seed,
                         engine=args.engine, workers=args.workers)
    write_rows_csv(rows, SWEEP_FIELDS, out)
    return EXIT_OK


def _cmd_verify(args, out):
    from .verify import run_all

    checks = run_all(report=lambda line: print(line, file=out, flush=True))
    failed = [c for c in checks if not c.ok]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed", file=out)
    return EXIT_VERIFY if failed else EXIT_OK


COMMANDS = {"lv": _cmd_protocol, "mc": _cmd_protocol, "detect-bench": _cmd_detect,
            "ball-process": _cmd_ball, "sweep": _cmd_sweep, "verify": _cmd_verify}


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args, out)
    except (UsageError, ValueError) as exc:
        print(f"beepsim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ProtocolViolation, AssertionError) as exc:
        print(f"beepsim: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
