"""brickwork command line.

    brickwork COMMAND --config run.toml [--seed N] [--out DIR] [--threads N]

Exit codes: 0 success, 2 validation error, 3 numerical error.
"""

import argparse
import os
import sys

COMMANDS = ("spectrum", "lightcone", "verify", "haar-sweep", "search", "scan", "floquet")
_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


def build_parser():
    p = argparse.ArgumentParser(prog="brickwork", description=__doc__.split("\n")[0])
    p.add_argument("command", nargs="?", choices=COMMANDS,
                   help="command to run (defaults to run.command from the config)")
    p.add_argument("--config", required=True, help="TOML run configuration")
    p.add_argument("--seed", type=int, help="override run.seed")
    p.add_argument("--out", help="override run.out")
    p.add_argument("--threads", type=int, help="BLAS threads (override run.threads)")
    p.add_argument("--no-plots", action="store_true", help="skip PNG figures")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.threads is not None:
        if args.threads < 1:
            print("error: --threads must be >= 1", file=sys.stderr)
            return 2
        # must happen before numpy loads its BLAS
        for var in _THREAD_VARS:
            os.environ[var] = str(args.threads)

    from .config import load_config
    from .errors import BrickworkError

    overrides = {}
    if args.command:
        overrides["run.command"] = args.command
    if args.seed is not None:
        overrides["run.seed"] = args.seed
    if args.out:
        overrides["run.out"] = args.out
    if args.threads is not None:
        overrides["run.threads"] = args.threads
    if args.no_plots:
        overrides["run.plots"] = False
    try:
        cfg = load_config(args.config, overrides)
        if args.threads is None and "numpy" not in sys.modules:
            for var in _THREAD_VARS:
                os.environ.setdefault(var, str(cfg["run"]["threads"]))
        from .commands import run

        rec, summary = run(cfg)
    except BrickworkError as exc:
        kind = "validation" if exc.exit_code == 2 else "numerical"
        print(f"{kind} error: {exc}", file=sys.stderr)
        dump = getattr(exc, "dump_path", None)
        if dump:
            print(f"failing matrix written to {dump}", file=sys.stderr)
        return exc.exit_code
    for line in summary:
        print(line)
    print(f"record: {os.path.join(cfg['run']['out'], 'record.json')} "
          f"(config {rec.config_hash[:12]}, {rec.wall_time:.2f} s)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
