"""Run every experiment (or a chosen subset) and print a one-line verdict per claim.

    python3 scripts/run_all.py [--config configs/quick.yaml] [--out results] [--only bhp,green]
"""
import argparse
import sys
import time

from sbmkit.cli import main as cli_main
from sbmkit.experiments import EXPERIMENTS


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--config")
    ap.add_argument("--out", default="results")
    ap.add_argument("--only", default="", help="comma-separated experiment ids")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    a = ap.parse_args(argv)
    ids = [s for s in a.only.split(",") if s] or list(EXPERIMENTS)
    status = 0
    for i in ids:
        t = time.time()
        args = ["run", "experiment", "--id", i, "--out", a.out, "--seed", str(a.seed), "--workers", str(a.workers)]
        if a.config:
            args += ["--config", a.config]
        rc = cli_main(args)
        print(f"== {i}: exit {rc} in {time.time() - t:.0f} s", flush=True)
        status = max(status, rc)
    return status


if __name__ == "__main__":
    sys.exit(main())
