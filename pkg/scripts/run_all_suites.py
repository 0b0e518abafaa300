"""Run every benchmark suite at desk scale and write one CSV per suite.

    python3 scripts/run_all_suites.py --out results/
"""

import argparse
import sys
import time
from pathlib import Path

from gigaapi.bench import SUITES, SuiteSpec, run_suite
from gigaapi.io_formats import write_bench_csv


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--devices", type=int, default=2)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--suites", nargs="+", choices=SUITES, default=list(SUITES))
    args = ap.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    failed = []
    for name in args.suites:
        t0 = time.perf_counter()
        spec = SuiteSpec(
            name,
            device_count=args.devices,
            seed=args.seed,
            out_dir=args.out / "spectra" if name == "fft" else None,
            trace_path=args.out / "evidence_trace.tsv" if name == "evidence" else None,
        )
        res = run_suite(spec)
        if res.records:
            write_bench_csv(args.out / f"{name}.csv", res.records)
        print(f"== {name} ({time.perf_counter() - t0:.1f} s)")
        for line in res.summary:
            print("  " + line)
        if not res.passed:
            failed.append(name)
    if failed:
        print("failed suites: " + ", ".join(failed), file=sys.stderr)
    return 2 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
