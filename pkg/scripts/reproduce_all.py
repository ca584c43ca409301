"""Run every catalog check, the eigen-search and the GHZ fits; print a summary and save JSON."""
import argparse
import time
from pathlib import Path

from qmoments.cli import DEFAULT_SEED, report_all
from qmoments.io import dumps


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=DEFAULT_SEED)
    ap.add_argument("--out", type=Path, default=Path("results/report_all.json"))
    args = ap.parse_args()

    t0 = time.perf_counter()
    out = report_all(args.seed)
    print("\n".join(out.text))
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(dumps(out.payload) + "\n")
    status = "all expectations met" if not out.failures else f"{len(out.failures)} expectation(s) failed"
    print(f"\n{status} in {time.perf_counter() - t0:.2f}s; wrote {args.out}")
    for f in out.failures:
        print("  FAILED:", f)
    return 1 if out.failures else 0


if __name__ == "__main__":
    raise SystemExit(main())
