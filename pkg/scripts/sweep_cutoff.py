"""Lowest eigenvalue of M and the sign of det(4M) across Fock cutoffs.

Writes a CSV table; with --large also times a few big cutoffs.
"""
import argparse
import time
from pathlib import Path

from qmoments.search import cutoff_sweep, first_negative_determinant, min_eigenpair, sweep_to_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-max", type=int, default=40)
    ap.add_argument("--out", type=Path, default=Path("results/sweep.csv"))
    ap.add_argument("--large", action="store_true", help="also run N = 300, 1000, 3000, 10000")
    args = ap.parse_args()

    rows = cutoff_sweep(args.n_max)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(sweep_to_csv(rows))
    for r in rows:
        print(f"{r.N:4d}  {r.det4M_sign:+d}  {r.lambda_min: .10f}")
    print(f"first negative det(4M): N = {first_negative_determinant(rows)}")

    if args.large:
        for N in (300, 1000, 3000, 10000):
            t0 = time.perf_counter()
            res = min_eigenpair(N)
            dt = time.perf_counter() - t0
            print(f"N={N:6d}  lambda_min={res.lambda_min: .6f}  residual={res.residual:.1e}  {dt:.2f}s")


if __name__ == "__main__":
    main()
