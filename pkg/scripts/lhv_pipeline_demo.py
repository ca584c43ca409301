"""Fit classical models to random observable sets and report reproduction errors.

Also contrasts the two fit modes on the GHZ set and checks sampled moments
of one fitted model against its analytic values.
"""
import argparse
import itertools
import time

import numpy as np

from qmoments.catalog import ghz_observables, ghz_state
from qmoments.hilbert import expect_real, sym_product
from qmoments.instances import DEFAULT_SEED, random_contextual_instance
from qmoments.lhv import fit


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--instances", type=int, default=200)
    ap.add_argument("--seed", type=int, default=DEFAULT_SEED)
    ap.add_argument("--draws", type=int, default=400_000)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    t0 = time.perf_counter()
    worst, failures, sizes = 0.0, 0, []
    for _ in range(args.instances):
        st, obs = random_contextual_instance(rng)
        res = fit(st, obs)
        worst = max(worst, res.max_residual)
        failures += not res.success
        sizes.append(len(obs))
    print(f"{args.instances} random instances ({min(sizes)}-{max(sizes)} observables): "
          f"max residual {worst:.2e}, failures {failures}, {time.perf_counter() - t0:.2f}s")

    for mode in ("contextual", "noncontextual"):
        res = fit(ghz_state(), ghz_observables(), mode=mode)
        labels, q, m = res.worst()
        names = " ".join(str(lab) for lab in labels)
        print(f"GHZ {mode:>13}: max residual {res.max_residual:.3g} on <{names}> (quantum {q:+.3f}, model {m:+.3f})")

    st, obs = random_contextual_instance(np.random.default_rng(args.seed + 1))
    res = fit(st, obs)
    x = res.sample(args.seed, args.draws)
    print(f"\nsampling {args.draws} draws from a fitted {len(obs)}-observable model (lambda={res.model.lam:.3g}):")
    for idx in itertools.combinations_with_replacement(range(len(obs)), 2):
        if not obs.is_measurable(idx):
            continue
        prod = np.prod(x[:, list(idx)], axis=1)
        se = prod.std() / np.sqrt(len(prod))
        q = expect_real(st, sym_product([obs.operators[i] for i in idx]))
        print(f"  <{' '.join(str(obs.labels[i]) for i in idx)}>  quantum {q:+.5f}  sampled {prod.mean():+.5f} +- {se:.5f}")


if __name__ == "__main__":
    main()
