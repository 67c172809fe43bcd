"""Overfitting demo: unregularized 1-8-2 network vs the true quadratic curve.

Prints the per-seed test-set errors and their ratio, then the median ratio.
A ratio above 1 means the overfit curve looks better than the truth under
test-set validation.
"""

import argparse

import numpy as np

from nlpca_validation.optimizer import CgConfig
from nlpca_validation.validation import quadratic_comparison


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--iters", type=int, default=5000)
    args = ap.parse_args()

    ratios = []
    for seed in range(args.seeds):
        r = quadratic_comparison(seed, cg=CgConfig(max_iterations=args.iters))
        ratios.append(r.ratio)
        print(f"seed {seed:3d}  overfit {r.overfit_error:.4f}  true {r.true_curve_error:.4f}"
              f"  ratio {r.ratio:.3f}", flush=True)
    print(f"median ratio {np.median(ratios):.3f}")


if __name__ == "__main__":
    main()
