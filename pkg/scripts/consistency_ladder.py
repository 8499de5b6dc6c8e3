"""Median |alpha_hat - alpha| along delta = 1e-1 .. 1e-12 for a few alphas."""

import argparse

import numpy as np

from sdelaplace.closedform import fisher_info
from sdelaplace.mle import estimate_alpha_batch
from sdelaplace.model import alpha_bridge
from sdelaplace.simulate import TimeGrid, sample_paths, time_at_tail


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--alphas", type=float, nargs="+", default=[0.0, 0.5, 1.0])
    ap.add_argument("--paths", type=int, default=2000)
    ap.add_argument("--steps", type=int, default=4000)
    ap.add_argument("--seed", type=int, default=3)
    args = ap.parse_args()

    deltas = [10.0 ** -k for k in range(1, 13)]
    for alpha in args.alphas:
        m = alpha_bridge(alpha)
        times = [float(time_at_tail(m, d * m.S_T)) for d in deltas]
        grid = TimeGrid.geometric(m, times[-1], args.steps).including(times)
        batch = sample_paths(m, grid, args.paths, args.seed, at=times)
        print(f"alpha = {alpha}")
        for d, t in zip(deltas, times):
            med = np.median(np.abs(estimate_alpha_batch(m, batch, t).alpha_hat - alpha))
            print(f"  delta {d:7.0e}  I {fisher_info(m, t):10.2f}  median |err| {med:.4f}")


if __name__ == "__main__":
    main()
