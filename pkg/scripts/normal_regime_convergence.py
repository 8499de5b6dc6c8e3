"""KS distance of the Fisher-normalized MLE from N(0, 1) as t approaches T.

Normal regime (alpha > K) of the alpha-Brownian bridge. The distance falls
slowly, roughly with log(1/delta), since I_alpha(t) grows only like log.
"""

import argparse

from sdelaplace.closedform import fisher_info
from sdelaplace.mle import estimate_alpha_batch, fisher_normalized_error
from sdelaplace.model import alpha_bridge
from sdelaplace.simulate import TimeGrid, sample_paths
from sdelaplace.stats import ks_1samp


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--alpha", type=float, default=1.0)
    ap.add_argument("--paths", type=int, default=4000)
    ap.add_argument("--steps", type=int, default=4000)
    ap.add_argument("--seed", type=int, default=11)
    args = ap.parse_args()

    m = alpha_bridge(args.alpha)
    print(f"{'delta':>8} {'t':>14} {'I_alpha':>9} {'KS D':>7} {'p':>10}")
    for delta in (1e-2, 1e-4, 1e-8, 1e-12, 1e-16):
        grid = TimeGrid.toward_T(m, delta, args.steps)
        batch = sample_paths(m, grid, args.paths, args.seed)
        res = estimate_alpha_batch(m, batch, grid.t_end)
        z = fisher_normalized_error(m, res, args.alpha)
        D, p = ks_1samp(z, "norm")
        print(f"{delta:8.0e} {grid.t_end:14.12f} {fisher_info(m, grid.t_end):9.2f} {D:7.3f} {p:10.2e}")


if __name__ == "__main__":
    main()
