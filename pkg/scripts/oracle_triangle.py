"""Closed form, Riccati and Monte Carlo values of E exp(-mu Q_t) side by side."""

import argparse

import numpy as np

from sdelaplace.closedform import joint_laplace
from sdelaplace.model import alpha_bridge, ou
from sdelaplace.riccati import riccati_laplace
from sdelaplace.simulate import TimeGrid, sample_paths


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--paths", type=int, default=50000)
    ap.add_argument("--steps", type=int, default=400)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    cases = [
        ("ou(-1)", ou(-1.0), 1.0),
        ("ou(1)", ou(1.0), 1.0),
        ("bridge(0)", alpha_bridge(0.0), 0.9),
        ("bridge(1)", alpha_bridge(1.0), 0.9),
    ]
    print(f"{'model':>22} {'mu':>5} {'closed':>10} {'riccati':>10} {'mc':>10} {'z':>6}")
    for label, m, t in cases:
        batch = sample_paths(m, TimeGrid.for_model(m, t, args.steps), args.paths, args.seed)
        for mu in (0.25, 1.0, 4.0):
            cf = joint_laplace(m, t, mu)
            ric = riccati_laplace(m, t, mu)
            e = np.exp(-mu * batch.Q[:, 0])
            z = (e.mean() - cf) / (e.std(ddof=1) / np.sqrt(e.size))
            print(f"{label:>22} {mu:5.2f} {cf:10.6f} {ric:10.6f} {e.mean():10.6f} {z:6.2f}")


if __name__ == "__main__":
    main()
