#!/usr/bin/env python3
"""Critical-fee maps: estimates vs closed-form predictions.

Two sweeps: the threshold over (n_assets, n_agents) at fixed grid size and
risk aversion, and over (beta, n_agents) at fixed asset count. Writes the
rows as CSV and prints the mean relative gap to the prediction.
"""

import argparse
import csv
from pathlib import Path

import numpy as np

from impact_games import SweepBase, exponential_kernel, stability_sweep


def run(points, base, out_path):
    rows = stability_sweep(points, base)
    with open(out_path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["n_assets", "n_agents", "n_steps", "gamma", "beta",
                         "estimate", "predicted", "rel_discrepancy"])
        for row in rows:
            writer.writerow(
                [
                    int(row.params["n_assets"]),
                    int(row.params["n_agents"]),
                    int(row.params["n_steps"]),
                    row.params["gamma"],
                    row.params["beta"],
                    row.estimate,
                    row.predicted,
                    row.rel_discrepancy,
                ]
            )
    gaps = [row.rel_discrepancy for row in rows if row.rel_discrepancy is not None]
    return rows, float(np.mean(gaps))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="out/threshold_maps")
    parser.add_argument("--steps", type=int, default=100)
    parser.add_argument("--gamma", type=float, default=10.0)
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    base = SweepBase(kernel=exponential_kernel(), coupling=0.5, gamma=args.gamma, rel_tol=1e-4)

    size_points = [
        {"n_assets": m, "n_agents": j, "n_steps": args.steps}
        for m in (1, 2, 3)
        for j in (2, 3, 4)
    ]
    _, mean_gap = run(size_points, base, out / "size_map.csv")
    print(f"(n_assets, n_agents) map: mean relative gap to prediction {mean_gap:.2e}")

    crowd_points = [
        {"n_assets": 5, "n_agents": j, "n_steps": 50, "beta": beta}
        for beta in (0.0, 0.5, 1.0)
        for j in (2, 3, 4)
    ]
    _, mean_gap = run(crowd_points, base, out / "crowding_map.csv")
    print(f"(beta, n_agents) map:     mean relative gap to prediction {mean_gap:.2e}")
    print(f"rows written to {out}/")


if __name__ == "__main__":
    main()
