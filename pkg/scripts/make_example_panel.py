"""Write a synthetic two-group panel in the CLI's CSV layout.

    python3 scripts/make_example_panel.py out/ --per-group 10 --irregular
    midasclust cluster out/manifest.json -o out/cluster.json --plot-data out/curves.csv

With --irregular each period has 12, 13 or 14 high-frequency observations
(weeks per quarter style), and one extra period per subject is left with an
empty y as a forecast target.
"""

import argparse

import numpy as np

from midasclust.cli import write_panel_csv
from midasclust.fourier_midas import FourierBasis, transform_regressors
from midasclust.panel_core import MidasSeries
from midasclust.simulation import generate_two_cluster_panel


def irregular_panel(per_group, T, seed):
    rng = np.random.default_rng(seed)
    basis = FourierBasis(2, 3)
    centres = rng.standard_normal((2, basis.r))
    subjects, future = [], {}
    for g in range(2):
        for k in range(per_group):
            rows = [rng.standard_normal(m) for m in rng.choice([12, 13, 14], size=T + 1)]
            y = 0.5 + transform_regressors(rows, basis) @ centres[g] + 0.1 * rng.standard_normal(T + 1)
            sid = f"g{g}_{k}"
            subjects.append(MidasSeries(sid, y[:T], np.ones(T), rows[:T]))
            future[sid] = [(np.ones(1), rows[T])]
    return subjects, future


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("directory")
    ap.add_argument("--per-group", type=int, default=15)
    ap.add_argument("--T", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--irregular", action="store_true")
    args = ap.parse_args()
    if args.irregular:
        subjects, future = irregular_panel(args.per_group, args.T, args.seed)
    else:
        panel, _, _ = generate_two_cluster_panel(args.per_group, T=args.T, seed=args.seed)
        subjects, future = panel.subjects, None
    print(write_panel_csv(args.directory, subjects, future=future))


if __name__ == "__main__":
    main()
