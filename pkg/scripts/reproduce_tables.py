"""Print the Monte Carlo summary tables at a chosen replication count.

    python3 scripts/reproduce_tables.py --reps 200 --jobs 8
    python3 scripts/reproduce_tables.py --only clustering --reps 50
"""

import argparse
import time

from midasclust.simulation import DEFAULT_LAMBDA_GRID, SHAPES, Cell, run_mc


def estimation(reps, seed, jobs):
    cells = [Cell(shape=s, m=m, method=meth) for s in SHAPES for m in (20, 40) for meth in ("fourier", "br")]
    rows = run_mc("estimation", cells, reps, seed, jobs)
    print(f"{'shape':<10}{'m':>4}{'Fourier':>10}{'B&R':>10}   median RMSE x100")
    for four, br in zip(rows[::2], rows[1::2]):
        print(f"{four.cell.shape:<10}{four.cell.m:>4}{four.summary['rmse']:>10.4f}{br.summary['rmse']:>10.4f}")


def forecasting(reps, seed, jobs):
    rows = run_mc("forecasting", [Cell(), Cell(method="br")], reps, seed, jobs)
    print(f"median RMSFE (exp, T=100, m=20): Fourier {rows[0].summary['rmsfe']:.4f}, "
          f"B&R {rows[1].summary['rmsfe']:.4f}")


def selection(reps, seed, jobs):
    cells = [Cell(shape=s, method="fourier_ic", L=4, K=4, criterion=c, count="coefficients")
             for s in ("linear", "cyclical", "discrete") for c in ("AIC", "AICc", "BIC")]
    rows = run_mc("estimation", cells, reps, seed, jobs)
    print(f"{'shape':<10}{'IC':<6}{'RMSE':>8}{'mean L':>8}{'mean K':>8}")
    for r in rows:
        s = r.summary
        print(f"{r.cell.shape:<10}{r.cell.criterion:<6}{s['rmse']:>8.4f}{s['L']:>8.2f}{s['K']:>8.2f}")


def clustering(reps, seed, jobs):
    cells = [Cell(method="f_clust", alpha1=0.4, theta=th, lambda1=lam)
             for th in (2.0, 2.5) for lam in (*DEFAULT_LAMBDA_GRID, None)]
    rows = run_mc("clustering", cells, reps, seed, jobs)
    print(f"{'theta':>6}{'lambda1':>9}{'RMSE':>8}{'Rand':>8}{'ARI':>8}{'G':>7}")
    for r in rows:
        s = r.summary
        lam = "BIC" if r.cell.lambda1 is None else f"{r.cell.lambda1:g}"
        print(f"{r.cell.theta:>6g}{lam:>9}{s['rmse']:>8.4f}{s['rand']:>8.4f}{s['ari']:>8.4f}{s['G']:>7.2f}")


def methods(reps, seed, jobs):
    cells = [Cell(method=meth, alpha1=a) for a in (0.2, 0.4) for meth in ("f_noclust", "f_clust", "br_clust")]
    rows = run_mc("clustering", cells, reps, seed, jobs)
    print(f"{'alpha1':>7}{'method':>11}{'RMSE':>8}{'Rand':>8}{'G':>7}")
    for r in rows:
        s = r.summary
        print(f"{r.cell.alpha1:>7g}{r.cell.method:>11}{s['rmse']:>8.4f}{s['rand']:>8.4f}{s['G']:>7.2f}")


TABLES = {"estimation": estimation, "forecasting": forecasting, "selection": selection,
          "clustering": clustering, "methods": methods}


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--reps", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--only", choices=sorted(TABLES), action="append")
    args = ap.parse_args()
    for name in args.only or TABLES:
        start = time.perf_counter()
        print(f"\n== {name} ({args.reps} replications)")
        TABLES[name](args.reps, args.seed, args.jobs)
        print(f"({time.perf_counter() - start:.1f} s)")


if __name__ == "__main__":
    main()
