"""Command-line interface: estimate, cluster, simulate, forecast.

Panel data come as two CSV files bound by a JSON manifest:

  low-frequency:  subject_id, period_index, y, z_1, ..., z_q
  high-frequency: subject_id, period_index, intra_index, x

Exit codes: 0 success, 2 input/schema error, 3 rank deficiency,
4 no clustering fit converged.
"""

import argparse
import csv
import json
import os
import sys
from collections import defaultdict
from dataclasses import asdict
from itertools import product
from pathlib import Path

import numpy as np

from . import __version__
from .clustering import PenaltyConfig, tune_theta_strategy
from .errors import InvalidConfig, RankDeficient, SchemaError
from .fourier_midas import (
    FourierBasis,
    basis_scores,
    build_transform_matrix,
    fit_midas_ols,
    info_criterion,
    rolling_rmsfe,
    select_basis,
)
from .panel_core import MidasSeries, PanelDataset
from .simulation import SHAPES, Cell, run_mc

SCHEMA_VERSION = "1.0"
EXIT_OK, EXIT_SCHEMA, EXIT_RANK, EXIT_NOCONV = 0, 2, 3, 4

LOW_FIXED = ["subject_id", "period_index", "y"]
HIGH_COLUMNS = ["subject_id", "period_index", "intra_index", "x"]


def fmt(v) -> str:
    """Lossless float text: shortest repr that round-trips (at most 17 significant digits)."""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


# ingestion


def _read_rows(path, delimiter, header):
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise SchemaError(f"cannot open: {exc.strerror}", path) from None
    with fh:
        rows = list(csv.reader(fh, delimiter=delimiter))
    if header:
        if not rows:
            raise SchemaError("file is empty, expected a header", path, 1)
        return [c.strip() for c in rows[0]], list(enumerate(rows[1:], start=2))
    return None, list(enumerate(rows, start=1))


def _number(text, path, line, column, kind=float):
    text = text.strip()
    if text == "":
        raise SchemaError(f"missing value in column {column!r}", path, line)
    try:
        v = float(text)
    except ValueError:
        raise SchemaError(f"column {column!r}: {text!r} is not a number", path, line) from None
    if not np.isfinite(v):
        raise SchemaError(f"column {column!r}: non-finite value {text!r}", path, line)
    if kind is int:
        if v != int(v):
            raise SchemaError(f"column {column!r}: {text!r} is not an integer", path, line)
        return int(v)
    return v


def _check_low_header(cols, path):
    if cols[:3] != LOW_FIXED:
        raise SchemaError(f"header must start with {','.join(LOW_FIXED)}, got {','.join(cols[:3])}", path, 1)
    q = len(cols) - 3
    expected = [f"z_{k}" for k in range(1, q + 1)]
    if cols[3:] != expected:
        raise SchemaError(f"covariate columns must be {','.join(expected) or '(none)'}, got {','.join(cols[3:])}",
                          path, 1)
    return q


def read_panel(manifest_path, L=None, K=None):
    """Load a manifest and its two CSV files into a PanelDataset.

    Returns (panel, forecast_rows) where forecast_rows maps subject id to the
    (z, x) of trailing periods whose y is left empty.
    """
    manifest_path = Path(manifest_path)
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise SchemaError(f"cannot open manifest: {exc.strerror}", manifest_path) from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"manifest is not valid JSON: {exc.msg}", manifest_path, exc.lineno) from None
    for key in ("low_frequency", "high_frequency"):
        if key not in manifest:
            raise SchemaError(f"manifest lacks {key!r}", manifest_path)
    base = manifest_path.parent
    delimiter = manifest.get("delimiter", ",")
    header = bool(manifest.get("header", True))
    lead = int(manifest.get("lead", 0))
    basis = FourierBasis(int(L if L is not None else manifest.get("L", 2)),
                         int(K if K is not None else manifest.get("K", 3)))
    low_path = base / manifest["low_frequency"]
    high_path = base / manifest["high_frequency"]

    cols, rows = _read_rows(low_path, delimiter, header)
    if cols is not None:
        q = _check_low_header(cols, low_path)
    else:
        if not rows:
            raise SchemaError("file is empty", low_path)
        q = len(rows[0][1]) - 3
        if q < 0:
            raise SchemaError("need at least subject_id, period_index, y", low_path, rows[0][0])
    low = {}
    for line, row in rows:
        if not row or all(c.strip() == "" for c in row):
            continue
        if len(row) != q + 3:
            raise SchemaError(f"expected {q + 3} fields, found {len(row)}", low_path, line)
        sid = row[0].strip()
        if sid == "":
            raise SchemaError("missing subject_id", low_path, line)
        period = _number(row[1], low_path, line, "period_index", int)
        y = None if row[2].strip() == "" else _number(row[2], low_path, line, "y")
        z = [_number(v, low_path, line, f"z_{k + 1}") for k, v in enumerate(row[3:])]
        if (sid, period) in low:
            raise SchemaError(f"duplicate (subject_id, period_index) = ({sid}, {period})", low_path, line)
        low[(sid, period)] = (y, z, line)

    cols, rows = _read_rows(high_path, delimiter, header)
    if cols is not None and cols != HIGH_COLUMNS:
        raise SchemaError(f"header must be {','.join(HIGH_COLUMNS)}, got {','.join(cols)}", high_path, 1)
    high = defaultdict(dict)
    for line, row in rows:
        if not row or all(c.strip() == "" for c in row):
            continue
        if len(row) != 4:
            raise SchemaError(f"expected 4 fields, found {len(row)}", high_path, line)
        sid = row[0].strip()
        period = _number(row[1], high_path, line, "period_index", int)
        j = _number(row[2], high_path, line, "intra_index", int)
        x = _number(row[3], high_path, line, "x")
        if (sid, period) not in low:
            raise SchemaError(f"no low-frequency row for subject {sid!r}, period {period}", high_path, line)
        if j in high[(sid, period)]:
            raise SchemaError(f"duplicate intra_index {j} for ({sid}, {period})", high_path, line)
        high[(sid, period)][j] = (x, line)

    blocks = {}
    for key, (_, _, line) in low.items():
        obs = high.get(key)
        if not obs:
            raise SchemaError(f"no high-frequency rows for subject {key[0]!r}, period {key[1]}", low_path, line)
        m = len(obs)
        if sorted(obs) != list(range(m)):
            first_bad = min(set(obs) ^ set(range(m)))
            bad_line = obs[first_bad][1] if first_bad in obs else max(v[1] for v in obs.values())
            raise SchemaError(f"intra_index for ({key[0]}, {key[1]}) is not contiguous from 0", high_path, bad_line)
        # intra_index j lines up with lag weight j
        blocks[key] = np.array([obs[j][0] for j in range(m)])

    by_subject = defaultdict(list)
    for sid, period in low:
        by_subject[sid].append(period)
    subjects, pending = [], {}
    for sid in by_subject:
        periods = sorted(by_subject[sid])
        ys, zs, xs = [], [], []
        future = []
        for period in periods:
            src = period - lead
            if (sid, src) not in low:
                continue
            y = low[(sid, period)][0]
            z = low[(sid, src)][1]
            if y is None:
                future.append((period, z, blocks[(sid, src)]))
                continue
            if future:
                line = low[(sid, future[0][0])][2]
                raise SchemaError(f"subject {sid!r}: y is missing for a period before an observed one", low_path,
                                  line)
            ys.append(y)
            zs.append(z)
            xs.append(blocks[(sid, src)])
        if not ys:
            raise SchemaError(f"subject {sid!r} has no usable observations", low_path)
        ms = {x.size for x in xs}
        X = np.vstack(xs) if len(ms) == 1 else xs
        subjects.append(MidasSeries(sid, np.array(ys), np.array(zs).reshape(len(ys), q), X))
        pending[sid] = future
    return PanelDataset(subjects, basis), pending


def write_panel_csv(directory, subjects, L=2, K=3, lead=0, future=None):
    """Write subjects (MidasSeries) to the two-file layout and return the manifest path.

    ``future`` optionally maps subject id to a list of (z, x) rows appended
    with an empty y, i.e. periods to forecast.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    q = subjects[0].q
    with open(directory / "low.csv", "w", newline="", encoding="utf-8") as lf, \
            open(directory / "high.csv", "w", newline="", encoding="utf-8") as hf:
        lw, hw = csv.writer(lf), csv.writer(hf)
        lw.writerow(LOW_FIXED + [f"z_{k}" for k in range(1, q + 1)])
        hw.writerow(HIGH_COLUMNS)
        for s in subjects:
            rows = [(s.y[t], s.Z[t], np.asarray(s.X[t])) for t in range(s.T)]
            rows += [("", np.asarray(z, dtype=float).reshape(q), np.asarray(x)) for z, x in (future or {}).get(s.id, [])]
            for t, (y, z, x) in enumerate(rows):
                lw.writerow([s.id, t, fmt(y) if y != "" else ""] + [fmt(v) for v in z])
                for j, v in enumerate(x):
                    hw.writerow([s.id, t, j, fmt(v)])
    manifest = {"low_frequency": "low.csv", "high_frequency": "high.csv", "delimiter": ",", "header": True,
                "L": L, "K": K, "lead": lead}
    path = directory / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    return path


# output helpers


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return None if np.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


def _emit_json(report, args):
    report = {"schema_version": SCHEMA_VERSION, **report}
    text = json.dumps(_jsonable(report), indent=2, sort_keys=False) + "\n"
    if getattr(args, "stdout", False):
        sys.stdout.write(text)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    return text


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def read_csv_report(path):
    """Read a CSV report back, converting numeric fields to float."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            rec = {}
            for k, v in row.items():
                try:
                    rec[k] = float(v)
                except ValueError:
                    rec[k] = v
            out.append(rec)
    return out


def _warn(msg):
    print(f"midasclust: {msg}", file=sys.stderr)


def _jobs(value):
    if value is not None:
        return max(1, int(value))
    env = os.environ.get("MIDAS_CLUSTER_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            _warn(f"ignoring MIDAS_CLUSTER_THREADS={env!r}")
    return 1


def parse_grid(text):
    """'1:4.5:0.5' (inclusive range) or '1,2,3'."""
    text = text.strip()
    if ":" in text:
        parts = [float(v) for v in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise argparse.ArgumentTypeError(f"bad range {text!r}, use start:stop:step")
        start, stop, step = parts
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + k * step, 12) for k in range(n)]
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad grid {text!r}") from None


def _fit_subject(series, args, basis):
    if args.select_basis:
        scores = basis_scores(series.y, series.Z, series.X, args.Lmax, args.Kmax, args.select_basis, args.count)
        chosen, fit = select_basis(series.y, series.Z, series.X, args.Lmax, args.Kmax, args.select_basis,
                                   args.count)
        table = [{"L": L, "K": K, "value": (v if fit_ is not None else None)}
                 for (L, K), (v, fit_) in sorted(scores.items())]
        return chosen, fit, table
    return basis, fit_midas_ols(series.y, series.Z, series.X, basis), None


def _fit_report(series, basis, fit, table):
    ms = sorted(set(int(m) for m in series.period_m))
    q = series.q
    r = fit.residuals
    ics = {kind: info_criterion(fit.rss, fit.T, basis.L, basis.K, kind) for kind in ("AIC", "AICc", "BIC")}
    out = {
        "subject_id": series.id,
        "L": basis.L,
        "K": basis.K,
        "T": fit.T,
        "alpha": fit.alpha,
        "beta": fit.beta,
        "beta_star": {str(m): fit.weights(m) for m in ms},
        "information_criteria": ics,
        "residuals": {
            "rss": fit.rss,
            "sigma2": fit.sigma2,
            "mean": float(r.mean()),
            "std": float(r.std(ddof=0)),
            "durbin_watson": float(np.sum(np.diff(r) ** 2) / fit.rss) if fit.rss > 0 else None,
        },
        "covariates": [f"z_{k}" for k in range(1, q + 1)],
    }
    if table is not None:
        out["selection"] = table
    return out


# commands


def cmd_estimate(args):
    panel, _ = read_panel(args.data, args.L, args.K)
    fits = []
    for s in panel.subjects:
        basis, fit, table = _fit_subject(s, args, panel.basis)
        fits.append(_fit_report(s, basis, fit, table))
    _emit_json({"command": "estimate", "select_basis": args.select_basis, "subjects": fits}, args)
    return EXIT_OK


def _column_names(panel):
    names = [f"z_{k}" for k in range(1, panel.q + 1)]
    names += [f"poly_{l}" for l in range(panel.basis.L + 1)]
    for k in range(1, panel.basis.K + 1):
        names += [f"sin_{k}", f"cos_{k}"]
    return names


def cmd_cluster(args):
    panel, _ = read_panel(args.data, args.L, args.K)
    if panel.n < 2:
        raise SchemaError("clustering needs at least two subjects", args.data)
    names = _column_names(panel)
    selection = None
    if args.exclude:
        excluded = [c.strip() for c in args.exclude.split(",") if c.strip()]
        unknown = [c for c in excluded if c not in names]
        if unknown:
            raise SchemaError(f"unknown columns for --exclude: {','.join(unknown)} (known: {','.join(names)})")
        keep = [k for k, c in enumerate(names) if c not in excluded]
        if not keep:
            raise SchemaError("--exclude removes every column")
        selection = np.eye(panel.p)[keep]
    base = PenaltyConfig(kind=args.penalty, theta=max(args.theta_schedule), max_iter=args.max_iter)
    try:
        search = tune_theta_strategy(panel, args.theta_schedule, args.lambda_grid, args.penalty, base, selection)
    except InvalidConfig as exc:
        raise SchemaError(str(exc)) from None
    sol = search.solution
    if not search.admissible:
        _warn("no theta in the schedule reached the convex region; reporting the best-BIC fit")
    ms = sorted({int(m) for s in panel.subjects for m in s.period_m})
    labels = sol.partition.as_array()
    groups = []
    plot_rows = []
    for g in range(sol.G):
        members = [panel.ids[i] for i in np.flatnonzero(labels == g)]
        coef = sol.coefficients[labels == g].mean(axis=0)
        beta = coef[panel.q:]
        weights = {}
        for m in ms:
            w = build_transform_matrix(m, panel.basis).T @ beta
            weights[str(m)] = w
            for j, v in enumerate(w):
                plot_rows.append((g, m, j, j / m, v, "", ""))
        groups.append({"group": g, "size": len(members), "members": members,
                       "coefficients": dict(zip(names, coef)), "weights": weights})
    report = {
        "command": "cluster",
        "penalty": args.penalty,
        "theta": search.theta,
        "lambda1": search.lambda1,
        "admissible": search.admissible,
        "G": sol.G,
        "partition": {sid: int(g) for sid, g in zip(panel.ids, labels)},
        "groups": groups,
        "bic": sol.bic,
        "bic_trace": [{"theta": t, "lambda1": lam, "G": G, "bic": b, "converged": conv, "iterations": it}
                      for t, path in search.paths.items() for lam, G, b, conv, it in path],
        "convexity_trace": [{"theta": t, "lambda1": lam, "c_star": c, "admissible": a}
                            for t, lam, c, a in search.trace],
        "convergence": {"converged": sol.converged, "iterations": sol.iterations,
                        "primal_residual": sol.state.primal_residual_norm,
                        "dual_residual": sol.state.dual_residual_norm},
        "excluded_columns": args.exclude.split(",") if args.exclude else [],
    }
    if args.plot_data:
        _write_csv(args.plot_data, ["group", "m", "j", "j_over_m", "weight", "ci_low", "ci_high"], plot_rows)
    _emit_json(report, args)
    if not any(row[3] for path in search.paths.values() for row in path):
        _warn("no fit on the grid met the ADMM tolerances within the iteration cap")
        return EXIT_NOCONV
    if not sol.converged:
        _warn(f"selected fit stopped at the iteration cap ({sol.iterations})")
    return EXIT_OK


STUDY_DEFAULT_REPS = {"estimation": 500, "forecasting": 100, "clustering": 50}
STUDY_FULL_REPS = {"estimation": 1000, "forecasting": 1000, "clustering": 200}
STUDY_DEFAULT_METHODS = {"estimation": "fourier", "forecasting": "fourier", "clustering": "f_clust"}


# named grids covering the standard study layouts
GRID_PRESETS = {
    "shapes": dict(study="estimation", shapes=",".join(SHAPES), m="20,40", methods="fourier"),
    "forecast": dict(study="forecasting", shapes="exp", m="20", methods="fourier,br"),
    "basis-selection": dict(study="estimation", shapes="linear,cyclical,discrete", m="20", methods="fourier_ic",
                            L=4, K=4),
    "lambda-path": dict(study="clustering", alpha1="0.4", theta="2,2.5", lambda1="1:4.5:0.5",
                        methods="f_clust"),
    "methods": dict(study="clustering", alpha1="0.2,0.4", methods="f_noclust,f_clust,br_clust"),
}


def _apply_preset(args):
    preset = GRID_PRESETS[args.grid]
    if args.study is not None and args.study != preset["study"]:
        raise SchemaError(f"--grid {args.grid} belongs to --study {preset['study']}")
    for key, value in preset.items():
        setattr(args, key, value)


def _simulation_cells(args):
    shapes = [s.strip() for s in args.shapes.split(",")]
    for s in shapes:
        if s not in SHAPES:
            raise SchemaError(f"unknown shape {s!r}; choose from {','.join(SHAPES)}")
    methods = [m.strip() for m in (args.methods or STUDY_DEFAULT_METHODS[args.study]).split(",")]
    Ts = [int(v) for v in parse_grid(args.T)]
    ms = [int(v) for v in parse_grid(args.m)]
    alphas = parse_grid(args.alpha1)
    thetas = parse_grid(args.theta)
    lambdas = [None] if args.lambda1 == "bic" else parse_grid(args.lambda1)
    cells = []
    if args.study == "clustering":
        for T, m, a, method, th, lam in product(Ts, ms, alphas, methods, thetas, lambdas):
            cells.append(Cell(T=T, m=m, alpha1=a, method=method, theta=th, lambda1=lam, per_group=args.per_group,
                              L=args.L, K=args.K))
    else:
        for shape, T, m, a, method in product(shapes, Ts, ms, alphas, methods):
            cells.append(Cell(shape=shape, T=T, m=m, alpha1=a, method=method, L=args.L, K=args.K,
                              criterion=args.criterion, count=args.count))
    return cells


def cmd_simulate(args):
    if args.grid:
        _apply_preset(args)
    if args.study is None:
        raise SchemaError("give --study or --grid")
    reps = args.reps or (STUDY_FULL_REPS if args.full_scale else STUDY_DEFAULT_REPS)[args.study]
    cells = _simulation_cells(args)
    results = run_mc(args.study, cells, reps, seed=args.seed, jobs=_jobs(args.jobs))
    metric_keys = sorted({k for r in results for k in r.summary})
    cell_keys = list(asdict(cells[0]).keys())
    rows = []
    for r in results:
        label = asdict(r.cell)
        rows.append([label[k] if label[k] is not None else "bic" for k in cell_keys]
                    + [r.replications, r.failures] + [r.summary.get(k, "") for k in metric_keys])
    report = {
        "command": "simulate",
        "study": args.study,
        "seed": args.seed,
        "replications": reps,
        "seed_rule": "SeedSequence(seed, spawn_key=(cell_index, replication))",
        "cells": [{"cell": asdict(r.cell), "replications": r.replications, "failures": r.failures,
                   "summary": r.summary, "errors": r.errors[:5],
                   **({"draws": r.draws} if args.draws else {})} for r in results],
    }
    if args.output:
        out = Path(args.output)
        _write_csv(out.with_suffix(".csv"), cell_keys + ["replications", "failures"] + metric_keys, rows)
        args.output = str(out.with_suffix(".json"))
    _emit_json(report, args)
    total_fail = sum(r.failures for r in results)
    if total_fail:
        _warn(f"{total_fail} replication(s) failed and were excluded (see 'failures')")
    return EXIT_OK


def _load_model(path):
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return {s["subject_id"]: s for s in data["subjects"]}


def cmd_forecast(args):
    panel, pending = read_panel(args.data, args.L, args.K)
    models = _load_model(args.model) if args.model else None
    rows, backtests = [], []
    for s in panel.subjects:
        if models is not None:
            if s.id not in models:
                raise SchemaError(f"model file has no subject {s.id!r}", args.model)
            model = models[s.id]
            basis = FourierBasis(int(model["L"]), int(model["K"]))
            alpha, beta = np.asarray(model["alpha"], dtype=float), np.asarray(model["beta"], dtype=float)
        else:
            basis, fit, _ = _fit_subject(s, args, panel.basis)
            alpha, beta = fit.alpha, fit.beta
        for period, z, x in pending.get(s.id, []):
            xt = build_transform_matrix(x.size, basis) @ x
            rows.append((s.id, period, float(np.asarray(z) @ alpha + xt @ beta)))
        if args.backtest:
            rmsfe = rolling_rmsfe(s.y, s.Z, s.X, basis)
            backtests.append((s.id, basis.L, basis.K, s.T // 2, rmsfe))
    text_rows = [("subject_id", "period_index", "y_hat")] + rows
    if args.output:
        _write_csv(args.output, text_rows[0], rows)
    if args.backtest and args.backtest_output:
        _write_csv(args.backtest_output, ["subject_id", "L", "K", "forecasts", "rmsfe"], backtests)
    if args.stdout:
        w = csv.writer(sys.stdout)
        for row in text_rows:
            w.writerow([fmt(v) for v in row])
        if args.backtest:
            w.writerow(["subject_id", "L", "K", "forecasts", "rmsfe"])
            for row in backtests:
                w.writerow([fmt(v) for v in row])
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="midasclust", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def data_args(sp):
        sp.add_argument("data", help="manifest JSON binding the low- and high-frequency CSV files")
        sp.add_argument("--L", type=int, default=None, help="polynomial order (overrides manifest)")
        sp.add_argument("--K", type=int, default=None, help="trigonometric frequencies (overrides manifest)")
        sp.add_argument("--output", "-o", default=None)
        sp.add_argument("--stdout", action="store_true", help="also write the report to stdout")

    def basis_args(sp):
        sp.add_argument("--select-basis", choices=["AIC", "AICc", "BIC"], default=None)
        sp.add_argument("--Lmax", type=int, default=4)
        sp.add_argument("--Kmax", type=int, default=4)
        sp.add_argument("--count", choices=["standard", "coefficients"], default="standard",
                        help="parameter count used by the information criterion")

    e = sub.add_parser("estimate", help="fit the Fourier MIDAS regression per subject")
    data_args(e)
    basis_args(e)
    e.set_defaults(func=cmd_estimate)

    c = sub.add_parser("cluster", help="cluster subjects by fused-penalty ADMM")
    data_args(c)
    c.add_argument("--theta-schedule", type=parse_grid, default=[2.5])
    c.add_argument("--lambda-grid", type=parse_grid, default=parse_grid("1:4.5:0.5"))
    c.add_argument("--penalty", choices=["mcp", "scad"], default="mcp")
    c.add_argument("--select", "--exclude", dest="exclude", default=None,
                   help="comma-separated columns left out of clustering, e.g. z_1 or poly_0")
    c.add_argument("--max-iter", type=int, default=3000)
    c.add_argument("--plot-data", default=None, help="tidy CSV of group weight curves")
    c.add_argument("--jobs", type=int, default=None)
    c.set_defaults(func=cmd_cluster)

    s = sub.add_parser("simulate", help="Monte-Carlo studies")
    s.add_argument("--study", choices=sorted(STUDY_DEFAULT_REPS), default=None)
    s.add_argument("--grid", choices=sorted(GRID_PRESETS), default=None,
                   help="named cell grid; overrides the per-axis flags below")
    s.add_argument("--shapes", default="exp")
    s.add_argument("--T", default="100")
    s.add_argument("--m", default="20")
    s.add_argument("--alpha1", default="0.2")
    s.add_argument("--methods", default=None)
    s.add_argument("--L", type=int, default=2)
    s.add_argument("--K", type=int, default=3)
    s.add_argument("--criterion", choices=["AIC", "AICc", "BIC"], default="BIC")
    s.add_argument("--count", choices=["standard", "coefficients"], default="standard")
    s.add_argument("--theta", default="2.5")
    s.add_argument("--lambda1", default="bic", help="'bic' to tune over 1:4.5:0.5, or a grid")
    s.add_argument("--per-group", type=int, default=15)
    s.add_argument("--reps", type=int, default=None)
    s.add_argument("--full-scale", action="store_true")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--jobs", type=int, default=None)
    s.add_argument("--draws", action="store_true", help="include per-replication values in the JSON")
    s.add_argument("--output", "-o", default=None, help="output prefix; writes .csv and .json")
    s.add_argument("--stdout", action="store_true")
    s.set_defaults(func=cmd_simulate)

    f = sub.add_parser("forecast", help="one-step-ahead forecasts and rolling backtests")
    data_args(f)
    basis_args(f)
    f.add_argument("--model", default=None, help="estimate report to take coefficients from")
    f.add_argument("--backtest", action="store_true")
    f.add_argument("--backtest-output", default=None)
    f.set_defaults(func=cmd_forecast)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_SCHEMA if exc.code else EXIT_OK
    try:
        return args.func(args)
    except SchemaError as exc:
        _warn(f"schema error: {exc}")
        return EXIT_SCHEMA
    except RankDeficient as exc:
        _warn(f"rank deficiency: {exc}")
        return EXIT_RANK
    except (InvalidConfig, ValueError) as exc:
        _warn(f"invalid input: {exc}")
        return EXIT_SCHEMA


if __name__ == "__main__":
    sys.exit(main())
