"""Command-line front end: ``oslalm {simulate,reconstruct,compare,analyze}``.

Errors end the process with a nonzero status and a single stderr line
``error[<category>]: <message>``. Categories and exit codes:

    config 3   bad configuration or option values
    input  4   missing or inconsistent input files
    numeric 5  a numerical check could not be carried out
    io     6   operating-system level read/write failures

Usage errors reported by argparse exit with status 2.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import analysis
from .ct import build_system_matrix
from .experiment import ConfigError, build_case, load_config, simulate
from .fileio import (
    export_pgm,
    geometry_from_meta,
    geometry_meta,
    grid_from_meta,
    grid_meta,
    read_raw,
    read_sidecar,
    save_image,
    write_raw,
    write_sidecar,
)
from .linalg import ConvergenceError, Diagonal
from .majorizer import diagonal_majorizer, majorization_check, scalar_majorizer
from .solvers import ALGORITHMS, ConvergenceLog, SolverOptions, run_reconstruction
from .solvers.prox import ExactQuadraticProx

__all__ = ["main", "SIM_FILES", "CliError"]

#: Files written by ``simulate``.
SIM_FILES = ("phantom.f32", "sinogram.f32", "weights.f32", "scan.txt")

EXIT = {"config": 3, "input": 4, "numeric": 5, "io": 6}


class CliError(Exception):
    def __init__(self, category, message):
        super().__init__(message)
        self.category = category


def _config(args):
    cfg = load_config(args.config, args.set or ())
    if getattr(args, "out", None):
        cfg.data["output"] = str(args.out)
    return cfg


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _sha(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# -- simulate -------------------------------------------------------------


def cmd_simulate(args):
    cfg = _config(args)
    out = cfg.output
    out.mkdir(parents=True, exist_ok=True)
    x_true, A, y, W = simulate(cfg)
    write_raw(out / "phantom.f32", x_true)
    write_raw(out / "sinogram.f32", y)
    write_raw(out / "weights.f32", W.diag)
    noise = cfg.data["noise"]
    meta = {**grid_meta(cfg.grid), **geometry_meta(cfg.geometry)}
    meta.update(I0=float(noise["I0"]), seed=int(noise["seed"]))
    write_sidecar(out / "scan.txt", meta)
    print(f"wrote {', '.join(SIM_FILES)} to {out}")
    return 0


# -- reconstruct ----------------------------------------------------------


def _load_scan(cfg):
    out = cfg.output
    missing = [f for f in SIM_FILES if not (out / f).exists()]
    if missing:
        raise CliError("input", f"{out}: missing {', '.join(missing)}; run 'oslalm simulate' first")
    meta = read_sidecar(out / "scan.txt")
    grid, geo = grid_from_meta(meta, out / "scan.txt"), geometry_from_meta(meta, out / "scan.txt")
    if (grid.nx, grid.ny) != (cfg.grid.nx, cfg.grid.ny) or geo.n_rays != cfg.geometry.n_rays:
        raise CliError("input", f"{out}/scan.txt does not match the configured grid/geometry")
    try:
        x_true = read_raw(out / "phantom.f32", grid.size)
        y = read_raw(out / "sinogram.f32", geo.n_rays)
        w = read_raw(out / "weights.f32", geo.n_rays)
    except ValueError as e:
        raise CliError("input", f"shape mismatch: {e}") from None
    return x_true, y, Diagonal(w)


def _case(cfg):
    x_true, y, W = _load_scan(cfg)
    A = build_system_matrix(cfg.grid, cfg.geometry)
    ref_path = cfg.output / "reference.f32"
    x_ref = read_raw(ref_path, cfg.grid.size) if ref_path.exists() else None
    case = build_case(cfg, A, y, W, x_true, x_ref)
    if x_ref is None:
        case.problem.x_ref = write_raw(ref_path, case.problem.x_ref).astype(np.float64)
    return case, ref_path


def _options(args, cfg):
    named = dict(cfg.solver_options())
    if args.algorithm in named:
        opts = named[args.algorithm]
    elif args.algorithm in ALGORITHMS:
        opts = SolverOptions(algorithm=args.algorithm)
    else:
        choices = ", ".join(list(ALGORITHMS) + list(named))
        raise CliError("config", f"unknown algorithm {args.algorithm!r}; choose from {choices}")
    upd = {}
    for key in ("M", "rho", "n_inner", "max_epochs", "gamma", "majorizer", "prox", "rho_min"):
        v = getattr(args, key)
        if v is not None:
            upd[key] = v
    if args.continuation:
        upd["mode"] = "continuation"
    if args.bb:
        upd["bb"] = True
    if args.no_timing:
        upd["timing"] = False
    try:
        return replace(opts, **upd)
    except ValueError as e:
        raise CliError("config", str(e)) from None


def cmd_reconstruct(args):
    cfg = _config(args)
    opts = _options(args, cfg)
    case, ref_path = _case(cfg)
    x0 = case.x0
    x, log = run_reconstruction(case.problem, opts, x0=x0)
    name = args.name or opts.label
    out = cfg.output
    save_image(out / name, x, cfg.grid, algorithm=opts.label, reference_sha256=_sha(ref_path))
    log.to_csv(out / f"{name}.csv")
    if args.pgm:
        export_pgm(out / f"{name}.pgm", x, cfg.grid, args.window)
    last = log.rows[-1]
    print(f"{name}: {last.epoch} epochs, rmsd {last.rmsd:.6g}, wrote {out / name}.f32 and {name}.csv")
    return 0


# -- compare --------------------------------------------------------------


def _resolve_run(out, run):
    p = Path(run)
    if p.suffix != ".csv":
        p = out / f"{run}.csv"
    if not p.exists():
        raise CliError("input", f"missing log file {p}")
    return p


def cmd_compare(args):
    cfg = _config(args)
    out = cfg.output
    logs, shas = [], set()
    for run in args.runs:
        p = _resolve_run(out, run)
        side = p.with_suffix(".txt")
        if side.exists():
            shas.add(read_sidecar(side).get("reference_sha256"))
        logs.append(ConvergenceLog.from_csv(p, name=p.stem))
    if len(shas) > 1:
        raise CliError("input", "runs were measured against different references")
    series = [lg.rmsd_by_epoch() for lg in logs]
    n = max(len(s) for s in series)
    rows = [[e] + [repr(float(s[e])) if e < len(s) else "" for s in series] for e in range(n)]
    dest = Path(args.output or out / "compare.csv")
    _write_rows(dest, ["epoch"] + [lg.name for lg in logs], rows)
    if args.plot:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(6, 4))
        for lg, s in zip(logs, series):
            ax.semilogy(np.arange(len(s)), s, label=lg.name)
        ax.set_xlabel("epoch")
        ax.set_ylabel("RMS difference to reference")
        ax.legend()
        fig.tight_layout()
        fig.savefig(args.plot)
        plt.close(fig)
    print(f"wrote {dest}")
    return 0


# -- analyze --------------------------------------------------------------


def _emit(args, header, rows):
    if args.output:
        _write_rows(args.output, header, rows)
        print(f"wrote {args.output}")
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def cmd_analyze_damping(args):
    rows = []
    for q in args.lambda_ratio:
        for rho in args.rho:
            try:
                rep = analysis.classify_damping(q, rho)
            except ValueError as e:
                raise CliError("config", str(e)) from None
            psi = "" if rep.damped_frequency is None else rep.damped_frequency
            row = [q, rho, rep.rho_c, rep.regime, rep.rate, rep.modulus, psi]
            if args.measure:
                row.append(analysis.measured_rate(q, rho, steps=args.steps))
            rows.append(row)
    header = ["lambda_ratio", "rho", "rho_c", "regime", "rate", "modulus", "damped_frequency"]
    _emit(args, header + (["measured"] if args.measure else []), rows)
    return 0


def cmd_analyze_gap(args):
    problem = analysis.quadratic_gap_problem(args.size, args.beta, args.seed)
    x_hat = analysis.solve_quadratic(problem)
    prox = ExactQuadraticProx(problem.reg, problem.grid)
    run = analysis.gap_run(problem, prox, np.zeros(problem.n), x_hat, args.rho, args.iters)
    rows = [[k + 1, g, b, int(g <= b)] for k, (g, b) in enumerate(zip(run.gaps, run.bounds))]
    _emit(args, ["k", "gap", "bound", "within"], rows)
    if not np.all(run.gaps <= run.bounds):
        raise CliError("numeric", "measured gap exceeded the bound")
    return 0


def cmd_analyze_restart(args):
    if args.log:
        p = Path(args.log)
        if not p.exists():
            raise CliError("input", f"missing log file {p}")
        log = ConvergenceLog.from_csv(p)
        rho = log.column("rho")
        if rho.size < 2 or np.all(rho == rho[0]):
            raise CliError("input", f"{p} is not a continuation log (constant rho)")
        if args.mu is None or args.L is None:
            raise CliError("config", "--mu and --L are required with --log")
        mu, L = args.mu, args.L
    elif args.mu_ratio is not None:
        log, mu, L = analysis.quadratic_restart_run(args.mu_ratio, args.n, args.iters, args.seed)
    else:
        raise CliError("input", "restart analysis needs a continuation log (--log) or --mu-ratio")
    try:
        rep = analysis.restart_period_check(log, mu, L)
    except ValueError as e:
        raise CliError("numeric", str(e)) from None
    _emit(
        args,
        ["mu", "L", "restarts", "mean_interval", "episode_mean_interval", "predicted", "rel_deviation"],
        [[mu, L, rep.intervals.size + 1, rep.mean, rep.episode_mean, rep.predicted, rep.rel_deviation]],
    )
    return 0


def cmd_analyze_majorization(args):
    cfg = _config(args)
    x_true, A, y, W = simulate(cfg)
    rows = []
    for kind, maj in (("scalar", scalar_majorizer(A, W)), ("diagonal", diagonal_majorizer(A, W))):
        rep = majorization_check(A, W, maj, samples=args.samples, seed=args.seed)
        rows.append([kind, rep.samples, rep.worst_margin, int(rep.passed)])
    _emit(args, ["majorizer", "samples", "worst_margin", "passed"], rows)
    if not all(r[3] for r in rows):
        raise CliError("numeric", "majorization check failed")
    return 0


# -- parser ---------------------------------------------------------------


def _add_config(p):
    p.add_argument("-c", "--config", help="YAML config file (built-in defaults when omitted)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key, e.g. noise.I0=1e6")
    p.add_argument("--out", help="output directory (overrides 'output')")


def build_parser():
    ap = argparse.ArgumentParser(prog="oslalm", description="OS-LALM PWLS CT reconstruction experiments")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write phantom, sinogram, weights and scan sidecar")
    _add_config(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("reconstruct", help="run one algorithm on simulated data")
    p.add_argument("algorithm", help=f"one of {', '.join(ALGORITHMS)} or a solver name from the config")
    _add_config(p)
    p.add_argument("--M", type=int, help="number of subsets")
    p.add_argument("--rho", type=float, help="fixed AL penalty parameter")
    p.add_argument("--continuation", action="store_true", help="downward continuation of rho")
    p.add_argument("--rho-min", dest="rho_min", type=float)
    p.add_argument("--n", dest="n_inner", type=int, help="inner FISTA iterations")
    p.add_argument("--epochs", dest="max_epochs", type=int)
    p.add_argument("--bb", action="store_true", help="Barzilai-Borwein scaling of the majorizer")
    p.add_argument("--gamma", type=float, help="majorizer growth for os-rnes05")
    p.add_argument("--majorizer", choices=("diagonal", "scalar"))
    p.add_argument("--prox", choices=("fista", "exact"))
    p.add_argument("--name", help="output stem (default: the algorithm label)")
    p.add_argument("--no-timing", action="store_true", help="write zeros in the seconds column")
    p.add_argument("--pgm", action="store_true", help="also export a 16-bit PGM")
    p.add_argument("--window", type=float, nargs=2, metavar=("LO", "HI"), help="PGM display window")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("compare", help="merge rmsd-vs-epoch of several runs")
    p.add_argument("runs", nargs="+", help="run names or CSV log paths")
    _add_config(p)
    p.add_argument("--output", help="merged CSV path (default: <output>/compare.csv)")
    p.add_argument("--plot", help="also render a PNG plot here")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("analyze", help="theory checks")
    asub = p.add_subparsers(dest="analysis", required=True)

    q = asub.add_parser("damping", help="damping regime and rates")
    q.add_argument("--lambda-ratio", dest="lambda_ratio", type=float, nargs="+", required=True)
    q.add_argument("--rho", type=float, nargs="+", required=True)
    q.add_argument("--measure", action="store_true", help="also simulate the scalar recurrence")
    q.add_argument("--steps", type=int, default=6000)
    q.add_argument("--output")
    q.set_defaults(func=cmd_analyze_damping)

    q = asub.add_parser("gap", help="primal-dual gap versus its bound on a quadratic problem")
    q.add_argument("--size", type=int, default=16)
    q.add_argument("--beta", type=float, default=0.5)
    q.add_argument("--rho", type=float, default=0.5)
    q.add_argument("--iters", type=int, default=200)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--output")
    q.set_defaults(func=cmd_analyze_gap)

    q = asub.add_parser("restart", help="restart spacing of a continuation run")
    q.add_argument("--log", help="continuation ConvergenceLog CSV")
    q.add_argument("--mu", type=float)
    q.add_argument("--L", type=float)
    q.add_argument("--mu-ratio", dest="mu_ratio", type=float, help="run a constructed quadratic instead")
    q.add_argument("--n", type=int, default=50)
    q.add_argument("--iters", type=int, default=1000)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--output")
    q.set_defaults(func=cmd_analyze_restart)

    q = asub.add_parser("majorization", help="sampled majorization check on the configured scan")
    _add_config(q)
    q.add_argument("--samples", type=int, default=1000)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--output")
    q.set_defaults(func=cmd_analyze_majorization)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as e:
        cat, msg = e.category, str(e)
    except ConfigError as e:
        cat, msg = "config", str(e)
    except ConvergenceError as e:
        cat, msg = "numeric", str(e)
    except OSError as e:
        cat, msg = "io", str(e)
    print(f"error[{cat}]: {msg}", file=sys.stderr)
    return EXIT[cat]


if __name__ == "__main__":
    sys.exit(main())
