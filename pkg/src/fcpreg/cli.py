"""Command-line interface: ``fcpreg {test,simulate,study,quantile}``.

Exit status is 0 whenever a command ran to completion, whatever the
statistical decision; it is 1 for pipeline or input errors and 2 for usage
errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import math
import os
import platform
import sys
import time
from pathlib import Path
from typing import Sequence

import numpy as np

from fcpreg import __version__
from fcpreg import io as fio
from fcpreg.detector import TestConfig, run_test, score_scale, trim_sample
from fcpreg.errors import FcpError, InvalidInput
from fcpreg.longrun import compute_scores, estimate_longrun_kernel
from fcpreg.montecarlo import critical_value, draw_limit_distributions
from fcpreg.regression import fit_concurrent_ols
from fcpreg.simulation import (
    PRESETS,
    TABLE1_SETTINGS,
    Alternative,
    DgpConfig,
    StudyCell,
    generate_dataset,
    run_study,
    study_grid,
)
from fcpreg.spectral import eigendecompose, truncate

log = logging.getLogger("fcpreg")

_WINDOWS = {"qs": "quadratic_spectral", "bartlett": "bartlett"}


def _env_seed() -> int:
    raw = os.environ.get("FCP_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise SystemExit(f"fcpreg: FCP_SEED must be an integer, got {raw!r}") from None


def _csv_list(kind):
    def parse(text: str):
        return [kind(v) for v in text.split(",") if v.strip()]

    return parse


# -- shared flag groups ---------------------------------------------------------


def _add_mc_flags(p: argparse.ArgumentParser, reps_default: int = 1000) -> None:
    p.add_argument("--reps", type=int, default=reps_default, help="Monte Carlo size R")
    p.add_argument("--seed", type=int, default=None, help="RNG seed (fallback: $FCP_SEED, then 0)")
    p.add_argument("--z-resolution", type=int, default=1000, help="bridge grid steps")
    p.add_argument("--threads", type=int, default=1, help="worker processes")


def _add_kernel_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--bandwidth", type=float, default=None, help="lag-window bandwidth h")
    p.add_argument("--max-lag", type=int, default=None, help="last lag in the kernel sum")
    p.add_argument("--window", choices=sorted(_WINDOWS), default="qs")
    p.add_argument("--truncation-fraction", type=float, default=0.85)


def _test_config(args, norm: str, rho: float) -> TestConfig:
    return TestConfig(
        norm=norm,
        rho=rho,
        R=args.reps,
        seed=args.seed,
        bandwidth_h=args.bandwidth,
        max_lag=args.max_lag,
        weight_window=_WINDOWS[args.window],
        truncation_fraction=args.truncation_fraction,
        z_resolution=args.z_resolution,
        n_jobs=args.threads,
    )


def _config_dict(cfg: TestConfig) -> dict:
    d = dataclasses.asdict(cfg)
    d.pop("n_jobs")
    return d


# -- test -----------------------------------------------------------------------


def cmd_test(args) -> int:
    sample = fio.load_sample(args.x_file, args.y_file)
    n_raw = sample.n
    if args.trim_head or args.trim_tail:
        sample = trim_sample(sample, args.trim_head, args.trim_tail)
    cfg = _test_config(args, args.norm, args.alpha)
    report = run_test(sample, cfg)

    doc = {
        "tool": "fcpreg",
        "version": __version__,
        "input": {
            "x_file": str(args.x_file),
            "y_file": str(args.y_file),
            "n_raw": n_raw,
            "n": sample.n,
            "T": sample.T,
            "trim_head": args.trim_head,
            "trim_tail": args.trim_tail,
            "trim_offset": math.floor(args.trim_head * n_raw),
        },
        "config": _config_dict(cfg),
        "results": [r.to_dict() for r in report.results.values()],
    }
    if args.emit_cusum:
        fio.write_cusum(args.emit_cusum, report.field)
    if args.save_eigensystem:
        fio.write_json(args.save_eigensystem, fio.eigensystem_to_dict(report.eigensystem))
    if args.out:
        fio.write_json(args.out, doc)
    if args.format == "json":
        sys.stdout.write(fio.dumps(doc))
    else:
        _print_results(report.results.values())
    return 0


def _print_results(results) -> None:
    print(f"{'norm':<5} {'statistic':>11} {'critical':>11} {'p-value':>8}  decision   change")
    for r in results:
        decision = "reject" if r.reject else "retain"
        flag = "" if r.reject else " (n.s.)"
        print(
            f"{r.norm:<5} {r.statistic:11.4f} {r.critical_value:11.4f} {r.p_value:8.4f}  "
            f"{decision:<9}  k={r.change_index}/{r.n} ({100 * r.change_fraction:.1f}%){flag}"
        )
    first = next(iter(results))
    d = first.diagnostics
    print(
        f"m={first.m_used} explained={first.explained_fraction:.3f} "
        f"h={d['bandwidth_h']:g} max_lag={d['max_lag']} trace={d['trace']:.4g}"
    )


# -- simulate -------------------------------------------------------------------


def _dgp_from_args(args) -> DgpConfig:
    return DgpConfig(
        n=args.n,
        T=args.T,
        design=args.design,
        alternative=Alternative.parse(args.alternative),
        change_fraction=args.change_fraction,
        D=args.D,
        ar_coef=args.ar_coef,
        sigma=args.sigma,
        burn_in=args.burn_in,
        seed=args.seed,
    )


def cmd_simulate(args) -> int:
    cfg = _dgp_from_args(args)
    data = generate_dataset(cfg)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    x_path = out / f"{args.prefix}x.csv"
    y_path = out / f"{args.prefix}y.csv"
    fio.write_sample(data.sample, x_path, y_path)
    meta = {
        "tool": "fcpreg",
        "version": __version__,
        "x_file": x_path.name,
        "y_file": y_path.name,
        "has_change": data.change_index is not None,
        "change_index": data.change_index,
        "change_fraction": None if data.change_index is None else data.change_index / cfg.n,
        "config": cfg.to_dict(),
    }
    fio.write_json(out / f"{args.prefix}meta.json", meta)
    print(f"wrote {x_path}, {y_path} ({cfg.n} curves x {cfg.T} points)")
    return 0


# -- study ----------------------------------------------------------------------


def _write_study(out: Path, cells: list[StudyCell], manifest: dict) -> None:
    rows = [{**row, "replications": c.replications} for c in cells for row in c.table_rows()]
    lines = ["n,setting,design,norm,rate,replications"]
    lines += [
        f"{r['n']},{r['setting']},{r['design']},{r['norm']},{r['rate']!r},{r['replications']}"
        for r in rows
    ]
    (out / "study.csv").write_text("\n".join(lines) + "\n")
    fio.write_json(out / "study.json", {"cells": [dataclasses.asdict(c) for c in cells], "table": rows})
    fio.write_json(out / "manifest.json", manifest)


def cmd_study(args) -> int:
    preset = PRESETS.get(args.preset, {}) if args.preset else {}
    ns = args.n or list(preset.get("n", (100, 300)))
    replications = args.replications or preset.get("replications", 300)
    designs = args.designs or ["iid", "ar1"]
    alternatives = args.alternatives or list(TABLE1_SETTINGS)
    test = _test_config(args, "both", args.alpha)
    cells = study_grid(ns, designs, alternatives, T=args.T, test=test)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "tool": "fcpreg",
        "version": __version__,
        "numpy": np.__version__,
        "python": platform.python_version(),
        "preset": args.preset,
        "master_seed": args.seed,
        "replications": replications,
        "n": ns,
        "designs": designs,
        "alternatives": alternatives,
        "T": args.T,
        "config": _config_dict(test),
        "cells_total": len(cells),
        "cells_done": 0,
        "complete": False,
    }
    done: list[StudyCell] = []
    start = time.perf_counter()

    def flush(c: int, cell: StudyCell) -> None:
        done.append(cell)
        manifest["cells_done"] = len(done)
        _write_study(out, done, manifest)
        log.info(
            "cell %d/%d n=%d %s %s: sup=%.3f L2=%.3f",
            c + 1, len(cells), cell.n, cell.design, cell.alternative,
            cell.rejection_rate_sup, cell.rejection_rate_l2,
        )

    _write_study(out, done, manifest)
    run_study(cells, replications, args.seed, args.threads, on_cell=flush)
    manifest["complete"] = True
    if args.record_time:
        manifest["wall_time_seconds"] = round(time.perf_counter() - start, 3)
    _write_study(out, done, manifest)
    print(f"{'n':>5} {'setting':<11} {'design':<5} {'L2':>6} {'sup':>6}")
    for c in done:
        print(
            f"{c.n:>5} {c.alternative:<11} {c.design:<5} "
            f"{c.rejection_rate_l2:6.3f} {c.rejection_rate_sup:6.3f}"
        )
    return 0


# -- quantile -------------------------------------------------------------------


def cmd_quantile(args) -> int:
    if args.eigensystem:
        eigs = fio.read_eigensystem(args.eigensystem)
        source = {"eigensystem": str(args.eigensystem)}
        scale = None
    elif args.x_file and args.y_file:
        sample = fio.load_sample(args.x_file, args.y_file)
        fit = fit_concurrent_ols(sample)
        kernel = estimate_longrun_kernel(
            compute_scores(fit), sample.grid, args.bandwidth, args.max_lag, _WINDOWS[args.window]
        )
        eigs = eigendecompose(kernel)
        source = {"x_file": str(args.x_file), "y_file": str(args.y_file)}
        scale = score_scale(fit, sample)
    else:
        raise InvalidInput("quantile needs either --eigensystem or both --x and --y")
    if args.save_eigensystem:
        fio.write_json(args.save_eigensystem, fio.eigensystem_to_dict(eigs))
    if args.m is not None:
        eigs = eigs.with_truncation(args.m)
    else:
        eigs = truncate(eigs, args.truncation_fraction, scale=scale)
    norms = ("sup", "l2") if args.norm == "both" else (args.norm,)
    draws = draw_limit_distributions(
        eigs, norms, args.reps, args.z_resolution, args.seed, args.threads
    )
    rows = []
    for rho in args.rho:
        row = {"rho": rho}
        for nm in norms:
            row[nm] = critical_value(draws[nm], rho)
        rows.append(row)
    doc = {
        "tool": "fcpreg",
        "version": __version__,
        "source": source,
        "m": eigs.m,
        "explained_fraction": eigs.explained_fraction,
        "trace": eigs.trace,
        "R": args.reps,
        "z_resolution": args.z_resolution,
        "seed": args.seed,
        "critical_values": rows,
    }
    if args.out:
        fio.write_json(args.out, doc)
    if args.format == "json":
        sys.stdout.write(fio.dumps(doc))
    else:
        print(f"m={eigs.m} explained={eigs.explained_fraction:.3f} R={args.reps}")
        print(f"{'rho':>6} " + " ".join(f"{nm:>10}" for nm in norms))
        for row in rows:
            print(f"{row['rho']:6.3f} " + " ".join(f"{row[nm]:10.4f}" for nm in norms))
    return 0


# -- parser ---------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fcpreg",
        description="CUSUM tests for slope changes in concurrent functional regression.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("test", help="run the change-point test on two curve CSV files")
    p.add_argument("x_file", type=Path, help="regressor curves, one per row")
    p.add_argument("y_file", type=Path, help="response curves, one per row")
    p.add_argument("--norm", choices=["sup", "l2", "both"], default="both")
    p.add_argument("--alpha", type=float, default=0.05, help="significance level rho")
    _add_mc_flags(p)
    _add_kernel_flags(p)
    p.add_argument("--trim-head", type=float, default=0.0, help="fraction of curves dropped at start")
    p.add_argument("--trim-tail", type=float, default=0.0, help="fraction of curves dropped at end")
    p.add_argument("--out", type=Path, help="write the JSON report here")
    p.add_argument("--emit-cusum", type=Path, help="write the (n+1) x T CUSUM field as CSV")
    p.add_argument("--save-eigensystem", type=Path, help="write the kernel eigensystem as JSON")
    p.add_argument("--format", choices=["text", "json"], default="text", help="stdout format")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("simulate", help="generate a synthetic dataset")
    p.add_argument("--design", choices=["iid", "ar1"], default="iid")
    p.add_argument("--n", type=int, default=300)
    p.add_argument("--T", type=int, default=101, help="grid points per curve")
    p.add_argument("--alternative", default="none", help="none, spiked, or scaled[:delta]")
    p.add_argument("--change-fraction", type=float, default=0.5)
    p.add_argument("--D", type=int, default=12, help="Fourier truncation level")
    p.add_argument("--ar-coef", type=float, default=0.8)
    p.add_argument("--sigma", type=float, default=4.0)
    p.add_argument("--burn-in", type=int, default=200)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-dir", type=Path, default=Path("."))
    p.add_argument("--prefix", default="", help="file name prefix")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("study", help="rejection-rate study over simulated designs")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--n", type=_csv_list(int), help="comma-separated sample sizes")
    p.add_argument("--designs", type=_csv_list(str), help="comma-separated: iid,ar1")
    p.add_argument("--alternatives", type=_csv_list(str), help="e.g. none,scaled:0.5,spiked")
    p.add_argument("--replications", type=int)
    p.add_argument("--T", type=int, default=101)
    p.add_argument("--alpha", type=float, default=0.05)
    _add_mc_flags(p, reps_default=100)
    _add_kernel_flags(p)
    p.add_argument("--out-dir", type=Path, default=Path("study"))
    p.add_argument("--record-time", action="store_true", help="store wall time in the manifest")
    p.set_defaults(func=cmd_study)

    p = sub.add_parser("quantile", help="simulate critical values of the limit distributions")
    p.add_argument("--x", dest="x_file", type=Path, help="regressor curves")
    p.add_argument("--y", dest="y_file", type=Path, help="response curves")
    p.add_argument("--eigensystem", type=Path, help="stored eigensystem JSON")
    p.add_argument("--save-eigensystem", type=Path)
    p.add_argument("--rho", type=_csv_list(float), default=[0.1, 0.05, 0.01])
    p.add_argument("--norm", choices=["sup", "l2", "both"], default="both")
    p.add_argument("--m", type=int, help="fixed truncation level instead of the variance rule")
    _add_mc_flags(p)
    _add_kernel_flags(p)
    p.add_argument("--out", type=Path)
    p.add_argument("--format", choices=["text", "json"], default="text")
    p.set_defaults(func=cmd_quantile)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
    )
    if getattr(args, "seed", 0) is None:
        args.seed = _env_seed()
    try:
        return args.func(args)
    except FcpError as exc:
        print(f"fcpreg: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
