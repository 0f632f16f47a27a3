"""Command-line front end.

Subcommands: ``entropy``, ``sweep``, ``spectrum``, ``modes``, ``repro`` and
``convergence``. Exit status is 0 on success, 2 for configuration or parse
errors and 3 for numerical failures.
"""
from __future__ import annotations

import argparse
import sys
import time
import warnings

import numpy as np

from . import __version__
from .config import ExperimentConfig, PIPELINE_PARAMS
from .errors import CascadeError, ConfigError
from .experiments import (N_LAMBDA_COLUMNS, build_field, convergence_check, heatmap,
                          refine_extrema, run_sweep)
from .output import csv_text, jsonl_text, write_text
from .repro import SUMMARY_HEADER, reproduce
from .schmidt import compare_results, decompose, normalize

LAMBDA_COLUMNS = [f"lambda_{k + 1}" for k in range(N_LAMBDA_COLUMNS)]


def _common_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("configuration")
    g.add_argument("--config", help="INI config file (flat section.key paths)")
    g.add_argument("--print-config", action="store_true", help="print the effective config and exit")
    g.add_argument("--expr", help="modulation expression, e.g. 'base * (phase(pi) + cav(i, 1))'")
    g.add_argument("--preset", help="named scheme: fa fb fc fd fe fs iterated")
    g.add_argument("--backend", choices=("svd", "kernel", "both"))
    g.add_argument("--out", help="output file (default: stdout)")
    g.add_argument("--format", dest="output_format", choices=("csv", "json"))
    g.add_argument("--points", type=int, help="grid points per axis")
    g.add_argument("--span", help="grid half-width in units of the idler decay rate")
    g.add_argument("--quadrature", choices=("midpoint", "trapezoid"))
    g.add_argument("--gamma3n", help="superradiant idler decay rate")
    g.add_argument("--gamma-tau", help="pulse duration times decay rate")
    g.add_argument("--max-modes", type=int)
    pg = p.add_argument_group("preset parameters")
    for name in PIPELINE_PARAMS:
        pg.add_argument("--" + name.replace("_", "-"), dest="param_" + name)
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(prog="cascadejsa", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("entropy", parents=[common], help="entropy and purity of one configuration")

    sw = sub.add_parser("sweep", parents=[common], help="1D or 2D parameter sweep")
    sw.add_argument("--axis")
    sw.add_argument("--from", dest="sweep_from")
    sw.add_argument("--to", dest="sweep_to")
    sw.add_argument("--steps", type=int)
    sw.add_argument("--scale", choices=("linear", "log"))
    sw.add_argument("--axis2")
    sw.add_argument("--from2", dest="sweep_from2")
    sw.add_argument("--to2", dest="sweep_to2")
    sw.add_argument("--steps2", type=int)
    sw.add_argument("--scale2", choices=("linear", "log"))
    sw.add_argument("--refine", type=int, help="recompute the entropy extrema at this many points")
    sw.add_argument("--workers", type=int)
    sw.add_argument("--heatmap", help="write the 2D entropy matrix to this CSV file")

    sub.add_parser("spectrum", parents=[common], help="|amplitude| map of the normalized field")

    md = sub.add_parser("modes", parents=[common], help="leading Schmidt mode pairs")
    md.add_argument("-n", type=int, dest="n_modes", help="number of mode pairs")

    rp = sub.add_parser("repro", parents=[common], help="headline numbers of every scheme")
    rp.add_argument("--no-convergence", action="store_true", help="skip the doubled-grid check")

    cv = sub.add_parser("convergence", parents=[common], help="entropy under grid doubling")
    cv.add_argument("--base-points", type=int, default=1024)
    cv.add_argument("--levels", type=int, default=3)
    return parser


_FLAG_KEYS = {
    "expr": "pipeline.expr", "preset": "pipeline.preset", "backend": "schmidt.backend",
    "out": "output.path", "output_format": "output.format", "points": "grid.points",
    "span": "grid.span_over_gamma", "quadrature": "grid.quadrature",
    "gamma3n": "physical.gamma3n_over_gamma", "gamma_tau": "physical.gamma_tau",
    "max_modes": "schmidt.max_modes", "axis": "sweep.axis", "sweep_from": "sweep.from",
    "sweep_to": "sweep.to", "steps": "sweep.steps", "scale": "sweep.scale", "axis2": "sweep.axis2",
    "sweep_from2": "sweep.from2", "sweep_to2": "sweep.to2", "steps2": "sweep.steps2",
    "scale2": "sweep.scale2", "refine": "sweep.refine", "workers": "sweep.workers",
    "n_modes": "output.modes",
}


def load_config(args, environ=None) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if args.config:
        cfg.apply_file(args.config)
    cfg.apply_env(environ)
    layer = {}
    for attr, key in _FLAG_KEYS.items():
        value = getattr(args, attr, None)
        if value is not None:
            layer[key] = value
    if args.command == "sweep" and args.points is not None:
        # sweeps run on their own (coarser) grid
        layer["sweep.points"] = layer.pop("grid.points")
    for name in PIPELINE_PARAMS:
        value = getattr(args, "param_" + name)
        if value is not None:
            layer["pipeline." + name] = value
    return cfg.apply(layer, "command line")


def _say(text):
    print(text, flush=True)


def _fmt6(x) -> str:
    return f"{x:.6g}"


def _record(res, ms):
    return {"backend": res.backend, "S": res.entropy, "purity": res.purity, "tail": res.tail,
            "n_modes": int(res.lambdas.size), "lambdas": res.lambdas.tolist(), "ms": ms}


def cmd_entropy(cfg: ExperimentConfig) -> int:
    grid = cfg.grid()
    field = build_field(cfg.pipeline(), cfg.physical(), grid, grid)
    backends = ("svd", "kernel") if cfg.backend == "both" else (cfg.backend,)
    results = []
    for backend in backends:
        t0 = time.perf_counter()
        res = decompose(field, backend, cfg.max_modes)
        results.append((res, (time.perf_counter() - t0) * 1e3))
        _say(f"[{backend}] S = {_fmt6(res.entropy)}  purity = {_fmt6(res.purity)}")
    if cfg.output_format == "json":
        text = jsonl_text(_record(r, ms) for r, ms in results)
    else:
        header = ["backend", "S", "purity", *LAMBDA_COLUMNS, "tail", "n_modes", "ms"]
        rows = [[r.backend, r.entropy, r.purity, *r.top(N_LAMBDA_COLUMNS), r.tail,
                 int(r.lambdas.size), ms] for r, ms in results]
        text = csv_text(header, rows)
    if len(results) == 2:
        cmp = compare_results(results[0][0], results[1][0])
        _say(f"backend agreement: max relative lambda gap {cmp.max_rel_lambda:.3e} over "
             f"{cmp.compared} modes, |dS| = {cmp.entropy_diff:.3e}")
    if cfg.output_path:
        write_text(cfg.output_path, text)
    return 0


def cmd_sweep(cfg: ExperimentConfig, heatmap_path=None) -> int:
    spec = cfg.sweep_spec()
    total = len(spec.grid_points())

    def progress(done, n):
        print(f"\rpoint {done}/{n}", end="" if done < n else "\n", file=sys.stderr, flush=True)

    records = run_sweep(spec, workers=cfg.workers, progress=progress)
    names = [ax.name for ax in spec.axes]
    if cfg.output_format == "json":
        text = jsonl_text({**r.values, "S": r.entropy, "purity": r.purity,
                           "lambdas": list(r.lambdas), "tail": r.tail, "ms": r.ms,
                           "error": r.error or None} for r in records)
    else:
        header = [*names, "S", "purity", *LAMBDA_COLUMNS, "tail", "ms", "error"]
        text = csv_text(header, ([*(r.values[n] for n in names), r.entropy, r.purity, *r.lambdas,
                                  r.tail, r.ms, r.error] for r in records))
    write_text(cfg.output_path, text)
    failed = sum(not r.ok for r in records)
    if failed:
        print(f"{failed} of {total} sweep points failed; see the error column", file=sys.stderr)
    if heatmap_path:
        a, b, mat = heatmap(spec, records)
        rows = [[av, *row] for av, row in zip(a, mat)]
        write_text(heatmap_path, csv_text([f"{names[0]}\\{names[1]}", *b], rows))
    if cfg.refine:
        for label, rec in refine_extrema(spec, records, cfg.refine).items():
            where = ", ".join(f"{k}={_fmt6(v)}" for k, v in rec.values.items())
            print(f"refined {label} at {where} ({cfg.refine} points): S = {_fmt6(rec.entropy)}  "
                  f"purity = {_fmt6(rec.purity)}", file=sys.stderr)
    return 0


def cmd_spectrum(cfg: ExperimentConfig) -> int:
    grid = cfg.grid()
    field = normalize(build_field(cfg.pipeline(), cfg.physical(), grid, grid))
    header = ["signal\\idler", *field.grid_i.nodes]
    rows = ([x, *row] for x, row in zip(field.grid_s.nodes, np.abs(field.amplitude)))
    write_text(cfg.output_path, csv_text(header, rows))
    return 0


def cmd_modes(cfg: ExperimentConfig) -> int:
    grid = cfg.grid()
    field = build_field(cfg.pipeline(), cfg.physical(), grid, grid)
    backend = "svd" if cfg.backend == "both" else cfg.backend
    res = decompose(field, backend, cfg.max_modes, modes=True)
    n = cfg.output_modes
    if n < 1 or n > res.lambdas.size:
        raise ConfigError(f"requested {n} modes but only {res.lambdas.size} were retained")
    psi, phi = res.modes
    header = ["detuning"]
    for k in range(1, n + 1):
        header += [f"re_psi_{k}", f"im_psi_{k}", f"re_phi_{k}", f"im_phi_{k}"]
    rows = []
    for j, x in enumerate(grid.nodes):
        row = [x]
        for k in range(n):
            row += [psi[j, k].real, psi[j, k].imag, phi[j, k].real, phi[j, k].imag]
        rows.append(row)
    write_text(cfg.output_path, csv_text(header, rows))
    for k in range(n):
        print(f"lambda_{k + 1} = {_fmt6(res.lambdas[k])}", file=sys.stderr)
    return 0


def cmd_repro(cfg: ExperimentConfig, convergence=True) -> int:
    rows = reproduce(cfg.physical(), cfg.span, cfg.points, convergence=convergence,
                     sweep_points=cfg.sweep_points,
                     progress=lambda label: print(f"running {label}", file=sys.stderr, flush=True))
    for r in rows:
        conv = "" if r.converged is None else f"  dS(2N)={r.ds:.2e} {'ok' if r.converged else 'NOT CONVERGED'}"
        _say(f"[{'PASS' if r.passed else 'FAIL'}] {r.item} {r.scheme}: {r.quantity} = {_fmt6(r.value)} "
             f"in [{r.low:g}, {r.high:g}]{conv}")
    if cfg.output_path:
        write_text(cfg.output_path, csv_text(SUMMARY_HEADER, (r.as_row() for r in rows)))
    return 0


def cmd_convergence(cfg: ExperimentConfig, base_points, levels) -> int:
    backend = "svd" if cfg.backend == "both" else cfg.backend
    rep = convergence_check(cfg.pipeline(), cfg.physical(), cfg.span, base_points, levels,
                            cfg.quadrature, backend)
    deltas = (float("nan"), *rep.deltas)
    for n, s, d in zip(rep.points, rep.entropies, deltas):
        _say(f"N = {n:6d}  S = {s:.9g}  |dS| = {d:.3e}")
    _say(f"converged: {rep.converged}  monotone: {rep.monotone}")
    if cfg.output_path:
        write_text(cfg.output_path, csv_text(["points", "S", "dS"], zip(rep.points, rep.entropies, deltas)))
    return 0


def main(argv=None, environ=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args, environ)
        if args.print_config:
            sys.stdout.write(cfg.to_text())
            return 0
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            if args.command == "entropy":
                return cmd_entropy(cfg)
            if args.command == "sweep":
                return cmd_sweep(cfg, args.heatmap)
            if args.command == "spectrum":
                return cmd_spectrum(cfg)
            if args.command == "modes":
                return cmd_modes(cfg)
            if args.command == "repro":
                return cmd_repro(cfg, convergence=not args.no_convergence)
            return cmd_convergence(cfg, args.base_points, args.levels)
    except CascadeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code if exc.exit_code in (2, 3) else 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # keep tracebacks away from users
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
