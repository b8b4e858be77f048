"""Command line front end: ``burgers-pinn {solve,check,sweep,export}``.

Exit codes:
    0  success
    2  invalid arguments or configuration
    3  unknown problem id
    4  training produced a non-finite loss
    5  a hard check failed
    6  every sweep cell failed
    7  checkpoint missing, unreadable or not matching the problem
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import struct
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import network
from .config import ConfigError, RunConfig, atomic_write_text
from .evaluate import default_grid_n, exactness_oracle, gradient_check, report, sweep
from .problems import PROBLEM_IDS, UnknownProblemError, get_problem
from .training import TrainingDiverged, history_csv, train

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_UNKNOWN_PROBLEM = 3
EXIT_DIVERGED = 4
EXIT_CHECK_FAILED = 5
EXIT_SWEEP_FAILED = 6
EXIT_CHECKPOINT = 7

ORACLE_TOL = 1e-8
GRADIENT_TOL = 1e-4

log = logging.getLogger("burgers_pinn")

# flag name -> RunConfig field; values are parsed with the config file rules
_RUN_FLAGS = {
    "problem": "problem",
    "layers": "layers",
    "width": "width",
    "epochs": "epochs",
    "n-interior": "n_interior",
    "n-initial": "n_initial",
    "n-boundary": "n_boundary",
    "seed": "seed",
    "resample": "resample",
    "lambda-ic": "lambda_ic",
    "lambda-bc": "lambda_bc",
    "learning-rate": "learning_rate",
    "normalize": "normalize",
    "log-every": "log_every",
    "max-seconds": "max_seconds",
    "reynolds": "reynolds",
    "times": "times",
    "grid-n": "grid_n",
    "norm": "norm",
    "output-dir": "output_dir",
    "formats": "formats",
    "sweep-layers": "sweep_layers",
    "sweep-widths": "sweep_widths",
}


def _add_run_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="flat key = value configuration file; flags override it")
    for flag, name in _RUN_FLAGS.items():
        p.add_argument(f"--{flag}", dest=name, metavar=name.upper(), default=None)


def _run_config(args) -> RunConfig:
    cfg = cfgmod.load(args.config) if args.config else RunConfig()
    overrides = {}
    for name in _RUN_FLAGS.values():
        raw = getattr(args, name)
        if raw is not None:
            overrides[name] = cfgmod.parse_value(name, raw)
    return dataclasses.replace(cfg, **overrides).validate()


def _problem(cfg: RunConfig):
    return get_problem(cfg.problem, R=cfg.reynolds)


def plot_rows(net, problem, points) -> tuple[list[str], np.ndarray]:
    pred = network.forward(net, points)
    exact = problem.exact(points)
    coords = ["x", "t"] if problem.n_space == 1 else ["x", "y", "t"]
    header, cols = list(coords), [points]
    for k, v in enumerate(problem.variables):
        header += [f"{v}_pred", f"{v}_exact", f"{v}_abs_err"]
        cols.append(np.column_stack([pred[:, k], exact[:, k], np.abs(pred[:, k] - exact[:, k])]))
    return header, np.column_stack(cols)


def _csv(header, rows) -> str:
    lines = [",".join(header)]
    lines += [",".join(repr(float(x)) for x in row) for row in rows]
    return "\n".join(lines) + "\n"


def spacetime_points(problem, n_space=None, n_time=None):
    n_space = n_space or (201 if problem.n_space == 1 else 41)
    n_time = n_time or (101 if problem.n_space == 1 else 21)
    axes = [np.linspace(lo, hi, n_space) for lo, hi in problem.space_box]
    axes.append(np.linspace(0.0, problem.t_max, n_time))
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def write_plot_data(net, problem, times, grid_n, out_dir: Path) -> list[Path]:
    from .evaluate import evaluation_grid

    written = []
    for t in times:
        header, rows = plot_rows(net, problem, evaluation_grid(problem, t, grid_n))
        path = out_dir / f"{problem.id}_t{t:g}.csv"
        atomic_write_text(path, _csv(header, rows))
        written.append(path)
    header, rows = plot_rows(net, problem, spacetime_points(problem))
    path = out_dir / f"{problem.id}_spacetime.csv"
    atomic_write_text(path, _csv(header, rows))
    written.append(path)
    return written


def cmd_solve(args) -> int:
    cfg = _run_config(args)
    problem = _problem(cfg)
    times = cfg.times or list(problem.eval_times)
    grid_n = cfg.grid_n or default_grid_n(problem)
    tc = cfg.train_config()
    log.info("training %s with L=%d H=%d", problem.id, tc.layers, tc.width)
    result = train(problem, tc)
    snapshot = {k: cfgmod.format_value(cfg, k) for k in RunConfig.__dataclass_fields__ if k != "output_dir"}
    rep = report(result.net, problem, times, grid_n, cfg.norm, config=snapshot)
    out = Path(cfg.output_dir)
    network.save_checkpoint(result.net, out / "checkpoint.bin")
    atomic_write_text(out / "loss_history.csv", history_csv(result.history))
    if "csv" in cfg.formats:
        atomic_write_text(out / "error_report.csv", rep.to_csv())
    if "json" in cfg.formats:
        atomic_write_text(out / "error_report.json", rep.to_json())
    cfgmod.save(dataclasses.replace(cfg, times=times, grid_n=grid_n), out / "run.cfg")
    write_plot_data(result.net, problem, times, grid_n, out)
    print(rep.to_csv(), end="")
    return EXIT_OK


def cmd_check(args) -> int:
    ids = args.problems or list(PROBLEM_IDS)
    ok = True
    for pid in ids:
        problem = get_problem(pid)
        residual = exactness_oracle(problem, n_points=1000, seed=0)
        if problem.exact_is_solution:
            passed = residual < ORACLE_TOL
            ok &= passed
            status = "pass" if passed else "FAIL"
        else:
            status = "report-only"
        grad_err = gradient_check(problem, n_params=20, seed=0)
        grad_ok = grad_err < GRADIENT_TOL
        ok &= grad_ok
        print(
            f"{pid}: oracle max|residual| = {residual:.3e} ({status}); "
            f"gradient max rel err = {grad_err:.3e} ({'pass' if grad_ok else 'FAIL'})"
        )
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_sweep(args) -> int:
    cfg = _run_config(args)
    problem = _problem(cfg)
    result = sweep(problem, cfg.sweep_layers, cfg.sweep_widths, cfg.train_config(), cfg.grid_n)
    out = Path(cfg.output_dir)
    atomic_write_text(out / "sweep.csv", result.to_csv())
    print(result.to_csv(), end="")
    if result.selected is None:
        print("every sweep cell failed", file=sys.stderr)
        return EXIT_SWEEP_FAILED
    L, H = result.selected
    cfgmod.save(dataclasses.replace(cfg, layers=L, width=H), out / "selected.cfg")
    print(f"selected layers={L} width={H} (t={result.t:g})")
    return EXIT_OK


def cmd_export(args) -> int:
    problem = get_problem(args.problem, R=args.reynolds)
    path = Path(args.checkpoint)
    try:
        net = network.load_checkpoint(path)
    except (OSError, ValueError, struct.error) as exc:
        print(f"cannot read checkpoint {path}: {exc}", file=sys.stderr)
        return EXIT_CHECKPOINT
    if (net.n_in, net.n_out) != (problem.n_in, problem.n_out):
        print(
            f"checkpoint maps {net.n_in}->{net.n_out} but {problem.id} needs {problem.n_in}->{problem.n_out}",
            file=sys.stderr,
        )
        return EXIT_CHECKPOINT
    times = [float(t) for t in args.times.split(",")] if args.times else list(problem.figure_times or problem.eval_times)
    grid_n = args.grid_n or default_grid_n(problem)
    out = Path(args.output_dir or cfgmod.default_output_dir())
    for p in write_plot_data(net, problem, times, grid_n, out):
        print(p)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="burgers-pinn", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="train, evaluate and export one problem")
    _add_run_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("check", help="exactness oracles and gradient checks")
    p.add_argument("problems", nargs="*", help=f"problem ids (default: {' '.join(PROBLEM_IDS)})")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("sweep", help="grid search over depth and width")
    _add_run_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("export", help="plot data from a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--problem", required=True)
    p.add_argument("--reynolds", type=float, default=None)
    p.add_argument("--times", help="comma separated evaluation times")
    p.add_argument("--grid-n", type=int, default=None)
    p.add_argument("--output-dir", default=None)
    p.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UnknownProblemError as exc:
        print(f"error: {exc.args[0]}", file=sys.stderr)
        return EXIT_UNKNOWN_PROBLEM
    except TrainingDiverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
