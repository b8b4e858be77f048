"""Error norms against closed-form solutions, reports and the (L, H) sweep."""

from __future__ import annotations

import dataclasses
import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import network
from .network import Mlp
from .problems import ProblemSpec
from .sampling import sample_problem

log = logging.getLogger(__name__)

NORMS = ("rms", "abs", "relative")


def default_grid_n(problem: ProblemSpec) -> int:
    return 1001 if problem.n_space == 1 else 101


def evaluation_grid(problem: ProblemSpec, t: float, grid_n: int) -> np.ndarray:
    """Uniform tensor grid over the spatial box at time ``t``, endpoints included."""
    if grid_n < 2:
        raise ValueError(f"grid_n must be at least 2, got {grid_n}")
    axes = [np.linspace(lo, hi, grid_n) for lo, hi in problem.space_box]
    mesh = np.meshgrid(*axes, indexing="ij")
    space = np.stack([m.ravel() for m in mesh], axis=1)
    return np.column_stack([space, np.full(len(space), float(t))])


def norms_from_errors(err, exact=None, norm: str = "rms") -> tuple[float, float]:
    """``(Linf, L2)`` of a vector of pointwise errors.

    ``rms`` is sqrt(mean(e^2)); ``abs`` is sqrt(sum(e^2)); ``relative`` is
    the RMS error divided by the RMS of ``exact``.
    """
    err = np.asarray(err, dtype=np.float64)
    linf = float(np.max(np.abs(err)))
    if norm == "rms":
        l2 = math.sqrt(float(np.mean(err * err)))
    elif norm == "abs":
        l2 = math.sqrt(float(np.sum(err * err)))
    elif norm == "relative":
        ref = np.asarray(exact, dtype=np.float64)
        l2 = math.sqrt(float(np.mean(err * err)) / float(np.mean(ref * ref)))
    else:
        raise ValueError(f"unknown norm {norm!r}; choose from {NORMS}")
    return linf, l2


def _check_time(problem: ProblemSpec, t: float):
    if not 0.0 <= t <= problem.t_max:
        raise ValueError(f"t={t} lies outside [0, {problem.t_max}] for {problem.id}")


def error_norms(net: Mlp, problem: ProblemSpec, t: float, grid_n: int | None = None, norm: str = "rms"):
    """Per-variable ``{name: (Linf, L2)}`` on the uniform grid at time ``t``."""
    _check_time(problem, t)
    grid = evaluation_grid(problem, t, grid_n or default_grid_n(problem))
    pred = network.forward(net, grid)
    exact = problem.exact(grid)
    return {
        name: norms_from_errors(pred[:, k] - exact[:, k], exact[:, k], norm)
        for k, name in enumerate(problem.variables)
    }


@dataclass
class ErrorReport:
    problem: str
    variables: tuple[str, ...]
    grid_n: int
    norm: str
    rows: list[tuple[float, dict[str, tuple[float, float]]]]
    config: dict = field(default_factory=dict)

    @property
    def times(self) -> list[float]:
        return [t for t, _ in self.rows]

    def header(self) -> list[str]:
        cols = ["t"]
        for v in self.variables:
            cols += [f"{v}_Linf", f"{v}_L2"]
        return cols

    def to_csv(self) -> str:
        """Table layout with four significant digits."""
        lines = [",".join(self.header())]
        for t, errs in self.rows:
            cells = [repr(float(t))]
            for v in self.variables:
                linf, l2 = errs[v]
                cells += [f"{linf:.4e}", f"{l2:.4e}"]
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        payload = {
            "problem": self.problem,
            "variables": list(self.variables),
            "grid_n": self.grid_n,
            "norm": self.norm,
            "rows": [
                {"t": t, **{v: {"Linf": errs[v][0], "L2": errs[v][1]} for v in self.variables}}
                for t, errs in self.rows
            ],
            "config": self.config,
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ErrorReport":
        data = json.loads(text)
        variables = tuple(data["variables"])
        rows = [(r["t"], {v: (r[v]["Linf"], r[v]["L2"]) for v in variables}) for r in data["rows"]]
        return cls(data["problem"], variables, data["grid_n"], data["norm"], rows, data["config"])

    @classmethod
    def from_csv(cls, text: str, problem: str = "", grid_n: int = 0, norm: str = "rms") -> "ErrorReport":
        lines = text.strip().splitlines()
        head = lines[0].split(",")
        variables = tuple(h[: -len("_Linf")] for h in head[1::2])
        rows = []
        for line in lines[1:]:
            cells = line.split(",")
            vals = [float(c) for c in cells[1:]]
            rows.append((float(cells[0]), {v: (vals[2 * k], vals[2 * k + 1]) for k, v in enumerate(variables)}))
        return cls(problem, variables, grid_n, norm, rows)


def report(net: Mlp, problem: ProblemSpec, times, grid_n: int | None = None, norm: str = "rms", config=None):
    times = [float(t) for t in times]
    if not times:
        raise ValueError("report needs at least one evaluation time")
    for t in times:
        _check_time(problem, t)
    grid_n = grid_n or default_grid_n(problem)
    rows = [(t, error_norms(net, problem, t, grid_n, norm)) for t in times]
    return ErrorReport(problem.id, problem.variables, grid_n, norm, rows, dict(config or {}))


def exactness_oracle(problem: ProblemSpec, n_points: int = 1000, seed: int = 0) -> float:
    """Largest |residual| of the closed-form solution at LHS interior points."""
    pts = sample_problem(problem, (n_points, 1, 2 * problem.n_space), seed).interior
    residuals = problem.residual(pts, problem.exact_jets(pts))
    return float(max(np.max(np.abs(f)) for f in residuals))


def validation_time(problem: ProblemSpec) -> float:
    return 1.0 if problem.t_max >= 1.0 else 0.5 * problem.t_max


@dataclass
class SweepCell:
    layers: int
    width: int
    linf: float | None = None
    l2: float | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class SweepResult:
    problem: str
    t: float
    cells: list[SweepCell]
    selected: tuple[int, int] | None

    def to_csv(self) -> str:
        lines = ["layers,width,Linf,L2,status"]
        for c in self.cells:
            if c.ok:
                lines.append(f"{c.layers},{c.width},{c.linf!r},{c.l2!r},ok")
            else:
                lines.append(f"{c.layers},{c.width},,,failed: {c.error}")
        return "\n".join(lines) + "\n"


def select(cells) -> tuple[int, int] | None:
    """Smallest Linf, ties broken by L2, then by (layers, width)."""
    good = [c for c in cells if c.ok and math.isfinite(c.linf)]
    if not good:
        return None
    best = min(good, key=lambda c: (c.linf, c.l2, c.layers, c.width))
    return best.layers, best.width


def sweep(problem: ProblemSpec, layer_set, width_set, base_config, grid_n: int | None = None, trainer=None):
    """Train one network per (L, H) pair and pick the best by validation error.

    Errors are the worst over the output variables at :func:`validation_time`.
    A run that raises is recorded as a failed cell.
    """
    from .training import train

    layer_set, width_set = list(layer_set), list(width_set)
    if not layer_set or not width_set:
        raise ValueError("sweep grids must be non-empty")
    trainer = trainer or train
    t = validation_time(problem)
    cells = []
    for L in layer_set:
        for H in width_set:
            cfg = dataclasses.replace(base_config, layers=L, width=H)
            try:
                result = trainer(problem, cfg)
                errs = error_norms(result.net, problem, t, grid_n)
                linf = max(e[0] for e in errs.values())
                l2 = max(e[1] for e in errs.values())
                cells.append(SweepCell(L, H, linf, l2))
            except (ArithmeticError, ValueError) as exc:
                log.warning("sweep cell L=%d H=%d failed: %s", L, H, exc)
                cells.append(SweepCell(L, H, error=str(exc).replace(",", ";").replace("\n", " ")))
    return SweepResult(problem.id, t, cells, select(cells))


def gradient_check(problem: ProblemSpec, n_params: int = 20, seed: int = 0, step: float = 1e-5) -> float:
    """Worst relative mismatch between the tape gradient and central differences.

    Uses a small random network and a small sample set so the check runs in
    well under a second. The relative error of a component is
    ``|g - fd| / max(|g|, |fd|, 1e-8)``.
    """
    from .training import loss, loss_and_gradient

    dims = network.hidden_dims(problem.n_in, 2, 8, problem.n_out)
    net = network.init(dims, seed, problem.lower, problem.upper)
    rng = np.random.default_rng(seed)
    theta = network.get_params(net)
    # move off the zero-bias initialization so every parameter matters
    network.set_params(net, theta + 0.1 * rng.standard_normal(theta.size))
    theta = network.get_params(net)
    samples = sample_problem(problem, (10, 4, 4 * problem.n_space), seed)
    _, grad = loss_and_gradient(net, problem, samples)
    idx = rng.choice(theta.size, size=min(n_params, theta.size), replace=False)
    worst = 0.0
    for i in idx:
        tp, tm = theta.copy(), theta.copy()
        tp[i] += step
        tm[i] -= step
        network.set_params(net, tp)
        fp = loss(net, problem, samples).total
        network.set_params(net, tm)
        fm = loss(net, problem, samples).total
        fd = (fp - fm) / (2.0 * step)
        worst = max(worst, abs(grad[i] - fd) / max(abs(grad[i]), abs(fd), 1e-8))
    network.set_params(net, theta)
    return worst
