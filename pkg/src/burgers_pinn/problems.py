"""The Burgers-type benchmark problems.

Residuals take the evaluation points and one :class:`~burgers_pinn.derivkit.Jet2`
per solution component. Jet channel ``i`` is the derivative with respect to
input ``i``: ``(x, t)`` in 1D, ``(x, y, t)`` in 2D. Each residual keeps the
sign convention of its own benchmark rather than a shared canonical form.

Exact solutions are written with the dispatching elementary functions of
:mod:`derivkit`, so the same closed form evaluates on arrays or on jets.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .derivkit import Jet2, cos, exp, jet_var, sin, tanh

PROBLEM_IDS = ("ex1", "ex2", "ex3", "ex4", "ex5")


class UnknownProblemError(KeyError):
    pass


@dataclass(frozen=True)
class CoeffSet:
    epsilon: float = 1.0
    R: float = 1.0
    alpha: float = 0.0
    beta: float = 0.0
    gamma: float = 0.0
    delta: float = 0.0
    c1: float = 0.1
    c2: float = 0.3

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not self.R > 0:
            raise ValueError(f"R must be positive, got {self.R}")


@dataclass(frozen=True)
class ProblemSpec:
    id: str
    n_space: int
    n_out: int
    space_box: tuple[tuple[float, float], ...]
    t_max: float
    params: CoeffSet
    residual_fn: Callable = field(repr=False)
    exact_fn: Callable | None = field(default=None, repr=False)
    eval_times: tuple[float, ...] = ()
    figure_times: tuple[float, ...] = ()
    # each exact (reference) solution is closed-form but ex2's is not verified exact
    exact_is_solution: bool = True

    @property
    def n_in(self) -> int:
        return self.n_space + 1

    @property
    def lower(self) -> np.ndarray:
        return np.array([lo for lo, _ in self.space_box] + [0.0])

    @property
    def upper(self) -> np.ndarray:
        return np.array([hi for _, hi in self.space_box] + [self.t_max])

    @property
    def variables(self) -> tuple[str, ...]:
        return ("u", "v")[: self.n_out]

    def residual(self, points, jets) -> tuple:
        jets = list(jets)
        if len(jets) != self.n_out:
            raise ValueError(f"{self.id} expects {self.n_out} jets, got {len(jets)}")
        for j in jets:
            if j.n_in != self.n_in:
                raise ValueError(f"{self.id} needs jets over {self.n_in} inputs, got {j.n_in}")
        return self.residual_fn(points, jets, self.params)

    def exact(self, points) -> np.ndarray:
        """Closed-form solution at ``points`` (shape ``(N, n_in)``) as ``(N, n_out)``."""
        if self.exact_fn is None:
            raise ValueError(f"problem {self.id} has no closed-form solution")
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        cols = self.exact_fn(tuple(pts.T), self.params)
        return np.stack([np.broadcast_to(c, pts.shape[:1]) for c in cols], axis=1)

    def exact_jets(self, points) -> list[Jet2]:
        if self.exact_fn is None:
            raise ValueError(f"problem {self.id} has no closed-form solution")
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        coords = tuple(jet_var(pts[:, i], i, self.n_in) for i in range(self.n_in))
        return list(self.exact_fn(coords, self.params))

    def check_point_dims(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        if pts.shape[1] != self.n_in:
            raise ValueError(f"{self.id} points need {self.n_in} coordinates, got {pts.shape[1]}")
        return pts


# -- 1D coupled systems: jets carry d = (u_x, u_t), dd = (u_xx, u_tt)


def residual_ex1(points, jets, params=None):
    u, v = jets
    uv_x = u.value * v.d[0] + v.value * u.d[0]
    f_u = u.d[1] - u.dd[0] - 2.0 * (u.value * u.d[0]) + uv_x
    f_v = v.d[1] - v.dd[0] - 2.0 * (v.value * v.d[0]) + uv_x
    return f_u, f_v


def residual_ex2(points, jets, params):
    u, v = jets
    uv_x = u.value * v.d[0] + v.value * u.d[0]
    f_u = u.d[1] - u.dd[0] - 2.0 * (u.value * u.d[0]) + params.c1 * uv_x
    f_v = v.d[1] - v.dd[0] - 2.0 * (v.value * v.d[0]) + params.c2 * uv_x
    return f_u, f_v


def residual_ex3(points, jets, params):
    u, v = jets
    eps = params.epsilon
    uv_x = u.value * v.d[0] + v.value * u.d[0]
    f_u = u.d[1] - eps * u.dd[0] + 2.0 * (u.value * u.d[0]) - uv_x
    f_v = v.d[1] - eps * v.dd[0] + 2.0 * (v.value * v.d[0]) - uv_x
    return f_u, f_v


def residual_generalized(points, jets, params):
    u, v = jets
    p = params
    f_u = u.d[1] + p.alpha * (u.value * u.d[0]) + p.beta * (v.value * u.d[0]) - p.epsilon * u.dd[0]
    f_v = v.d[1] + p.gamma * (v.value * v.d[0]) + p.delta * (u.value * v.d[0]) - p.epsilon * v.dd[0]
    return f_u, f_v


# -- 2D: jets carry d = (u_x, u_y, u_t), dd = (u_xx, u_yy, u_tt)


def residual_ex4(points, jets, params):
    (u,) = jets
    lap = u.dd[0] + u.dd[1]
    f_u = u.d[2] - lap / params.R + u.value * u.d[0] + u.value * u.d[1]
    return (f_u,)


def residual_ex5(points, jets, params):
    u, v = jets
    inv_r = 1.0 / params.R
    f_u = u.d[2] + u.value * u.d[0] + v.value * u.d[1] - inv_r * (u.dd[0] + u.dd[1])
    f_v = v.d[2] + u.value * v.d[0] + v.value * v.d[1] - inv_r * (v.dd[0] + v.dd[1])
    return f_u, f_v


def exact_ex1(coords, params=None):
    x, t = coords
    u = exp(-t) * sin(x)
    return u, u


def exact_ex2(coords, params=None):
    x, t = coords
    w = tanh(-0.00625 * (x + 0.0125 * t))
    return 0.05 * (1.0 - w), 0.05 * (-0.5 - w)


def exact_ex3(coords, params):
    x, t = coords
    u = exp(-params.epsilon * np.pi**2 * t) * cos(np.pi * x)
    return u, u


def exact_ex4(coords, params):
    x, y, t = coords
    return (1.0 / (1.0 + exp(0.5 * params.R * (x + y - t))),)


def exact_ex5(coords, params):
    x, y, t = coords
    s = 0.25 / (1.0 + exp(params.R / 32.0 * (4.0 * y - 4.0 * x - t)))
    return 0.75 - s, 0.75 + s


def _registry():
    return {
        "ex1": ProblemSpec(
            "ex1", 1, 2, ((-np.pi, np.pi),), 10.0, CoeffSet(),
            residual_ex1, exact_ex1, eval_times=(0.5, 1.0, 5.0, 10.0), figure_times=(0.5, 1.0),
        ),
        "ex2": ProblemSpec(
            "ex2", 1, 2, ((-10.0, 10.0),), 10.0, CoeffSet(c1=0.1, c2=0.3),
            residual_ex2, exact_ex2, eval_times=(0.5, 1.0, 5.0, 10.0), exact_is_solution=False,
        ),
        "ex3": ProblemSpec(
            "ex3", 1, 2, ((0.0, 1.0),), 1.0, CoeffSet(epsilon=1e-6, R=1e6),
            residual_ex3, exact_ex3, eval_times=(0.1, 0.3, 0.5, 0.7, 1.0),
            figure_times=(0.1, 0.3, 0.5, 0.7, 1.0),
        ),
        "ex4": ProblemSpec(
            "ex4", 2, 1, ((0.0, 1.0), (0.0, 1.0)), 1.0, CoeffSet(epsilon=1 / 80, R=80.0),
            residual_ex4, exact_ex4, eval_times=(0.0, 1.0), figure_times=(0.0, 1.0),
        ),
        "ex5": ProblemSpec(
            "ex5", 2, 2, ((0.0, 1.0), (0.0, 1.0)), 8.0, CoeffSet(epsilon=1 / 100, R=100.0),
            residual_ex5, exact_ex5, eval_times=(2.0, 8.0), figure_times=(2.0, 8.0),
        ),
        "generalized": ProblemSpec(
            "generalized", 1, 2, ((0.0, 1.0),), 1.0,
            CoeffSet(epsilon=1.0, alpha=1.0, beta=1.0, gamma=1.0, delta=1.0),
            residual_generalized, None,
        ),
    }


def get_problem(problem_id: str, R: float | None = None, **coeffs) -> ProblemSpec:
    """Look up a benchmark by id, optionally overriding R or other coefficients.

    Overriding ``R`` on ex3, ex4 or ex5 also sets ``epsilon = 1/R``.
    """
    registry = _registry()
    if problem_id not in registry:
        raise UnknownProblemError(f"unknown problem id {problem_id!r}; choose from {sorted(registry)}")
    spec = registry[problem_id]
    if R is not None:
        coeffs.setdefault("epsilon", 1.0 / R)
        coeffs["R"] = R
    if coeffs:
        spec = replace(spec, params=replace(spec.params, **coeffs))
    return spec


def is_on_boundary(problem: ProblemSpec, points, atol: float = 0.0) -> np.ndarray:
    pts = problem.check_point_dims(points)
    on_face = np.zeros(len(pts), dtype=bool)
    for i, (lo, hi) in enumerate(problem.space_box):
        on_face |= np.abs(pts[:, i] - lo) <= atol
        on_face |= np.abs(pts[:, i] - hi) <= atol
    return on_face


def ic_bc_values(problem: ProblemSpec, points, atol: float = 1e-12) -> np.ndarray:
    """Dirichlet data at initial or boundary points, taken from the exact solution."""
    pts = problem.check_point_dims(points)
    on_initial = np.abs(pts[:, -1]) <= atol
    on_face = is_on_boundary(problem, pts, atol)
    if not np.all(on_initial | on_face):
        bad = pts[~(on_initial | on_face)][0]
        raise ValueError(f"point {bad.tolist()} is neither on t=0 nor on the spatial boundary")
    return problem.exact(pts)
