"""Latin Hypercube sampling of collocation, initial and boundary points.

Random streams come from numpy's ``SeedSequence`` feeding a PCG64 bit
generator. The entropy for a stream is ``[seed, epoch_tag, stream]`` where
``stream`` is 0 for interior points, 1 for initial points and ``2 + k`` for
boundary face ``k`` (faces ordered x=lo, x=hi, y=lo, y=hi). Any epoch can
therefore be regenerated in isolation.

Within one stream an LHS draw of ``n`` points in ``dims`` dimensions takes,
for each dimension in order, a permutation of ``range(n)`` followed by ``n``
uniforms, and returns ``(perm + u) / n``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .problems import ProblemSpec

DEFAULT_COUNTS_1D = (10000, 400, 400)
DEFAULT_COUNTS_2D = (10000, 400, 1600)


def default_counts(problem: ProblemSpec) -> tuple[int, int, int]:
    return DEFAULT_COUNTS_1D if problem.n_space == 1 else DEFAULT_COUNTS_2D


def _rng(seed: int, epoch_tag: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(epoch_tag), stream])))


def _lhs(n: int, dims: int, rng: np.random.Generator) -> np.ndarray:
    out = np.empty((n, dims))
    below_one = np.nextafter(1.0, 0.0)
    for j in range(dims):
        perm = rng.permutation(n)
        out[:, j] = np.minimum((perm + rng.random(n)) / n, below_one)
    return out


def lhs(n: int, dims: int, seed: int) -> np.ndarray:
    """``n`` stratified points in ``[0, 1)^dims``: one per stratum per axis."""
    if n < 1:
        raise ValueError(f"LHS needs at least one point, got n={n}")
    if dims < 1:
        raise ValueError(f"LHS needs at least one dimension, got dims={dims}")
    return _lhs(n, dims, _rng(seed, 0, 0))


@dataclass
class SampleSet:
    interior: np.ndarray
    initial: np.ndarray
    boundary: np.ndarray
    seed: int
    epoch_tag: int = 0

    @property
    def counts(self) -> tuple[int, int, int]:
        return len(self.interior), len(self.initial), len(self.boundary)


def _open_interval(u, lo, hi):
    # map [0,1) strictly inside (lo, hi)
    x = lo + (hi - lo) * u
    return np.clip(x, np.nextafter(lo, hi), np.nextafter(hi, lo))


def _split(total: int, parts: int) -> list[int]:
    base, extra = divmod(total, parts)
    return [base + (k < extra) for k in range(parts)]


def sample_problem(problem: ProblemSpec, counts=None, seed: int = 0, epoch_tag: int = 0) -> SampleSet:
    n_r, n_0, n_b = default_counts(problem) if counts is None else counts
    if min(n_r, n_0, n_b) < 1:
        raise ValueError(f"every point count must be at least 1, got {(n_r, n_0, n_b)}")
    box = list(problem.space_box)
    for lo, hi in box:
        if not lo < hi:
            raise ValueError(f"degenerate spatial interval [{lo}, {hi}]")
    if not problem.t_max > 0:
        raise ValueError(f"t_max must be positive, got {problem.t_max}")
    ns = problem.n_space

    u = _lhs(n_r, ns + 1, _rng(seed, epoch_tag, 0))
    interior = np.empty_like(u)
    for i, (lo, hi) in enumerate(box):
        interior[:, i] = _open_interval(u[:, i], lo, hi)
    interior[:, ns] = _open_interval(u[:, ns], 0.0, problem.t_max)

    u = _lhs(n_0, ns, _rng(seed, epoch_tag, 1))
    initial = np.zeros((n_0, ns + 1))
    for i, (lo, hi) in enumerate(box):
        initial[:, i] = lo + (hi - lo) * u[:, i]

    faces = []
    per_face = _split(n_b, 2 * ns)
    for k, n_face in enumerate(per_face):
        if n_face == 0:
            continue
        axis, side = divmod(k, 2)
        u = _lhs(n_face, ns, _rng(seed, epoch_tag, 2 + k))
        pts = np.empty((n_face, ns + 1))
        free = [i for i in range(ns) if i != axis]
        for col, i in enumerate(free):
            lo, hi = box[i]
            pts[:, i] = lo + (hi - lo) * u[:, col]
        pts[:, axis] = box[axis][side]
        # time in (0, t_max]
        pts[:, ns] = problem.t_max * (1.0 - u[:, -1])
        faces.append(pts)
    boundary = np.concatenate(faces)
    return SampleSet(interior, initial, boundary, int(seed), int(epoch_tag))
