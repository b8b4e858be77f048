import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from burgers_pinn.problems import PROBLEM_IDS, get_problem, is_on_boundary
from burgers_pinn.sampling import default_counts, lhs, sample_problem


def strata_ok(points):
    n = len(points)
    return all(sorted(np.floor(points[:, j] * n).astype(int)) == list(range(n)) for j in range(points.shape[1]))


def test_lhs_single_point():
    pts = lhs(1, 2, seed=0)
    assert pts.shape == (1, 2)
    assert np.all((pts >= 0) & (pts < 1))


def test_lhs_four_strata():
    pts = lhs(4, 1, seed=3)[:, 0]
    assert sorted(np.floor(pts * 4).astype(int)) == [0, 1, 2, 3]


def test_lhs_is_reproducible():
    assert lhs(50, 3, seed=11).tobytes() == lhs(50, 3, seed=11).tobytes()
    assert not np.array_equal(lhs(50, 3, seed=11), lhs(50, 3, seed=12))


@pytest.mark.parametrize("n, dims", [(0, 2), (-3, 1), (4, 0)])
def test_lhs_rejects_empty(n, dims):
    with pytest.raises(ValueError):
        lhs(n, dims, seed=0)


@settings(max_examples=50, deadline=None)
@given(n=st.integers(1, 300), dims=st.integers(1, 4), seed=st.integers(0, 2**32 - 1))
def test_lhs_stratification(n, dims, seed):
    pts = lhs(n, dims, seed)
    assert pts.shape == (n, dims)
    assert np.all((pts >= 0) & (pts < 1))
    assert strata_ok(pts)


def test_ex1_example_counts():
    p = get_problem("ex1")
    s = sample_problem(p, (100, 20, 20), seed=7)
    assert s.counts == (100, 20, 20)
    x, t = s.interior.T
    assert np.all((x > -np.pi) & (x < np.pi) & (t > 0) & (t < 10))
    assert np.all(s.initial[:, 1] == 0.0)
    assert np.sum(s.boundary[:, 0] == -np.pi) == 10
    assert np.sum(s.boundary[:, 0] == np.pi) == 10


def test_ex4_boundary_faces():
    s = sample_problem(get_problem("ex4"), (50, 20, 40), seed=1)
    x, y = s.boundary[:, 0], s.boundary[:, 1]
    on_face = np.isin(x, [0.0, 1.0]) | np.isin(y, [0.0, 1.0])
    assert np.all(on_face)
    # ten points per edge
    assert [np.sum(x == 0), np.sum(x == 1), np.sum(y == 0), np.sum(y == 1)] == [10, 10, 10, 10]


def test_interior_is_stratified_in_physical_units():
    p = get_problem("ex1")
    s = sample_problem(p, (200, 5, 4), seed=0)
    unit = (s.interior - p.lower) / (p.upper - p.lower)
    assert strata_ok(unit)


def test_epochs_are_distinct_and_reproducible():
    p = get_problem("ex1")
    a0 = sample_problem(p, (40, 8, 8), seed=5, epoch_tag=0)
    a1 = sample_problem(p, (40, 8, 8), seed=5, epoch_tag=1)
    b1 = sample_problem(p, (40, 8, 8), seed=5, epoch_tag=1)
    for name in ("interior", "initial", "boundary"):
        assert getattr(a1, name).tobytes() == getattr(b1, name).tobytes()
        assert not np.array_equal(getattr(a0, name), getattr(a1, name))


def test_default_counts():
    assert default_counts(get_problem("ex1")) == (10000, 400, 400)
    assert default_counts(get_problem("ex5")) == (10000, 400, 1600)
    assert sample_problem(get_problem("ex4"), seed=0).counts == (10000, 400, 1600)


@pytest.mark.parametrize("counts", [(0, 1, 1), (1, 0, 1), (1, 1, 0)])
def test_zero_counts_rejected(counts):
    with pytest.raises(ValueError):
        sample_problem(get_problem("ex1"), counts)


def test_degenerate_box_rejected():
    p = get_problem("ex1")
    with pytest.raises(ValueError):
        sample_problem(dataclasses.replace(p, space_box=((1.0, 1.0),)), (4, 4, 4))
    with pytest.raises(ValueError):
        sample_problem(dataclasses.replace(p, space_box=((2.0, 1.0),)), (4, 4, 4))


@settings(max_examples=40, deadline=None)
@given(
    pid=st.sampled_from(PROBLEM_IDS),
    n_r=st.integers(1, 200),
    n_0=st.integers(1, 50),
    n_b=st.integers(1, 60),
    seed=st.integers(0, 10**6),
    epoch=st.integers(0, 100),
)
def test_membership_invariants(pid, n_r, n_0, n_b, seed, epoch):
    p = get_problem(pid)
    s = sample_problem(p, (n_r, n_0, n_b), seed, epoch)
    assert s.counts == (n_r, n_0, n_b)
    lo, hi = p.lower, p.upper
    assert np.all((s.interior > lo) & (s.interior < hi))
    assert np.all(s.initial[:, -1] == 0.0)
    assert np.all((s.initial[:, :-1] >= lo[:-1]) & (s.initial[:, :-1] <= hi[:-1]))
    assert np.all(is_on_boundary(p, s.boundary))
    assert np.all((s.boundary[:, :-1] >= lo[:-1]) & (s.boundary[:, :-1] <= hi[:-1]))
    assert np.all((s.boundary[:, -1] > 0) & (s.boundary[:, -1] <= p.t_max))
