import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ambientid.errors import NonFiniteObjective
from ambientid.inference import objective
from ambientid.model import GEN_TRUE
from ambientid.optimize import (
    CONVERGED,
    DEGENERATE,
    MAX_ITER,
    CEConfig,
    cross_entropy,
    fd_gradient,
    quasi_newton,
)


def sphere(c):
    c = np.asarray(c, dtype=float)
    return lambda x: float(np.sum((np.asarray(x) - c) ** 2))


def two_basin(x):
    # global minimum 0 at 0, local minimum 1 at 5
    return min(x[0] ** 2, (x[0] - 5.0) ** 2 + 1.0)


def fd4(f, theta, h_rel=1e-3):
    """Fourth-order central difference used as an oracle."""
    g = np.empty_like(theta)
    for j in range(theta.shape[0]):
        h = h_rel * abs(theta[j])
        e = np.zeros_like(theta)
        e[j] = h
        g[j] = (-f(theta + 2 * e) + 8 * f(theta + e) - 8 * f(theta - e) + f(theta - 2 * e)) / (12 * h)
    return g


# cross-entropy

def test_ce_solves_quadratic_within_reach():
    c = np.array([1.0, 2.0, 3.0])
    res = cross_entropy(sphere(c), c + 0.5, [1.0, 1.0, 1.0],
                        CEConfig(n_samples=100, n_elite=10, alpha=0.8, eps=1e-6, seed=1))
    assert res.termination == CONVERGED
    assert np.max(np.abs(res.theta_post - c)) < 1e-3


def test_ce_two_basin_global():
    hits = 0
    for seed in range(20):
        res = cross_entropy(two_basin, [5.0], [4.0], CEConfig(n_samples=500, seed=seed))
        hits += abs(res.theta_post[0]) < 1.0
    assert hits >= 19


def test_ce_large_eps_stops_after_one_iteration():
    res = cross_entropy(sphere([0.0, 0.0]), [1.0, 1.0], [1.0, 1.0], CEConfig(eps=10.0))
    assert res.iterations == 1
    assert res.termination == CONVERGED


def test_ce_max_iter():
    res = cross_entropy(sphere([0.0]), [1.0], [1.0], CEConfig(max_iter=3, eps=1e-12))
    assert res.iterations == 3
    assert res.termination == MAX_ITER
    assert len(res.trace) == 3


def test_ce_degenerate_when_everything_fails():
    res = cross_entropy(lambda x: np.nan, [1.0], [1.0], CEConfig(max_iter=10))
    assert res.termination == DEGENERATE
    assert res.iterations == 3


def test_ce_exceptions_count_as_infinite():
    def f(x):
        if x[0] < 0:
            raise NonFiniteObjective("negative")
        return (x[0] - 1.0) ** 2

    res = cross_entropy(f, [0.5], [1.0], CEConfig(seed=2))
    assert abs(res.theta_post[0] - 1.0) < 1e-3


def test_ce_deterministic_bitwise():
    f = sphere([1.0, -2.0])
    a = cross_entropy(f, [0.0, 0.0], [2.0, 2.0], CEConfig(seed=9))
    b = cross_entropy(f, [0.0, 0.0], [2.0, 2.0], CEConfig(seed=9))
    assert a.theta_post.tobytes() == b.theta_post.tobytes()
    assert [r.best_f for r in a.trace] == [r.best_f for r in b.trace]
    assert all(ra.mean.tobytes() == rb.mean.tobytes() for ra, rb in zip(a.trace, b.trace))


def test_ce_best_record_is_monotone():
    res = cross_entropy(two_basin, [3.0], [4.0], CEConfig(seed=4))
    best = [r.best_f for r in res.trace]
    assert all(b2 <= b1 for b1, b2 in zip(best, best[1:]))
    assert res.objective_final == best[-1]
    assert res.objective_final == two_basin(res.theta_post)


def test_ce_alpha_one_gives_raw_elite_mean():
    f = sphere([0.3, -0.7])
    cfg = CEConfig(n_samples=50, n_elite=5, alpha=1.0, max_iter=1, seed=3)
    res = cross_entropy(f, [0.0, 0.0], [1.0, 1.0], cfg, scale=[1.0, 1.0])
    rng = np.random.default_rng(3)
    X = rng.standard_normal((50, 2))
    vals = np.array([f(x) for x in X])
    elite = np.argsort(vals, kind="stable")[:5]
    assert np.array_equal(res.trace[0].mean, X[elite].mean(axis=0))
    assert np.array_equal(res.trace[0].sigma, np.sqrt(np.mean((X[elite] - X[elite].mean(axis=0)) ** 2, axis=0)))


def test_ce_ties_go_to_lowest_index():
    # constant objective: every sample ties, so the first n_elite samples are elite
    cfg = CEConfig(n_samples=30, n_elite=4, alpha=1.0, max_iter=1, seed=5)
    res = cross_entropy(lambda x: 0.0, [0.0], [1.0], cfg, scale=[1.0])
    X = np.random.default_rng(5).standard_normal((30, 1))
    assert np.array_equal(res.trace[0].mean, X[:4].mean(axis=0))


def test_ce_respects_bounds():
    bounds = np.array([[0.0, 1.0], [0.0, 1.0]])
    res = cross_entropy(sphere([3.0, -3.0]), [0.5, 0.5], [1.0, 1.0], CEConfig(bounds=bounds, seed=0))
    assert np.all(res.theta_post >= bounds[:, 0]) and np.all(res.theta_post <= bounds[:, 1])
    assert np.allclose(res.theta_post, [1.0, 0.0], atol=1e-3)


def test_ce_batch_mode_matches_scalar_mode():
    f = sphere([0.5, 1.5])
    fb = lambda X: np.sum((X - np.array([0.5, 1.5])) ** 2, axis=1)  # noqa: E731
    a = cross_entropy(f, [0.0, 0.0], [1.0, 1.0], CEConfig(seed=6))
    b = cross_entropy(fb, [0.0, 0.0], [1.0, 1.0], CEConfig(seed=6), batch=True)
    assert np.array_equal(a.theta_post, b.theta_post)


@pytest.mark.parametrize("kw", [
    dict(n_elite=0), dict(n_elite=300), dict(alpha=0.0), dict(alpha=1.5), dict(eps=0.0),
    dict(max_iter=0), dict(bounds=[[1.0, 0.0]]),
])
def test_ce_config_validation(kw):
    with pytest.raises(ValueError):
        CEConfig(**kw)


def test_ce_rejects_start_outside_bounds_and_bad_sigma():
    with pytest.raises(ValueError):
        cross_entropy(sphere([0.0]), [2.0], [1.0], CEConfig(bounds=[[0.0, 1.0]]))
    with pytest.raises(ValueError):
        cross_entropy(sphere([0.0]), [0.5], [0.0])


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n_elite=st.integers(1, 20))
def test_ce_invariants_property(seed, n_elite):
    bounds = np.array([[-1.0, 2.0], [0.5, 4.0]])
    res = cross_entropy(sphere([1.0, 1.0]), [0.0, 1.0], [1.0, 1.0],
                        CEConfig(n_samples=40, n_elite=n_elite, seed=seed, max_iter=30, bounds=bounds))
    assert len(res.trace) == res.iterations
    assert np.all(res.theta_post >= bounds[:, 0]) and np.all(res.theta_post <= bounds[:, 1])
    best = [r.best_f for r in res.trace]
    assert all(b2 <= b1 for b1, b2 in zip(best, best[1:]))
    assert res.objective_final == sphere([1.0, 1.0])(res.theta_post)


# finite differences

def test_fd_gradient_quadratic():
    g = fd_gradient(lambda x: float(np.sum(x**2)), np.array([1.0, 1.0]), 1e-6)
    assert np.allclose(g, [2.0, 2.0], atol=1e-6)


def test_fd_gradient_linear_exact():
    a = np.array([0.5, -2.0, 3.0])
    g = fd_gradient(lambda x: float(a @ x), np.array([1.0, 2.0, -1.0]))
    assert np.allclose(g, a, rtol=1e-8)


def test_fd_gradient_propagates_nonfinite():
    with pytest.raises(NonFiniteObjective):
        fd_gradient(lambda x: np.inf, np.array([1.0]))


def test_fd_gradient_matches_fourth_order_oracle(snr10_problem):
    pp = snr10_problem
    rng = np.random.default_rng(0)
    f = lambda th: objective(pp, th).total  # noqa: E731
    for _ in range(3):
        theta = GEN_TRUE * rng.uniform(0.7, 1.3, 4)
        g = fd_gradient(f, theta, 1e-6)
        ref = fd4(f, theta)
        assert np.max(np.abs(g - ref) / np.maximum(np.abs(ref), 1e-8 * np.max(np.abs(ref)))) < 1e-4


# quasi-Newton

def test_qn_quadratic():
    c = np.array([1.0, 2.0, 3.0])
    res = quasi_newton(sphere(c), [0.0, 0.0, 0.0], tol=1e-10, scale=[1.0, 1.0, 1.0])
    assert res.iterations <= 50
    assert np.max(np.abs(res.theta_post - c)) < 1e-8


def test_qn_rosenbrock():
    f = lambda x: float(100 * (x[1] - x[0] ** 2) ** 2 + (1 - x[0]) ** 2)  # noqa: E731
    res = quasi_newton(f, [-1.2, 1.0], tol=1e-9, max_iter=500)
    assert res.objective_final < 1e-6


def test_qn_respects_bounds():
    bounds = np.array([[0.0, 1.0], [0.0, 1.0]])
    res = quasi_newton(sphere([3.0, -3.0]), [0.5, 0.5], bounds)
    assert np.allclose(res.theta_post, [1.0, 0.0])
    assert res.termination == CONVERGED


def test_qn_degenerate_start():
    res = quasi_newton(lambda x: np.nan, [1.0])
    assert res.termination == DEGENERATE
    assert res.iterations == 0
