import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sdelaplace.closedform import fisher_info
from sdelaplace.mle import (
    DegeneratePathError,
    MleResult,
    estimate_alpha,
    estimate_alpha_batch,
    fisher_normalized_error,
    loglik_ratio,
    random_normalized_error,
)
from sdelaplace.model import ModelError, alpha_bridge, ou, terminal
from sdelaplace.simulate import PathSample, TimeGrid, sample_path, sample_paths


def test_zero_path_is_degenerate():
    m = alpha_bridge(1.0)
    g = TimeGrid.uniform(0.5, 10)
    with pytest.raises(DegeneratePathError):
        estimate_alpha(m, PathSample(g, np.zeros(11), np.zeros(11), 0, 0))


def test_estimate_is_ratio():
    m = alpha_bridge(1.0)
    p = sample_path(m, TimeGrid.geometric(m, 0.9, 100), 3, seed=1)
    r = estimate_alpha(m, p)
    assert r.alpha_hat == r.numerator / r.Q
    assert r.Q == p.Q[-1] and r.t == p.t


@given(stream=st.integers(0, 10_000), beta=st.floats(-2, 2))
def test_loglik_is_concave_quadratic_with_vertex_at_mle(stream, beta):
    m = alpha_bridge(beta)
    p = sample_path(m, TimeGrid.geometric(m, 0.9, 50), stream, seed=2)
    r = estimate_alpha(m, p)
    grid = np.linspace(r.alpha_hat - 1, r.alpha_hat + 1, 201)
    vals = np.array([loglik_ratio(m.with_alpha(a), m, r) for a in grid])
    assert grid[np.argmax(vals)] == pytest.approx(r.alpha_hat, abs=0.01)
    assert np.all(np.diff(vals, 2) < 0)
    assert loglik_ratio(m, m, r) == 0.0


def test_loglik_rejects_mismatched_models():
    r = MleResult(0.1, 1.0, 0.1, 0.5)
    with pytest.raises(ModelError):
        loglik_ratio(alpha_bridge(1.0), alpha_bridge(1.0, T=2.0), r)
    with pytest.raises(ModelError):
        loglik_ratio(ou(1.0), alpha_bridge(1.0), r)


def test_likelihood_ratio_has_unit_mean():
    n = 100_000
    base = ou(0.0)
    b = sample_paths(base, TimeGrid.uniform(1.0, 400), n, seed=3)
    r = estimate_alpha_batch(base, b, 1.0)
    lr = np.exp(loglik_ratio(base.with_alpha(-0.5), base, r))
    assert abs(lr.mean() - 1.0) < 3 * lr.std() / math.sqrt(n)


@given(stream=st.integers(0, 10_000), alpha=st.floats(-2, 2), K=st.sampled_from([0.5, -1.0]))
def test_flip_negates_estimate(stream, alpha, K):
    m = terminal(alpha, K, T=1.0)
    p = sample_path(m, TimeGrid.geometric(m, 0.95, 40), stream, seed=4)
    assert estimate_alpha(m.flipped(), p).alpha_hat == pytest.approx(-estimate_alpha(m, p).alpha_hat, rel=1e-12)


def test_normalized_errors_vanish_at_truth():
    r = MleResult(0.7, 3.0, 2.1, 0.5)
    assert fisher_normalized_error(alpha_bridge(0.7), r, 0.7) == 0.0
    assert random_normalized_error(r, 0.7) == 0.0
    assert fisher_normalized_error(alpha_bridge(0.7), MleResult(1.7, 3.0, 5.1, 0.5), 0.7) == pytest.approx(
        math.sqrt(fisher_info(alpha_bridge(0.7), 0.5))
    )


@pytest.mark.xfail(
    strict=True,
    reason="finite-t upward bias: median of alpha_hat is about 1.14 at t=0.999 "
    "(checked on 1e5 paths); it decays only like 1/log(1/(T-t))",
)
def test_bridge_median_within_005_at_t0999():
    m = alpha_bridge(1.0)
    g = TimeGrid.geometric(m, 0.999, 1000)
    r = estimate_alpha_batch(m, sample_paths(m, g, 1000, seed=5), 0.999)
    assert abs(np.median(r.alpha_hat) - 1.0) < 0.05


def test_bridge_median_bias_shrinks_toward_T():
    m = alpha_bridge(1.0)
    tails = [1e-3, 1e-6, 1e-12]
    g = TimeGrid.toward_T(m, tails[-1], 2000).including([1.0 - d for d in tails[:-1]])
    times = [float(g.points[g.index_of([1.0 - d])[0]]) for d in tails[:-1]] + [g.t_end]
    b = sample_paths(m, g, 5000, seed=5, at=times)
    bias = [np.median(estimate_alpha_batch(m, b, t).alpha_hat) - 1.0 for t in times]
    assert bias[0] > bias[1] > bias[2] > 0
    assert bias[-1] < 0.06


def test_ergodic_ou_estimate():
    m = ou(-1.0)
    r = estimate_alpha_batch(m, sample_paths(m, TimeGrid.uniform(20.0, 2000), 1000, seed=6), 20.0)
    assert abs(np.median(r.alpha_hat) + 1.0) < 0.05
