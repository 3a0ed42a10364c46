import numpy as np
import pytest

from graphdml.graph import AttributedGraph
from graphdml.gprfilter import (FilterConfig, binomial_gpr_weights, gpr_weights,
                                hop_operator, laplacian_reference_filter,
                                propagate_exact, propagate_push,
                                propagate_with_weights, select_hops, with_max_hops)

from conftest import random_graph


def dense_oracle(g, cfg):
    """Straightforward dense evaluation of the weighted hop-power series."""
    n = g.n_nodes
    a = g.adjacency().toarray() + np.eye(n)
    deg = a.sum(axis=1)
    t = np.diag(deg ** (cfg.rrz - 1.0)) @ a @ np.diag(deg ** (-cfg.rrz))
    w = gpr_weights(cfg.alpha, cfg.n_hops)
    return sum(wl * np.linalg.matrix_power(t, l) @ g.features for l, wl in enumerate(w))


def test_two_node_hand_example():
    # single edge, identity features, r=0.5, alpha=0.5, one hop:
    # T = [[.5,.5],[.5,.5]], P = .5 I + .25 T
    g = AttributedGraph(2, [0, 1, 2], [1, 0], np.eye(2))
    cfg = with_max_hops(FilterConfig(alpha=0.5, rrz=0.5, r_max=1e-12), 1)
    out = propagate_exact(g, cfg).matrix
    assert np.allclose(out, [[0.625, 0.125], [0.125, 0.625]], atol=1e-15)


def test_exact_matches_dense_oracle():
    worst = 0.0
    for seed in range(25):
        g = random_graph(50, seed=seed)
        cfg = FilterConfig(alpha=0.15, rrz=0.4, r_max=1e-12)
        out = propagate_exact(g, cfg).matrix
        worst = max(worst, np.abs(out - dense_oracle(g, cfg)).max())
    assert worst < 1e-10


def test_alpha_one_is_identity():
    g = random_graph(40, seed=2)
    out = propagate_exact(g, FilterConfig(alpha=1.0, rrz=0.4, r_max=1e-12)).matrix
    assert np.array_equal(out, g.features)


def test_col_block_is_value_invariant():
    g = random_graph(40, seed=3)
    cfg = FilterConfig(alpha=0.2, rrz=0.5, r_max=1e-12)
    full = propagate_exact(g, cfg).matrix
    assert np.array_equal(propagate_exact(g, cfg, col_block=2).matrix, full)


def test_push_tiny_threshold_matches_exact():
    g = random_graph(50, seed=4)
    cfg = FilterConfig(alpha=0.15, rrz=0.4, r_max=1e-12)
    err = np.abs(propagate_push(g, cfg).matrix - propagate_exact(g, cfg).matrix).max()
    assert err < 1e-6


def test_push_error_monotone_in_threshold():
    g = random_graph(50, seed=5)
    exact = propagate_exact(g, FilterConfig(alpha=0.15, rrz=0.4, r_max=1e-12)).matrix
    errs = []
    r_max = 1e-3
    for _ in range(6):
        approx = propagate_push(g, FilterConfig(alpha=0.15, rrz=0.4, r_max=r_max)).matrix
        errs.append(np.abs(approx - exact).max())
        r_max /= 2.0
    assert all(a >= b for a, b in zip(errs, errs[1:]))


def test_push_underestimates_nonnegative_features():
    g = random_graph(40, seed=6)
    cfg = FilterConfig(alpha=0.15, rrz=0.4, r_max=1e-4)
    exact = propagate_exact(g, FilterConfig(alpha=0.15, rrz=0.4, r_max=1e-12)).matrix
    approx = propagate_push(g, cfg).matrix
    assert np.all(approx <= exact + 1e-12)
    assert np.all(approx >= -1e-12)


def test_hop_count_from_residual_mass():
    cfg = FilterConfig(alpha=0.1, rrz=0.4, r_max=1e-6)
    L = cfg.n_hops
    assert (1 - 0.1) ** (L + 1) < 1e-7 <= (1 - 0.1) ** L


def test_explicit_max_hops_wins():
    cfg = FilterConfig(alpha=0.1, rrz=0.4, r_max=1e-6, max_hops=5)
    assert cfg.n_hops == 5


def test_weights_sum_below_one():
    w = gpr_weights(0.1, select_hops(FilterConfig(alpha=0.1, rrz=0.4, r_max=1e-6)))
    assert 0 < w.sum() < 1.0
    assert np.all(w[:-1] > w[1:])


def test_invalid_config_rejected():
    with pytest.raises(ValueError):
        FilterConfig(alpha=0.0, rrz=0.4, r_max=1e-6)
    with pytest.raises(ValueError):
        FilterConfig(alpha=1.5, rrz=0.4, r_max=1e-6)
    with pytest.raises(ValueError):
        FilterConfig(alpha=0.1, rrz=-0.1, r_max=1e-6)


def test_hop_operator_stochastic_limits():
    # D^(r-1) (A+I) D^(-r): column-stochastic at r=1, row-stochastic at r=0
    g = random_graph(20, seed=7)
    assert np.allclose(np.asarray(hop_operator(g, 1.0).sum(axis=0)).ravel(), 1.0)
    assert np.allclose(np.asarray(hop_operator(g, 0.0).sum(axis=1)).ravel(), 1.0)


def test_binomial_weights_match_stacked_filter():
    # the L-layer stacked smoother equals a GPR series with binomial weights
    g = random_graph(30, seed=8)
    gamma, layers = 0.7, 4
    ref = laplacian_reference_filter(g, gamma, layers)
    w = binomial_gpr_weights(gamma, layers)
    out = propagate_with_weights(g, w, 0.5)
    assert np.allclose(out, ref, atol=1e-10)
