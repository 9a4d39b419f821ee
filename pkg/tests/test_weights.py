import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dextra.digraph import Digraph, random_strongly_connected
from dextra.weights import (
    StationaryError,
    check_assumption_2c,
    consensus_bound_violations,
    consensus_rate_bound_check,
    constant_weights,
    is_column_stochastic,
    lemma_gamma,
    local_degree_weights,
    make_tilde,
    max_constant_zeta,
    metropolis_weights,
    row_stochastic_weights,
    stationary,
)


def eig_pi(A):
    """Stationary vector by dense eigendecomposition, scaled to sum n."""
    w, V = np.linalg.eig(A)
    v = np.real(V[:, np.argmin(np.abs(w - 1.0))])
    return v * (A.shape[0] / v.sum())


def test_local_degree_on_cycle(cycle3):
    A = local_degree_weights(cycle3)
    assert set(np.unique(A[A > 0])) == {0.5}


def test_local_degree_single_node():
    assert local_degree_weights(Digraph.from_edges(1, [])).tolist() == [[1.0]]


def test_local_degree_columns_sum_to_one():
    A = local_degree_weights(random_strongly_connected(10, 0.3, 1))
    assert np.abs(A.sum(axis=0) - 1).max() <= 1e-15


def test_constant_weights_out_degree_three():
    # node 0 sends to 1 and 2 (out-degree 3 with the self-loop)
    g = Digraph.from_edges(3, [(1, 0), (2, 0), (0, 1), (0, 2)])
    A = constant_weights(g, 0.01)
    assert A[0, 0] == pytest.approx(0.98, abs=1e-15)
    assert A[1, 0] == A[2, 0] == 0.01


def test_constant_weights_rejects_large_zeta():
    g = Digraph.from_edges(3, [(1, 0), (2, 0), (0, 1), (0, 2)])
    assert max_constant_zeta(g) == 0.5
    with pytest.raises(ValueError):
        constant_weights(g, 1.0)
    with pytest.raises(ValueError):
        constant_weights(g, 0.0)


@given(st.integers(2, 20), st.floats(0, 1), st.integers(0, 10_000), st.floats(1e-4, 0.999))
def test_constant_weights_column_stochastic(n, p, seed, frac):
    g = random_strongly_connected(n, p, seed)
    A = constant_weights(g, frac * max_constant_zeta(g))
    assert np.abs(A.sum(axis=0) - 1).max() <= 1e-15
    assert (np.diag(A) > 0).all()
    assert ((A > 0) == g.adjacency).all()


def test_make_tilde_identity():
    pair = make_tilde(np.eye(3), 0.5)
    assert np.array_equal(pair.A_tilde, np.eye(3))


def test_make_tilde_swap():
    pair = make_tilde(np.array([[0.0, 1.0], [1.0, 0.0]]), 0.5)
    assert np.array_equal(pair.A_tilde, np.full((2, 2), 0.5))


def test_make_tilde_theta_03_column_sums():
    A = local_degree_weights(random_strongly_connected(8, 0.4, 3))
    pair = make_tilde(A, 0.3)
    assert np.abs(pair.A_tilde.sum(axis=0) - 1).max() <= 1e-15


@pytest.mark.parametrize("theta", [0.0, -0.1, 0.51, 1.0])
def test_make_tilde_rejects_theta(theta):
    with pytest.raises(ValueError):
        make_tilde(np.eye(2), theta)


def test_make_tilde_rejects_non_stochastic():
    with pytest.raises(ValueError):
        make_tilde(np.full((2, 2), 0.6))


@given(st.integers(1, 12), st.floats(0, 1), st.integers(0, 10_000), st.floats(0.01, 0.5))
def test_tilde_difference_is_theta_times_laplacian(n, p, seed, theta):
    A = local_degree_weights(random_strongly_connected(n, p, seed))
    pair = make_tilde(A, theta)
    assert np.abs((pair.A_tilde - pair.A) - theta * (np.eye(n) - A)).max() <= 1e-15
    assert is_column_stochastic(pair.A_tilde)


def test_stationary_doubly_stochastic():
    info = stationary(np.full((4, 4), 0.25))
    assert np.allclose(info.pi, 1.0, atol=1e-15)


def test_stationary_single():
    info = stationary(np.array([[1.0]]))
    assert info.pi.tolist() == [1.0] and info.gamma == 0.0 and info.C == 4.0


def test_stationary_matches_eigen_oracle(cycle3):
    A = local_degree_weights(cycle3)
    assert np.abs(stationary(A).pi - eig_pi(A)).max() <= 1e-10


@given(st.integers(2, 15), st.floats(0, 1), st.integers(0, 10_000))
def test_stationary_properties(n, p, seed):
    A = local_degree_weights(random_strongly_connected(n, p, seed))
    info = stationary(A)
    assert np.linalg.norm(A @ info.pi - info.pi) <= 1e-12
    assert info.pi.sum() == pytest.approx(n, rel=1e-14)
    assert (info.pi > 0).all()
    assert np.abs(info.pi - eig_pi(A)).max() <= 1e-9


def test_stationary_tail_is_monotone():
    A = local_degree_weights(random_strongly_connected(6, 0.3, 2))
    info = stationary(A)
    y, gaps = np.ones(6), []
    for _ in range(400):
        y = A @ y
        gaps.append(np.linalg.norm(y - info.pi))
    # beyond the mixing transient the gap only shrinks (up to rounding)
    tail = np.array(gaps[50:])
    tail = tail[tail > 1e-13]
    assert (np.diff(tail) <= 1e-15).all()


def test_stationary_fails_on_periodic_matrix():
    with pytest.raises(StationaryError):
        # bipartite: A 1 = (2, .5, .5), A^2 1 = 1, so the iteration oscillates
        stationary(np.array([[0.0, 1.0, 1.0], [0.5, 0.0, 0.0], [0.5, 0.0, 0.0]]), max_iter=1000)


def test_assumption_2c_identity():
    pair = make_tilde(np.eye(3))
    info = stationary(pair.A)
    ok, lam = check_assumption_2c(pair, info)
    assert ok and lam == pytest.approx(2.0 * (1 / info.pi).min())


def test_assumption_2c_cycle_matches_eigensolver(cycle3):
    pair = make_tilde(local_degree_weights(cycle3), 0.5)
    info = stationary(pair.A)
    D = np.diag(1.0 / eig_pi(pair.A))
    S = D @ pair.A_tilde + pair.A_tilde.T @ D
    _, lam = check_assumption_2c(pair, info)
    assert lam == pytest.approx(np.linalg.eigvalsh(S)[0], abs=1e-10)


def test_assumption_2c_rejects_mismatched_sizes(cycle3):
    pair = make_tilde(local_degree_weights(cycle3))
    with pytest.raises(ValueError):
        check_assumption_2c(pair, stationary(np.eye(2)))


@given(st.integers(2, 20), st.floats(0, 1), st.integers(0, 10_000), st.sampled_from([0.01, 0.005, 0.001]))
def test_small_zeta_passes_assumption_2c(n, p, seed, zeta):
    g = random_strongly_connected(n, p, seed)
    if zeta >= max_constant_zeta(g):
        return
    pair = make_tilde(constant_weights(g, zeta), 0.5)
    assert check_assumption_2c(pair, stationary(pair.A))[0]


def test_lemma_gamma_values():
    assert lemma_gamma(1) == 0.0
    assert lemma_gamma(2) == 0.75
    assert lemma_gamma(500) == 1.0


def test_consensus_bound_doubly_stochastic():
    A = np.full((2, 2), 0.5)
    assert consensus_rate_bound_check(A, stationary(A), 50)


def test_consensus_bound_cycle(cycle3):
    A = local_degree_weights(cycle3)
    assert consensus_rate_bound_check(A, stationary(A), 200)


def test_consensus_bound_random_four_nodes():
    A = local_degree_weights(random_strongly_connected(4, 0.3, 11))
    assert consensus_rate_bound_check(A, stationary(A), 100)


def test_consensus_bound_violation_is_reported():
    A = local_degree_weights(random_strongly_connected(3, 0.0, 1))
    bad = consensus_bound_violations(A, stationary(A), 5, C=1e-6)
    assert bad and all(gap >= bound for _, _, _, gap, bound in bad)


def test_row_stochastic_weights():
    g = random_strongly_connected(7, 0.3, 5)
    W = row_stochastic_weights(g)
    assert np.abs(W.sum(axis=1) - 1).max() <= 1e-15


def test_metropolis_weights_symmetric_doubly_stochastic():
    from dextra.digraph import random_undirected_connected

    W = metropolis_weights(random_undirected_connected(9, 0.3, 4))
    assert np.array_equal(W, W.T)
    assert np.abs(W.sum(axis=0) - 1).max() <= 1e-15
    assert (np.diag(W) > 0).all()


def test_metropolis_rejects_directed(cycle3):
    with pytest.raises(ValueError):
        metropolis_weights(cycle3)
