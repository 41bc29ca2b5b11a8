# -*- coding: utf-8 -*-

import math

import numpy as np
from hypothesis import given, settings, strategies as st

from ..errors import DimensionError, DistributionError, GridError, NonConvergence, SamplingError
from ..goalspace import DiscreteDistribution, DomainBox, StateGrid, total_variation, wasserstein1
from ..markov import (MarkovKernel, dobrushin_coefficient, empirical_contraction,
                      markov_invariant, stationary_direct)

LAZY = [[0.9, 0.1, 0.0],
        [0.2, 0.6, 0.2],
        [0.0, 0.3, 0.7]]


def test_kernel_validation():
    for rows, error in (([[0.5, 0.5]], DimensionError),
                        ([[1.0, 0.1], [0.0, 1.0]], DistributionError),
                        ([[1.5, -0.5], [0.0, 1.0]], DistributionError)):
        try:
            MarkovKernel(rows)
        except error:
            pass
        else:
            assert False, f"kernel {rows} should be rejected"
    try:
        MarkovKernel(np.eye(3), StateGrid(DomainBox.unit(1), 4))
    except GridError:
        pass
    else:
        assert False, "kernel and grid sizes must agree"
    T = MarkovKernel([[0.5, 0.5 + 1e-10], [0.0, 1.0]])
    assert np.allclose(T.rows.sum(axis=1), 1.0)


def test_from_counts_self_loop():
    T = MarkovKernel.from_counts([[2, 2, 0], [0, 0, 0], [0, 1, 3]])
    assert np.allclose(T.rows[0], [0.5, 0.5, 0.0])
    assert np.allclose(T.rows[1], [0.0, 1.0, 0.0])
    assert np.allclose(T.rows[2], [0.0, 0.25, 0.75])


def test_invariant_of_lazy_chain():
    T = MarkovKernel(LAZY)
    nu = markov_invariant(T, tol=1e-13)
    assert total_variation(T.push(nu), nu) < 1e-12
    pi = stationary_direct(T)
    assert np.allclose(nu.probs, pi.probs, atol=1e-9)
    # detailed balance for this birth-death chain: pi = (6, 3, 2) / 11
    assert np.allclose(pi.probs, np.array([6.0, 3.0, 2.0]) / 11.0, atol=1e-12)


def test_identity_kernel_keeps_uniform():
    T = MarkovKernel.identity(4)
    nu = markov_invariant(T)
    assert np.allclose(nu.probs, 0.25)


def test_periodic_kernel_does_not_converge():
    T = MarkovKernel([[0.0, 1.0], [1.0, 0.0]])
    # from the uniform start, these two are already balanced
    flip = MarkovKernel([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
    assert np.allclose(markov_invariant(T).probs, 0.5)
    assert np.allclose(markov_invariant(flip).probs, 1.0 / 3.0)
    skewed = MarkovKernel([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    try:
        markov_invariant(skewed, tol=1e-12, max_iter=200)
    except NonConvergence as err:
        a, b = err.last_iterates
        assert total_variation(a, b) > 0.1
        assert err.iterations == 200
        assert isinstance(err.point, DiscreteDistribution)
    else:
        assert False, "a periodic chain from an unbalanced start should not converge"


def test_dobrushin_coefficient():
    assert dobrushin_coefficient(MarkovKernel.identity(3)) == 1.0
    assert dobrushin_coefficient(MarkovKernel(np.full((3, 3), 1.0 / 3.0))) == 0.0
    # rows 0 and 2 overlap in 0.0 + 0.1 + 0.0
    assert math.isclose(dobrushin_coefficient(MarkovKernel(LAZY)), 0.9)


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=2 ** 32 - 1), st.sampled_from(["TV", "W1"]))
def test_push_is_nonexpansive(seed, choice):
    rng = np.random.default_rng(seed)
    T = MarkovKernel(rng.dirichlet(np.ones(5), size=5))
    d = total_variation if choice == "TV" else wasserstein1
    mu = DiscreteDistribution(rng.dirichlet(np.ones(5)), T.grid)
    nu = DiscreteDistribution(rng.dirichlet(np.ones(5)), T.grid)
    if choice == "TV":
        assert d(T.push(mu), T.push(nu)) <= d(mu, nu) + 1e-12
        assert d(T.push(mu), T.push(nu)) <= dobrushin_coefficient(T) * d(mu, nu) + 1e-12
    assert empirical_contraction(T, choice, num_pairs=16, seed=seed % 1000) >= 0.0


def test_empirical_contraction():
    T = MarkovKernel(LAZY)
    c = empirical_contraction(T, "TV", num_pairs=128, seed=7)
    assert 0.0 < c <= dobrushin_coefficient(T) + 1e-12
    assert c == empirical_contraction(T, "TV", num_pairs=128, seed=7)
    assert math.isclose(empirical_contraction(MarkovKernel.identity(3), "TV", num_pairs=8, seed=0), 1.0)


def test_empirical_contraction_degenerate():
    T = MarkovKernel.identity(1)
    try:
        empirical_contraction(T, "TV", num_pairs=4, seed=0)
    except SamplingError:
        pass
    else:
        assert False, "on a single state every pair is degenerate"


def test_two_state_chain():
    T = MarkovKernel([[0.9, 0.1], [0.2, 0.8]])
    nu = markov_invariant(T)
    assert np.allclose(nu.probs, [2.0 / 3.0, 1.0 / 3.0], atol=1e-8)
    assert math.isclose(dobrushin_coefficient(T), 0.7)
    # on two states every pair contracts by exactly |0.9 - 0.2|
    assert abs(empirical_contraction(T, "TV", num_pairs=256, seed=11) - 0.7) <= 0.02


def test_invariant_of_random_positive_kernels():
    rng = np.random.default_rng(2024)
    for _ in range(50):
        W = rng.dirichlet(np.ones(10), size=10) + 1e-3
        T = MarkovKernel(W / W.sum(axis=1, keepdims=True))
        assert np.all(T.rows > 0.0)
        nu = markov_invariant(T)
        assert total_variation(nu, stationary_direct(T)) < 1e-8


def runtests():
    test_kernel_validation()
    test_from_counts_self_loop()
    test_invariant_of_lazy_chain()
    test_identity_kernel_keeps_uniform()
    test_periodic_kernel_does_not_converge()
    test_dobrushin_coefficient()
    test_push_is_nonexpansive()
    test_empirical_contraction()
    test_empirical_contraction_degenerate()
    test_two_state_chain()
    test_invariant_of_random_positive_kernels()

if __name__ == '__main__':
    runtests()
