import math

import numpy as np
import pytest

from thermalkit.errors import InvalidParameterError, SizeRefusalError
from thermalkit.observables import (LocalObservable, example_observable,
                                    gell_mann_basis, gue_observable,
                                    tensor_power)
from thermalkit.projected import (conditional_decomposition,
                                  conditional_expectations, d_k, d_k_haar,
                                  delta_k, delta_k_frobenius,
                                  delta_k_frobenius_via_purity,
                                  delta_k_generic, frame_potential,
                                  haar_frame_potential, permutation_operator,
                                  rho_k, rho_k_haar)
from thermalkit.rng import make_rng
from thermalkit.statevector import StateVector, x_polarized_state


def random_state(L, seed):
    rng = make_rng(seed)
    amps = rng.standard_normal(1 << L) + 1j * rng.standard_normal(1 << L)
    return StateVector(L, amps / np.linalg.norm(amps))


def test_decomposition_layout_and_probs():
    s = random_state(5, 1)
    dec = conditional_decomposition(s, 2)
    assert dec.cond.shape == (4, 8)
    assert abs(dec.probs.sum() - 1.0) < 1e-12
    for z in range(8):
        assert np.array_equal(dec.cond[:, z], s.amps[4 * z:4 * z + 4])
        assert abs(dec.probs[z]
                   - np.linalg.norm(dec.cond[:, z]) ** 2) < 1e-14


def test_rho_1_is_reduced_density_matrix():
    s = random_state(6, 2)
    dec = conditional_decomposition(s, 2)
    resh = s.amps.reshape(-1, 4)
    rho_a = np.einsum("za,zb->ab", resh, np.conj(resh))
    mom = rho_k(dec, 1)
    assert np.max(np.abs(mom.matrix - rho_a)) < 1e-12
    X = gell_mann_basis(4)[5]
    assert abs(d_k(dec, X, 1)
               - np.trace(rho_a @ X.matrix).real) < 1e-12


def test_product_state_conditionals_are_identical():
    # |+>^L has the same conditional |+>_A for every outcome, so
    # D_k = <X>^k with <X> = 1/(2 sqrt(2)) for the example observable
    s = x_polarized_state(6)
    dec = conditional_decomposition(s, 2)
    X = example_observable()
    mean = 1.0 / (2.0 * math.sqrt(2.0))
    for k in (1, 2, 3):
        assert abs(d_k(dec, X, k) - mean ** k) < 1e-13


def test_delta_2_of_uniform_state_is_exact():
    # D_2 = 1/8 for the example observable; the Haar value is 1/20
    s = x_polarized_state(6)
    dec = conditional_decomposition(s, 2)
    X = example_observable()
    assert abs(d_k_haar(X, 2) - 0.05) < 1e-12
    assert abs(delta_k(dec, X, 2) - 0.075) < 1e-12


def test_d_k_haar_identity_observable():
    # for X = I/2, <phi|X|phi>^k = 2^-k for every phi, Haar or not
    X = LocalObservable("halfeye", np.eye(4) / 2.0)
    for k in (1, 2, 3, 4):
        assert abs(d_k_haar(X, k) - 2.0 ** -k) < 1e-13


def test_d_k_haar_matches_haar_moment_contraction():
    # independent route: tr(rho_Haar^(k) X^(x k))
    for X in (gell_mann_basis(4)[14], example_observable(),
              gell_mann_basis(2)[2]):
        for k in (1, 2, 3):
            ref = np.einsum("ab,ba->", rho_k_haar(X.dim, k).matrix,
                            tensor_power(X, k).matrix).real
            assert abs(d_k_haar(X, k) - ref) < 1e-12


def test_rho_k_matches_direct_sum():
    s = random_state(6, 3)
    dec = conditional_decomposition(s, 2)
    direct = np.zeros((16, 16), dtype=complex)
    for z in range(16):
        p = dec.probs[z]
        phi = dec.cond[:, z] / np.sqrt(p)
        proj = np.outer(phi, np.conj(phi))
        direct += p * np.kron(proj, proj)
    mom = rho_k(dec, 2)
    assert np.max(np.abs(mom.matrix - direct)) < 1e-12


def test_rho_k_skips_zero_probability_outcomes():
    amps = np.zeros(16, dtype=complex)
    amps[0] = amps[1] = 1.0 / np.sqrt(2.0)  # only z = 0 populated
    dec = conditional_decomposition(StateVector(4, amps), 2)
    mom = rho_k(dec, 2)
    assert abs(np.trace(mom.matrix) - 1.0) < 1e-14
    assert np.isfinite(mom.matrix).all()
    assert np.isfinite(d_k(dec, example_observable(), 3))


def test_moment_matrix_invariants():
    s = random_state(6, 4)
    dec = conditional_decomposition(s, 2)
    for k in (1, 2, 3):
        m = rho_k(dec, k).matrix
        assert np.max(np.abs(m - m.conj().T)) < 1e-12
        assert abs(np.trace(m).real - 1.0) < 1e-12
        assert np.linalg.eigvalsh(m).min() > -1e-12


def test_moment_matrix_replica_exchange_symmetry():
    s = random_state(6, 5)
    dec = conditional_decomposition(s, 2)
    m = rho_k(dec, 2).matrix
    swap = permutation_operator(4, (1, 0))
    assert np.max(np.abs(swap @ m @ swap.T - m)) < 1e-12


def test_moment_matrix_partial_trace_consistency():
    # tracing out the last replica of rho^(k) gives rho^(k-1)
    s = random_state(6, 6)
    dec = conditional_decomposition(s, 2)
    m3 = rho_k(dec, 3).matrix.reshape(16, 4, 16, 4)
    reduced = np.einsum("aibi->ab", m3)
    assert np.max(np.abs(reduced - rho_k(dec, 2).matrix)) < 1e-12


def test_permutation_operator_swap_and_composition():
    swap = permutation_operator(2, (1, 0))
    expect = np.zeros((4, 4))
    # |j0 j1> with j0 on the most significant digit: swap exchanges 01, 10
    expect[0, 0] = expect[3, 3] = expect[1, 2] = expect[2, 1] = 1.0
    assert np.array_equal(swap, expect)
    cyc = permutation_operator(3, (1, 2, 0))
    other = permutation_operator(3, (2, 0, 1))
    assert np.allclose(cyc @ cyc, other)
    assert np.allclose(cyc @ cyc @ cyc, np.eye(27))
    with pytest.raises(InvalidParameterError):
        permutation_operator(2, (0, 0))


def test_rho_k_haar_small_cases():
    m1 = rho_k_haar(4, 1).matrix
    assert np.allclose(m1, np.eye(4) / 4.0)
    m2 = rho_k_haar(2, 2).matrix
    vals = np.sort(np.linalg.eigvalsh(m2))
    assert np.allclose(vals, [0.0, 1 / 3, 1 / 3, 1 / 3], atol=1e-13)


@pytest.mark.parametrize("d_a,k", [(2, 2), (2, 3), (4, 2)])
def test_rho_k_haar_is_scaled_projector(d_a, k):
    binom = math.comb(k + d_a - 1, k)
    m = rho_k_haar(d_a, k).matrix
    assert abs(np.trace(m).real - 1.0) < 1e-12
    assert np.max(np.abs(m @ m - m / binom)) < 1e-12


def test_haar_frame_potential_values():
    assert haar_frame_potential(4, 2) == 0.1
    assert haar_frame_potential(2, 1) == 0.5
    assert abs(haar_frame_potential(4, 3) - 1 / math.comb(6, 3)) < 1e-15


def test_frame_potential_and_purity_identity():
    for seed in (7, 8, 9):
        s = random_state(6, seed)
        dec = conditional_decomposition(s, 2)
        for k in (1, 2, 3):
            fp = frame_potential(dec, k)
            m = rho_k(dec, k).matrix
            assert abs(fp - np.trace(m @ m).real) < 1e-11
            frob = delta_k_frobenius(dec, k)
            assert abs(frob - delta_k_frobenius_via_purity(dec, k)) < 1e-10


def test_generic_delta_on_tensor_power_equals_delta_k():
    s = random_state(6, 10)
    dec = conditional_decomposition(s, 2)
    X = gell_mann_basis(4)[3]
    for k in (1, 2):
        via_generic = delta_k_generic(dec, tensor_power(X, k))
        assert abs(via_generic - delta_k(dec, X, k)) < 1e-12


def test_cauchy_schwarz_bound_on_random_states():
    for seed in (11, 12, 13):
        s = random_state(6, seed)
        dec = conditional_decomposition(s, 2)
        for X in gell_mann_basis(4)[:5]:
            for k in (1, 2, 3):
                assert abs(delta_k(dec, X, k)) \
                    <= delta_k_frobenius(dec, k) + 1e-12


def test_generic_delta_bounded_by_frobenius_for_unit_gue():
    s = random_state(6, 14)
    dec = conditional_decomposition(s, 2)
    Y = gue_observable(16, seed=3, k=2)
    assert abs(delta_k_generic(dec, Y)) <= delta_k_frobenius(dec, 2) + 1e-12


def test_size_refusals_and_validation():
    s = random_state(6, 15)
    dec = conditional_decomposition(s, 2)
    with pytest.raises(SizeRefusalError):
        rho_k(dec, 7)  # 4^7 > 4096
    with pytest.raises(InvalidParameterError):
        d_k(dec, example_observable(), 0)
    with pytest.raises(InvalidParameterError):
        conditional_decomposition(s, 6)
    with pytest.raises(InvalidParameterError):
        conditional_expectations(dec, gell_mann_basis(2)[0])


def test_conditional_expectations_match_naive_loop():
    s = random_state(5, 16)
    dec = conditional_decomposition(s, 2)
    X = gell_mann_basis(4)[9]
    raw = conditional_expectations(dec, X)
    for z in range(8):
        phi = dec.cond[:, z]
        assert abs(raw[z] - (np.conj(phi) @ X.matrix @ phi).real) < 1e-13
