import numpy as np
import pytest

from thermalkit.errors import InvalidParameterError
from thermalkit.rng import make_rng
from thermalkit.statevector import (ChainParams, Direction, StateVector,
                                    apply_ising_phase, apply_kick,
                                    apply_local, basis_state, evolve,
                                    floquet_step, inner, norm,
                                    orthogonal_family, product_state,
                                    x_polarized_state)

SX = np.array([[0.0, 1.0], [1.0, 0.0]])
SZ = np.diag([1.0, -1.0])


def random_params(L, seed):
    rng = make_rng(seed)
    return ChainParams(L, 0.7, 0.65, rng.standard_normal(L) * 0.8 + 0.6)


def random_state(L, seed):
    rng = make_rng(seed)
    amps = rng.standard_normal(1 << L) + 1j * rng.standard_normal(1 << L)
    return StateVector(L, amps / np.linalg.norm(amps))


def dense_period(params, forward=True):
    """One-period unitary built from plain matrix algebra: site j is bit
    j-1, so the kick factor for site j enters the kron product at
    position L-j counted from the left."""
    L = params.L
    kick1 = np.cos(params.b) * np.eye(2) - 1j * np.sin(params.b) * SX
    kick = kick1
    for _ in range(L - 1):
        kick = np.kron(kick, kick1)
    phase = np.diag(np.exp(-1j * params.ising_energies()))
    period = phase @ kick
    return period if forward else period.conj().T


def test_basis_state_amplitudes():
    s = basis_state(3, 5)
    expect = np.zeros(8)
    expect[5] = 1.0
    assert np.array_equal(s.amps, expect.astype(complex))


def test_basis_state_rejects_out_of_range():
    with pytest.raises(InvalidParameterError):
        basis_state(3, 8)


def test_x_polarized_amplitudes_are_exact():
    s = x_polarized_state(4)
    assert np.all(s.amps == 2.0 ** -2)


def test_product_state_matches_kron():
    loc = np.array([0.6, 0.8j])
    s = product_state(loc, 3)
    expect = np.kron(np.kron(loc, loc), loc)
    assert np.allclose(s.amps, expect, atol=1e-15)


def test_product_state_rejects_unnormalized():
    with pytest.raises(InvalidParameterError):
        product_state([1.0, 1.0], 3)


def test_ising_energies_small_cases():
    # L=2 closed chain: the bond sum over j = 1..L counts the single pair
    # twice, giving 2J s1 s2 + h1 s1 + h2 s2 with s_j = +1 for bit 0.
    p = ChainParams(2, 0.7, 0.65, np.array([0.1, 0.2]))
    e = p.ising_energies()
    assert np.allclose(e[0], 2 * 0.7 + 0.1 + 0.2)   # |00>
    assert np.allclose(e[1], -2 * 0.7 - 0.1 + 0.2)  # |01>, site 1 flipped
    assert np.allclose(e[2], -2 * 0.7 + 0.1 - 0.2)  # |10>
    assert np.allclose(e[3], 2 * 0.7 - 0.1 - 0.2)   # |11>

    p3 = ChainParams(3, 0.5, 0.65, np.zeros(3))
    e3 = p3.ising_energies()
    # |001>: bonds (1,2), (2,3), (3,1) give -J + J - J = -J
    assert np.allclose(e3[1], -0.5)
    assert np.allclose(e3[0], 3 * 0.5)


def test_kick_at_quarter_period_is_global_flip():
    # exp(-i pi/2 sx) = -i sx per site, so |0..0> -> (-i)^L |1..1>
    s = basis_state(2, 0)
    apply_kick(s, np.pi / 2)
    expect = np.zeros(4, dtype=complex)
    expect[3] = -1.0
    assert np.allclose(s.amps, expect, atol=1e-15)


def test_kick_phase_on_x_polarized():
    # |+>^L is an eigenstate of every sx, eigenvalue +1
    L = 5
    s = x_polarized_state(L)
    apply_kick(s, 0.65)
    expect = np.exp(-1j * 0.65 * L) * x_polarized_state(L).amps
    assert np.allclose(s.amps, expect, atol=1e-14)


def test_kick_matches_dense_rotation():
    L = 4
    s = random_state(L, 3)
    dense = s.amps.copy()
    kick1 = np.cos(0.3) * np.eye(2) - 1j * np.sin(0.3) * SX
    full = kick1
    for _ in range(L - 1):
        full = np.kron(full, kick1)
    apply_kick(s, 0.3)
    assert np.allclose(s.amps, full @ dense, atol=1e-14)


def test_phase_matches_dense_diagonal():
    params = random_params(4, 11)
    s = random_state(4, 12)
    expect = np.exp(-1j * params.ising_energies()) * s.amps
    apply_ising_phase(s, params, 1)
    assert np.allclose(s.amps, expect, atol=1e-14)


@pytest.mark.parametrize("L,seed", [(3, 0), (5, 1), (6, 2)])
def test_evolve_matches_dense_period(L, seed):
    params = random_params(L, seed)
    s = random_state(L, seed + 100)
    expect = dense_period(params) @ (dense_period(params) @ s.amps)
    evolve(s, params, 2)
    assert np.max(np.abs(s.amps - expect)) < 1e-13


@pytest.mark.parametrize("L,seed", [(4, 5), (6, 6)])
def test_backward_matches_dense_adjoint(L, seed):
    params = random_params(L, seed)
    s = random_state(L, seed + 100)
    expect = dense_period(params, forward=False) @ s.amps
    evolve(s, params, 1, Direction.BACKWARD)
    assert np.max(np.abs(s.amps - expect)) < 1e-13


def test_forward_backward_roundtrip():
    params = random_params(8, 21)
    s = random_state(8, 22)
    ref = s.amps.copy()
    evolve(s, params, 7)
    evolve(s, params, 7, Direction.BACKWARD)
    assert np.max(np.abs(s.amps - ref)) < 1e-12


def test_fused_steps_match_repeated_single_steps():
    params = random_params(6, 31)
    a = random_state(6, 32)
    b = a.copy()
    evolve(a, params, 5)
    for _ in range(5):
        floquet_step(b, params)
    assert np.array_equal(a.amps, b.amps)


def test_norm_is_conserved():
    params = random_params(10, 41)
    s = x_polarized_state(10)
    evolve(s, params, 200)
    assert abs(norm(s) - 1.0) < 1e-12


def test_evolve_zero_steps_is_identity():
    params = random_params(4, 51)
    s = random_state(4, 52)
    ref = s.amps.copy()
    evolve(s, params, 0)
    assert np.array_equal(s.amps, ref)


def test_evolve_rejects_mismatched_sizes():
    params = random_params(4, 61)
    with pytest.raises(InvalidParameterError):
        evolve(random_state(5, 62), params, 1)


def test_apply_local_matches_kron():
    L, L_A = 5, 2
    s = random_state(L, 71)
    mat = make_rng(72).standard_normal((4, 4)) \
        + 1j * make_rng(73).standard_normal((4, 4))
    expect = np.kron(np.eye(1 << (L - L_A)), mat) @ s.amps
    apply_local(s, mat, L_A)
    assert np.allclose(s.amps, expect, atol=1e-13)


def test_apply_local_single_site_flip():
    s = basis_state(3, 0)
    apply_local(s, SX.astype(complex), 1)
    assert np.allclose(s.amps, basis_state(3, 1).amps)


def test_orthogonal_family_is_orthonormal():
    family = orthogonal_family(4, 5)
    assert len(family) == 5
    for i, a in enumerate(family):
        for j, b in enumerate(family):
            want = 1.0 if i == j else 0.0
            assert abs(inner(a, b) - want) < 1e-14


def test_orthogonal_family_first_member_is_x_polarized():
    family = orthogonal_family(3, 2)
    assert np.array_equal(family[0].amps, x_polarized_state(3).amps)


def test_orthogonal_family_rejects_oversized():
    with pytest.raises(InvalidParameterError):
        orthogonal_family(3, 5)


def test_inner_matches_vdot():
    a = random_state(9, 81)
    b = random_state(9, 82)
    assert abs(inner(a, b) - np.vdot(a.amps, b.amps)) < 1e-13


def test_inner_tree_sum_is_deterministic():
    a = random_state(13, 91)
    b = random_state(13, 92)
    assert inner(a, b) == inner(a.copy(), b.copy())
