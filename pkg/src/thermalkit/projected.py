"""Projected ensembles, their replica moments, and Haar baselines.

Measuring the complement B of a bipartition A|B in the computational basis
leaves subsystem A in the conditional state phi_z with probability p_z.
The k-th moment of that ensemble,

    rho^(k) = sum_z p_z (|phi_z><phi_z|)^(x k),

is compared against the k-th moment of the Haar ensemble, which is the
normalized projector onto the symmetric subspace written as a permutation
sum.  Observable-resolved moments D_k = sum_z p_z <phi_z|X|phi_z>^k avoid
building any replica matrix and are the cheap route used in time loops.

All routines consume unnormalized conditionals phi~_z (column z of the
reshaped state) and divide by powers of p_z at the end, skipping columns
with p_z below ZERO_PROB_THRESHOLD.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations

import numpy as np

from .errors import InvalidParameterError, SizeRefusalError
from .observables import (MAX_REPLICA_DIM, LocalObservable,
                          MultiReplicaObservable)
from .statevector import StateVector

ZERO_PROB_THRESHOLD = 1e-300
MAX_PERMUTATION_K = 8
_MOMENT_CHUNK = 1024


@dataclass
class ConditionalDecomposition:
    """Conditional states of A for every measurement outcome z on B.

    cond[:, z] is the unnormalized conditional phi~_z = psi[a + D_A * z],
    probs[z] = ||phi~_z||^2.  Probabilities sum to the state norm.
    """

    L: int
    L_A: int
    probs: np.ndarray
    cond: np.ndarray

    @property
    def d_a(self) -> int:
        return 1 << self.L_A

    @property
    def d_b(self) -> int:
        return 1 << (self.L - self.L_A)


def conditional_decomposition(state: StateVector,
                              L_A: int) -> ConditionalDecomposition:
    """Split a state into conditional A-states indexed by B outcomes."""
    if not 1 <= L_A < state.L:
        raise InvalidParameterError(f"need 1 <= L_A < L, got L_A={L_A}")
    d_a = 1 << L_A
    cond = np.ascontiguousarray(state.amps.reshape(-1, d_a).T)
    view = cond.view(np.float64)
    probs = np.einsum("az->z", (view[:, 0::2] ** 2 + view[:, 1::2] ** 2))
    return ConditionalDecomposition(state.L, L_A, probs, cond)


# ---------------------------------------------------------------------------
# observable-resolved moments
# ---------------------------------------------------------------------------

def conditional_expectations(decomp: ConditionalDecomposition,
                             X: LocalObservable) -> np.ndarray:
    """<phi~_z| X |phi~_z> for every z (unnormalized, real for Hermitian X)."""
    if X.dim != decomp.d_a:
        raise InvalidParameterError(
            f"observable dim {X.dim} does not match D_A={decomp.d_a}")
    applied = X.matrix @ decomp.cond
    return np.einsum("az,az->z", np.conj(decomp.cond), applied).real


def d_k(decomp: ConditionalDecomposition, X: LocalObservable, k: int) -> float:
    """D_k = sum_z p_z <phi_z|X|phi_z>^k over outcomes with p_z > 0."""
    if k < 1:
        raise InvalidParameterError(f"k must be >= 1, got {k}")
    raw = conditional_expectations(decomp, X)
    return d_k_from_expectations(raw, decomp.probs, k)


def d_k_from_expectations(raw: np.ndarray, probs: np.ndarray,
                          k: int) -> float:
    """D_k from precomputed unnormalized expectations; shared fast path."""
    mask = probs > ZERO_PROB_THRESHOLD
    if k == 1:
        return float(np.sum(raw[mask]))
    return float(np.sum(raw[mask] ** k / probs[mask] ** (k - 1)))


@lru_cache(maxsize=None)
def _haar_prefactor(d_a: int, k: int) -> float:
    # (D_A - 1)! / (D_A + k - 1)! = 1 / (D_A (D_A+1) .. (D_A+k-1))
    denom = 1
    for m in range(k):
        denom *= d_a + m
    return 1.0 / denom


def d_k_haar(X: LocalObservable, k: int) -> float:
    """Haar-ensemble moment: prefactor * sum over S_k of the cycle-trace
    product prod_c tr(X^|c|)."""
    if not 1 <= k <= MAX_PERMUTATION_K:
        raise SizeRefusalError(
            f"permutation enumeration limited to k <= {MAX_PERMUTATION_K}")
    tr_pow = _trace_powers(X.matrix, k)
    total = 0.0
    for perm in permutations(range(k)):
        prod = 1.0
        for length in _cycle_lengths(perm):
            prod *= tr_pow[length]
        total += prod
    return _haar_prefactor(X.dim, k) * total


def _trace_powers(matrix: np.ndarray, k: int) -> np.ndarray:
    out = np.empty(k + 1)
    out[0] = matrix.shape[0]
    power = matrix
    out[1] = np.trace(power).real
    for m in range(2, k + 1):
        power = power @ matrix
        out[m] = np.trace(power).real
    return out


def _cycle_lengths(perm: tuple) -> list[int]:
    seen = [False] * len(perm)
    lengths = []
    for start in range(len(perm)):
        if seen[start]:
            continue
        length = 0
        pos = start
        while not seen[pos]:
            seen[pos] = True
            pos = perm[pos]
            length += 1
        lengths.append(length)
    return lengths


def delta_k(decomp: ConditionalDecomposition, X: LocalObservable,
            k: int) -> float:
    """Observable-resolved deviation from the Haar ensemble."""
    return d_k(decomp, X, k) - d_k_haar(X, k)


# ---------------------------------------------------------------------------
# replica moment matrices
# ---------------------------------------------------------------------------

@dataclass
class MomentMatrix:
    """k-th replica moment on (C^D_A)^(x k); replica 0 is the most
    significant index digit."""

    k: int
    d_a: int
    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def _check_replica_dim(d_a: int, k: int) -> int:
    if k < 1:
        raise InvalidParameterError(f"k must be >= 1, got {k}")
    dim = d_a ** k
    if dim > MAX_REPLICA_DIM:
        raise SizeRefusalError(
            f"replica dimension {d_a}^{k} exceeds limit {MAX_REPLICA_DIM}")
    return dim


def rho_k(decomp: ConditionalDecomposition, k: int) -> MomentMatrix:
    """Explicit k-th moment sum_z p_z (|phi_z><phi_z|)^(x k).

    Built from the Khatri-Rao power of the conditional matrix and
    accumulated over fixed z-chunks so the summation order never depends
    on scheduling.
    """
    dim = _check_replica_dim(decomp.d_a, k)
    mask = decomp.probs > ZERO_PROB_THRESHOLD
    cols = decomp.cond[:, mask]
    probs = decomp.probs[mask]
    kr = cols
    for _ in range(k - 1):
        kr = (kr[:, None, :] * cols[None, :, :]).reshape(-1, cols.shape[1])
    if k > 1:
        kr = kr * probs ** (-(k - 1) / 2.0)
    out = np.zeros((dim, dim), dtype=np.complex128)
    for lo in range(0, kr.shape[1], _MOMENT_CHUNK):
        chunk = kr[:, lo:lo + _MOMENT_CHUNK]
        out += np.einsum("az,bz->ab", chunk, np.conj(chunk))
    return MomentMatrix(k, decomp.d_a, out)


@lru_cache(maxsize=None)
def _rho_k_haar_matrix(d_a: int, k: int) -> np.ndarray:
    dim = _check_replica_dim(d_a, k)
    if k > MAX_PERMUTATION_K:
        raise SizeRefusalError(
            f"permutation enumeration limited to k <= {MAX_PERMUTATION_K}")
    acc = np.zeros((dim, dim))
    for perm in permutations(range(k)):
        acc += permutation_operator(d_a, perm)
    acc *= _haar_prefactor(d_a, k)
    out = acc.astype(np.complex128)
    out.setflags(write=False)
    return out


def rho_k_haar(d_a: int, k: int) -> MomentMatrix:
    """Haar moment: (D_A-1)!/(D_A+k-1)! times the sum of replica
    permutation operators (the normalized symmetric-subspace projector)."""
    return MomentMatrix(k, d_a, _rho_k_haar_matrix(d_a, k))


def permutation_operator(d: int, sigma: tuple) -> np.ndarray:
    """Replica permutation: P |j_0 .. j_{k-1}> = |j_sigma(0) .. j_sigma(k-1)>,
    output replica r carrying input replica sigma(r)."""
    k = len(sigma)
    if sorted(sigma) != list(range(k)):
        raise InvalidParameterError(f"{sigma} is not a permutation of 0..{k-1}")
    dim = d ** k
    tensor = np.eye(dim).reshape([d] * (2 * k))
    inverse = [0] * k
    for r, s in enumerate(sigma):
        inverse[s] = r
    axes = list(inverse) + list(range(k, 2 * k))
    return tensor.transpose(axes).reshape(dim, dim)


def haar_frame_potential(d_a: int, k: int) -> float:
    """Frame potential of the Haar ensemble, 1 / C(k + D_A - 1, k)."""
    if k < 1 or d_a < 2:
        raise InvalidParameterError("need k >= 1 and D_A >= 2")
    return 1.0 / math.comb(k + d_a - 1, k)


def frame_potential(decomp: ConditionalDecomposition, k: int) -> float:
    """tr(rho^(k) rho^(k)) of the projected ensemble."""
    return frame_potential_from_moment(rho_k(decomp, k))


def frame_potential_from_moment(moment: MomentMatrix) -> float:
    view = moment.matrix.view(np.float64)
    return float(np.sum(view * view))


def delta_k_frobenius(decomp: ConditionalDecomposition, k: int) -> float:
    """Frobenius distance ||rho^(k) - rho_Haar^(k)||, explicit-matrix route."""
    return delta_k_frobenius_from_moment(rho_k(decomp, k))


def delta_k_frobenius_from_moment(moment: MomentMatrix) -> float:
    diff = moment.matrix - _rho_k_haar_matrix(moment.d_a, moment.k)
    view = diff.view(np.float64)
    return float(np.sqrt(np.sum(view * view)))


def delta_k_frobenius_via_purity(decomp: ConditionalDecomposition,
                                 k: int) -> float:
    """Same distance through the purity identity
    delta_k^2 = frame_potential - haar_frame_potential; cross-check route."""
    gap = (frame_potential(decomp, k)
           - haar_frame_potential(decomp.d_a, k))
    return float(np.sqrt(max(gap, 0.0)))


def delta_k_generic(decomp: ConditionalDecomposition,
                    Y: MultiReplicaObservable) -> float:
    """tr((rho^(k) - rho_Haar^(k)) Y) for an arbitrary replica observable."""
    return delta_k_generic_from_moment(rho_k(decomp, Y.k), Y)


def delta_k_generic_from_moment(moment: MomentMatrix,
                                Y: MultiReplicaObservable) -> float:
    if Y.dim != moment.dim:
        raise InvalidParameterError(
            f"observable dim {Y.dim} does not match moment dim {moment.dim}")
    diff = moment.matrix - _rho_k_haar_matrix(moment.d_a, moment.k)
    return float(np.einsum("ab,ba->", diff, Y.matrix).real)
