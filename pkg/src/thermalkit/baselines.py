"""Dense oracles and random-matrix baselines.

Everything here is deliberately slow and explicit: dense Floquet matrices
for cross-checking the streaming kernels, matrix-power OTOCs, Haar
sampling, and the analytic mean/variance/freeness statements that late-time
correlators are compared against.  Dense routines refuse to run above
L = 10 (D = 1024) instead of silently allocating huge matrices.

Note on normalization: the random-matrix statements use the normalized
trace phi(M) = tr(M)/D and phi-normalized observables, phi(X^2) = 1, which
differ from the Hilbert-Schmidt normalization tr(X^2) = 1 used by the
observable bases by a factor sqrt(D).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .errors import InvalidParameterError, SizeRefusalError
from .observables import LocalObservable
from .projected import d_k_haar, rho_k_haar
from .statevector import (ChainParams, Direction, StateVector, basis_state,
                          floquet_step)

DENSE_MAX_L = 10


@dataclass
class DenseUnitary:
    """An explicit unitary on L sites."""

    L: int
    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def dense_floquet(params: ChainParams) -> DenseUnitary:
    """One Floquet period as a dense matrix, built column-by-column from
    the streaming kernel; unitarity is verified to 1e-10."""
    if params.L > DENSE_MAX_L:
        raise SizeRefusalError(
            f"dense matrices refused for L={params.L} > {DENSE_MAX_L}")
    dim = params.dim
    matrix = np.empty((dim, dim), dtype=np.complex128)
    for i in range(dim):
        st = basis_state(params.L, i)
        floquet_step(st, params, Direction.FORWARD)
        matrix[:, i] = st.amps
    drift = np.max(np.abs(matrix.conj().T @ matrix - np.eye(dim)))
    if drift > 1e-10:
        raise AssertionError(f"dense Floquet not unitary: deviation {drift:.2e}")
    return DenseUnitary(params.L, matrix)


def dense_floquet_from_matrices(params: ChainParams) -> DenseUnitary:
    """Independent construction: diag(exp(-i H^z)) times the kronecker
    power of the single-site kick.  Never touches the streaming kernels."""
    if params.L > DENSE_MAX_L:
        raise SizeRefusalError(
            f"dense matrices refused for L={params.L} > {DENSE_MAX_L}")
    c, s = np.cos(params.b), np.sin(params.b)
    kick1 = np.array([[c, -1j * s], [-1j * s, c]])
    kick = reduce(np.kron, [kick1] * params.L)
    phase = np.exp(-1j * params.ising_energies())
    return DenseUnitary(params.L, phase[:, None] * kick)


def embed_observable(X: LocalObservable, L: int) -> np.ndarray:
    """X on the low bits tensored with identity on the rest."""
    d_a = X.dim
    if d_a > (1 << L):
        raise InvalidParameterError("observable larger than the chain")
    return np.kron(np.eye((1 << L) // d_a), X.matrix)


def dense_heisenberg(U: DenseUnitary, X_full: np.ndarray,
                     t: int) -> np.ndarray:
    """X(t) = U^-t X U^t via explicit matrix powers."""
    if t < 0:
        raise InvalidParameterError(f"t must be >= 0, got {t}")
    u_t = np.linalg.matrix_power(U.matrix, t)
    return u_t.conj().T @ X_full @ u_t


def dense_otoc_from_heisenberg(x_t: np.ndarray, X_full: np.ndarray,
                               psi0: StateVector, k: int) -> float:
    """Re <psi0|(X(t) X)^k|psi0> given a precomputed X(t)."""
    m = x_t @ X_full
    v = psi0.amps
    for _ in range(k):
        v = m @ v
    return float(np.vdot(psi0.amps, v).real)


def dense_otoc(U: DenseUnitary, psi0: StateVector, X_full: np.ndarray,
               k: int, t: int) -> float:
    """Oracle OTOC by dense matrix algebra; no streaming kernels involved."""
    return dense_otoc_from_heisenberg(dense_heisenberg(U, X_full, t),
                                      X_full, psi0, k)


def dense_trace_otoc(U: DenseUnitary, X_full: np.ndarray, k: int,
                     t: int) -> float:
    """(1/D) tr((X(t) X)^k) by dense matrix powers."""
    m = dense_heisenberg(U, X_full, t) @ X_full
    return float(np.trace(np.linalg.matrix_power(m, k)).real) / U.dim


# ---------------------------------------------------------------------------
# Haar sampling
# ---------------------------------------------------------------------------

def haar_state(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Normalized complex Gaussian vector, Haar on the unit sphere."""
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """QR of a complex Ginibre matrix with the R-diagonal phase fix."""
    z = (rng.standard_normal((dim, dim))
         + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    return q * (diag / np.abs(diag))


# ---------------------------------------------------------------------------
# analytic statements for Haar-random states and late-time operators
# ---------------------------------------------------------------------------

def normalized_trace(m: np.ndarray) -> complex:
    return complex(np.trace(m) / m.shape[0])


def pure_state_mean(Y: np.ndarray) -> complex:
    """E_phi <phi|Y|phi> over Haar states equals the normalized trace."""
    return normalized_trace(Y)


def pure_state_variance(Y: np.ndarray) -> float:
    """V_phi <phi|Y|phi> = (phi(Y Y^dag) - |phi(Y)|^2) / (D + 1)."""
    d = Y.shape[0]
    second = normalized_trace(Y @ Y.conj().T).real
    first = abs(normalized_trace(Y)) ** 2
    return (second - first) / (d + 1)


def phi_normalized_diagonal(dim: int) -> np.ndarray:
    """The alternating-sign diagonal observable: traceless, phi(X^2) = 1."""
    if dim % 2:
        raise InvalidParameterError("need even dim for a traceless diagonal")
    return np.diag(np.where(np.arange(dim) % 2 == 0, 1.0, -1.0)) \
        .astype(np.complex128)


def otoc_operator(X: np.ndarray, W: np.ndarray, k: int) -> np.ndarray:
    """Y_k = ((W^dag X W) X)^k, the late-time OTOC operator model."""
    return np.linalg.matrix_power(W.conj().T @ X @ W @ X, k)


def freeness_magnitude_check(k: int, rng: np.random.Generator,
                             n_samples: int,
                             dims: tuple[int, ...] = (16, 64, 256),
                             x_builder=phi_normalized_diagonal) -> dict:
    """Magnitude scaling of phi(Y_k) for Haar-rotated operators.

    Free probability predicts |phi(Y_k)| to shrink like 1/D while
    phi(Y_k Y_k^dag) stays O(1).  Returns the per-dimension means, the
    log-log slope of |phi(Y_k)| against D, and the max/min ratio of the
    second moments, plus pass flags (slope within [-1.4, -0.6], second
    moment flat within a factor 2).
    """
    if len(dims) < 2:
        raise InvalidParameterError("need at least two dimensions")
    mean_abs, mean_second = [], []
    for dim in dims:
        x = x_builder(dim)
        acc_first = 0.0
        acc_second = 0.0
        for _ in range(n_samples):
            w = haar_unitary(dim, rng)
            y = otoc_operator(x, w, k)
            acc_first += abs(normalized_trace(y))
            acc_second += normalized_trace(y @ y.conj().T).real
        mean_abs.append(acc_first / n_samples)
        mean_second.append(acc_second / n_samples)
    slope = float(np.polyfit(np.log(dims), np.log(mean_abs), 1)[0])
    flat_ratio = float(max(mean_second) / min(mean_second))
    return {
        "k": k,
        "dims": list(dims),
        "mean_abs_phi": mean_abs,
        "mean_second_moment": mean_second,
        "slope": slope,
        "flat_ratio": flat_ratio,
        "passed_slope": -1.4 <= slope <= -0.6,
        "passed_flat": flat_ratio <= 2.0,
    }


def _khatri_rao_power(states: np.ndarray, k: int) -> np.ndarray:
    """Row-wise kronecker power of a (n, d) batch of vectors."""
    out = states
    for _ in range(k - 1):
        out = (out[:, :, None] * states[:, None, :]).reshape(states.shape[0],
                                                             -1)
    return out


def projected_haar_conditionals_check(dim_a: int, dim_b: int, k: int,
                                      rng: np.random.Generator,
                                      n_samples: int) -> dict:
    """Conditional states of Haar states are themselves Haar.

    Samples Haar states on dim_a * dim_b, conditions on outcome z = 0, and
    compares the empirical k-th moment of the conditionals entrywise with
    the Haar moment, standardized by the per-entry Monte Carlo error; also
    checks E[p_z] = 1/dim_b.  Returns max standardized deviations.
    """
    states = (rng.standard_normal((n_samples, dim_a * dim_b))
              + 1j * rng.standard_normal((n_samples, dim_a * dim_b)))
    states /= np.linalg.norm(states, axis=1, keepdims=True)
    block = states.reshape(n_samples, dim_b, dim_a)[:, 0, :]
    p0 = np.sum(np.abs(block) ** 2, axis=1)
    cond = block / np.sqrt(p0)[:, None]
    w = _khatri_rao_power(cond, k)
    moment = np.einsum("na,nb->ab", w, np.conj(w)) / n_samples
    second = np.einsum("na,nb->ab", np.abs(w) ** 2,
                       np.abs(w) ** 2) / n_samples
    exact = rho_k_haar(dim_a, k).matrix
    var = np.maximum(second - np.abs(moment) ** 2, 0.0)
    se = np.sqrt(var / n_samples)
    dev = np.abs(moment - exact)
    standardized = np.where(se > 0, dev / np.where(se > 0, se, 1.0), 0.0)
    p_se = p0.std(ddof=1) / np.sqrt(n_samples)
    return {
        "dim_a": dim_a,
        "dim_b": dim_b,
        "k": k,
        "n_samples": n_samples,
        "mean_p0": float(p0.mean()),
        "expected_p0": 1.0 / dim_b,
        "p0_standardized_dev": float(abs(p0.mean() - 1.0 / dim_b) / p_se),
        "max_moment_standardized_dev": float(standardized.max()),
        "max_moment_abs_dev": float(dev.max()),
    }


def delta_k_concentration_check(dim_a: int, dim_b_pair: tuple[int, int],
                                k: int, rng: np.random.Generator,
                                n_samples: int) -> dict:
    """std of Delta_k over Haar states shrinks like D^{-1/2}.

    Computes the observable-resolved deviation Delta_k for a fixed
    HS-normalized diagonal observable over Haar states at two total
    dimensions and returns the ratio of sample standard deviations along
    with its D^{-1/2} prediction.
    """
    x_mat = phi_normalized_diagonal(dim_a) / np.sqrt(dim_a)
    x_obs = LocalObservable("baseline:diag", x_mat)
    stds = []
    for dim_b in dim_b_pair:
        haar_val = d_k_haar(x_obs, k)
        vals = np.empty(n_samples)
        for i in range(n_samples):
            psi = haar_state(dim_a * dim_b, rng)
            block = psi.reshape(dim_b, dim_a)
            p = np.sum(np.abs(block) ** 2, axis=1)
            raw = np.einsum("za,ab,zb->z", np.conj(block), x_mat, block).real
            keep = p > 1e-300
            vals[i] = np.sum(raw[keep] ** k / p[keep] ** (k - 1)) - haar_val
        stds.append(float(np.std(vals, ddof=1)))
    ratio = stds[1] / stds[0]
    expected = np.sqrt(dim_b_pair[0] / dim_b_pair[1])
    return {
        "dim_a": dim_a,
        "dim_b_pair": list(dim_b_pair),
        "k": k,
        "n_samples": n_samples,
        "stds": stds,
        "ratio": float(ratio),
        "expected_ratio": float(expected),
    }
