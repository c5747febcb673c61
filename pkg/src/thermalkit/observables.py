"""Hermitian observables on subsystem A and their replicated versions.

Every basis element produced here is traceless and Hilbert-Schmidt
normalized, tr(X^dag X) = 1, which is the normalization all moment and
correlator routines assume.  Labels are short stable strings that end up
verbatim in CSV output, so they must not depend on runtime state.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce

import numpy as np

from .errors import InvalidParameterError, SizeRefusalError
from .rng import make_rng

MAX_REPLICA_DIM = 4096

_PAULI = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


def _check_hermitian(matrix: np.ndarray, label: str) -> None:
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise InvalidParameterError(f"{label}: matrix must be square")
    if np.max(np.abs(matrix - matrix.conj().T)) > 1e-12:
        raise InvalidParameterError(f"{label}: matrix is not Hermitian")


@dataclass
class LocalObservable:
    """A Hermitian operator on subsystem A."""

    label: str
    matrix: np.ndarray

    def __post_init__(self) -> None:
        self.matrix = np.ascontiguousarray(self.matrix, dtype=np.complex128)
        _check_hermitian(self.matrix, self.label)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass
class MultiReplicaObservable:
    """A Hermitian operator on k copies of subsystem A."""

    label: str
    k: int
    matrix: np.ndarray

    def __post_init__(self) -> None:
        self.matrix = np.ascontiguousarray(self.matrix, dtype=np.complex128)
        _check_hermitian(self.matrix, self.label)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def hs_norm(matrix: np.ndarray) -> float:
    """Hilbert-Schmidt norm sqrt(tr(X^dag X))."""
    return float(np.sqrt(np.sum(np.abs(matrix) ** 2)))


def gell_mann_basis(D: int) -> list[LocalObservable]:
    """The D^2 - 1 generalized Gell-Mann matrices, HS-normalized.

    Order: symmetric pairs (E_jk + E_kj)/sqrt(2) for j < k, then
    antisymmetric pairs -i(E_jk - E_kj)/sqrt(2), then the D - 1 diagonal
    elements (E_00 + .. + E_{l-1,l-1} - l E_ll)/sqrt(l(l+1)).
    For D = 2 this is the Pauli basis over sqrt(2).
    """
    if D < 2:
        raise InvalidParameterError(f"D must be >= 2, got {D}")
    sep = "" if D <= 10 else "."
    out = []
    for j in range(D):
        for k in range(j + 1, D):
            m = np.zeros((D, D), dtype=np.complex128)
            m[j, k] = m[k, j] = 1.0 / np.sqrt(2.0)
            out.append(LocalObservable(f"gm{D}:s{j}{sep}{k}", m))
    for j in range(D):
        for k in range(j + 1, D):
            m = np.zeros((D, D), dtype=np.complex128)
            m[j, k] = -1j / np.sqrt(2.0)
            m[k, j] = 1j / np.sqrt(2.0)
            out.append(LocalObservable(f"gm{D}:a{j}{sep}{k}", m))
    for l in range(1, D):
        diag = np.zeros(D)
        diag[:l] = 1.0
        diag[l] = -l
        m = np.diag(diag / np.sqrt(l * (l + 1.0))).astype(np.complex128)
        out.append(LocalObservable(f"gm{D}:d{l}", m))
    return out


def pauli_string_basis(L_A: int) -> list[LocalObservable]:
    """All 4^L_A - 1 non-identity Pauli strings, scaled by 2^(-L_A/2).

    The label lists sites 1..L_A left to right ("XZ" is X on site 1,
    Z on site 2); site 1 is the low bit of the subsystem index.
    """
    if L_A < 1:
        raise InvalidParameterError(f"L_A must be >= 1, got {L_A}")
    scale = 2.0 ** (-L_A / 2.0)
    letters = "IXYZ"
    out = []
    for code in range(1, 4 ** L_A):
        digits = [(code >> (2 * site)) & 3 for site in range(L_A)]
        label = "".join(letters[d] for d in digits)
        # np.kron puts its first factor on the high bits, so iterate sites
        # in reverse to keep site 1 on the low bit.
        mat = reduce(np.kron, [_PAULI[letters[d]] for d in reversed(digits)])
        out.append(LocalObservable(f"pauli:{label}", scale * mat))
    return out


def example_observable() -> LocalObservable:
    """The two-site demo observable: hop between A-basis states 0 and 2.

    Coincides with the symmetric Gell-Mann element gm4:s02 up to label.
    """
    m = np.zeros((4, 4), dtype=np.complex128)
    m[0, 2] = m[2, 0] = 1.0 / np.sqrt(2.0)
    return LocalObservable("example", m)


def gue_observable(dim: int, seed: int, k: int = 1) -> MultiReplicaObservable:
    """A GUE-distributed Hermitian matrix, rescaled to tr(Y^dag Y) = 1."""
    if dim < 2:
        raise InvalidParameterError(f"dim must be >= 2, got {dim}")
    if dim > MAX_REPLICA_DIM:
        raise SizeRefusalError(f"GUE dim {dim} exceeds limit {MAX_REPLICA_DIM}")
    rng = make_rng(seed)
    a = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)))
    a /= np.sqrt(2.0)
    g = (a + a.conj().T) / 2.0
    g /= hs_norm(g)
    return MultiReplicaObservable(f"gue:s{seed}", k, g)


def tensor_power(X: LocalObservable, k: int) -> MultiReplicaObservable:
    """X tensored with itself k times; replica r sits on the r-th index block
    counted from the most significant digit."""
    if k < 1:
        raise InvalidParameterError(f"k must be >= 1, got {k}")
    if X.dim ** k > MAX_REPLICA_DIM:
        raise SizeRefusalError(
            f"replica dimension {X.dim}^{k} exceeds limit {MAX_REPLICA_DIM}")
    mat = reduce(np.kron, [X.matrix] * k)
    return MultiReplicaObservable(X.label, k, mat)
