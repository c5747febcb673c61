"""State vectors and Floquet kernels for the kicked mixed-field Ising chain.

One period of the drive is U = exp(-i H^z) exp(-i H^x) with

    H^z = J sum_j sz_j sz_{j+1} + sum_j h_j sz_j      (sz_{L+1} = sz_1)
    H^x = b sum_j sx_j

so a forward step applies the transverse kick first, then the diagonal
Ising phase.  A backward step is the exact adjoint: conjugate phase, then
the kick with flipped angle.

Conventions, fixed once and used everywhere:

* site j (1-based) lives on bit j-1 of the basis index, so subsystem
  A = sites 1..L_A occupies the low-order bits and the basis index splits
  as i = a + 2^{L_A} * z;
* sz|0> = +|0>, i.e. bit value 0 means spin s = +1;
* the bond sum runs literally over j = 1..L with wraparound, so for L = 2
  the single bond is counted twice.

Amplitudes are contiguous complex128 arrays mutated in place by bit-indexed
kernels; reductions (inner products, norms) use a fixed blocked pairwise
tree so results are bit-identical regardless of how work is scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from functools import reduce
from typing import Sequence

import numpy as np
from numba import njit

from .errors import InvalidParameterError

REDUCTION_BLOCK = 4096


class Direction(Enum):
    FORWARD = 1
    BACKWARD = -1


# ---------------------------------------------------------------------------
# numba kernels (operate on float64 views of interleaved complex amplitudes)
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def _kick_view(view, n_sites, c, m):
    """Apply [[c, i m], [i m, c]] to every site; view is re/im interleaved."""
    half = view.shape[0] >> 1
    for j in range(n_sites):
        step = 1 << j
        stride = step << 1
        for base in range(0, half, stride):
            for off in range(base, base + step):
                p0 = off << 1
                p1 = (off + step) << 1
                x0 = view[p0]
                y0 = view[p0 + 1]
                x1 = view[p1]
                y1 = view[p1 + 1]
                view[p0] = c * x0 - m * y1
                view[p0 + 1] = c * y0 + m * x1
                view[p1] = c * x1 - m * y0
                view[p1 + 1] = c * y1 + m * x0


@njit(cache=True, nogil=True)
def _phase_view(view, pview):
    for p in range(0, view.shape[0], 2):
        x = view[p]
        y = view[p + 1]
        pr = pview[p]
        pi = pview[p + 1]
        view[p] = x * pr - y * pi
        view[p + 1] = x * pi + y * pr


@njit(cache=True, nogil=True)
def _evolve_view(view, pview, n_sites, c, m, steps, kick_first):
    for _ in range(steps):
        if kick_first:
            _kick_view(view, n_sites, c, m)
            _phase_view(view, pview)
        else:
            _phase_view(view, pview)
            _kick_view(view, n_sites, c, m)


# ---------------------------------------------------------------------------
# parameters and states
# ---------------------------------------------------------------------------

@dataclass
class ChainParams:
    """One disorder realization of the chain.

    Attributes:
        L: number of sites (>= 2).
        J: Ising coupling.
        b: transverse kick angle.
        h: longitudinal fields, shape (L,).
    """

    L: int
    J: float
    b: float
    h: np.ndarray
    _phases: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        if not isinstance(self.L, (int, np.integer)) or self.L < 2:
            raise InvalidParameterError(f"L must be an integer >= 2, got {self.L}")
        self.L = int(self.L)
        self.J = float(self.J)
        self.b = float(self.b)
        self.h = np.asarray(self.h, dtype=np.float64).copy()
        if self.h.shape != (self.L,):
            raise InvalidParameterError(
                f"h must have shape ({self.L},), got {self.h.shape}")
        if not (np.isfinite(self.J) and np.isfinite(self.b)
                and np.all(np.isfinite(self.h))):
            raise InvalidParameterError("J, b, h must all be finite")
        self.h.setflags(write=False)

    @property
    def dim(self) -> int:
        return 1 << self.L

    def ising_energies(self) -> np.ndarray:
        """Diagonal of H^z over the computational basis, s_j = 1 - 2*bit_{j-1}."""
        idx = np.arange(self.dim, dtype=np.int64)
        bits = (idx[None, :] >> np.arange(self.L, dtype=np.int64)[:, None]) & 1
        s = 1.0 - 2.0 * bits
        bond = np.sum(s * np.roll(s, -1, axis=0), axis=0)
        return self.J * bond + self.h @ s

    def phase_diagonal(self, sign: int) -> np.ndarray:
        """exp(-i * sign * H^z) as a dense diagonal, cached per sign."""
        if sign not in (1, -1):
            raise InvalidParameterError(f"sign must be +1 or -1, got {sign}")
        cached = self._phases.get(sign)
        if cached is None:
            cached = np.exp(-1j * sign * self.ising_energies())
            cached.setflags(write=False)
            self._phases[sign] = cached
        return cached


@dataclass
class StateVector:
    """A normalized pure state on L sites; amps has length 2^L."""

    L: int
    amps: np.ndarray

    def __post_init__(self) -> None:
        self.amps = np.ascontiguousarray(self.amps, dtype=np.complex128)
        if self.amps.shape != (1 << self.L,):
            raise InvalidParameterError(
                f"amps must have shape ({1 << self.L},), got {self.amps.shape}")

    @property
    def dim(self) -> int:
        return 1 << self.L

    def copy(self) -> "StateVector":
        return StateVector(self.L, self.amps.copy())


def basis_state(L: int, index: int) -> StateVector:
    """Computational basis state |index> on L sites."""
    if not 0 <= index < (1 << L):
        raise InvalidParameterError(f"basis index {index} out of range for L={L}")
    amps = np.zeros(1 << L, dtype=np.complex128)
    amps[index] = 1.0
    return StateVector(L, amps)


def product_state(local: Sequence[complex], L: int) -> StateVector:
    """Tensor power of a normalized single-site state."""
    if L < 2:
        raise InvalidParameterError(f"L must be >= 2, got {L}")
    loc = np.asarray(local, dtype=np.complex128)
    if loc.shape != (2,):
        raise InvalidParameterError("local state must have exactly 2 amplitudes")
    if abs(np.vdot(loc, loc).real - 1.0) > 1e-12:
        raise InvalidParameterError("local state must be normalized to 1e-12")
    amps = reduce(np.kron, [loc] * L)
    return StateVector(L, amps)


def x_polarized_state(L: int) -> StateVector:
    """|+>^L: every amplitude exactly 2^(-L/2)."""
    if L < 2:
        raise InvalidParameterError(f"L must be >= 2, got {L}")
    amps = np.full(1 << L, 2.0 ** (-L / 2.0), dtype=np.complex128)
    return StateVector(L, amps)


def orthogonal_family(L: int, n: int) -> list[StateVector]:
    """n mutually orthogonal product states in the x basis.

    Member 0 is |+>^L; member m flips site m to |->, so pairwise overlaps
    vanish exactly.  Requires 1 <= n <= L + 1.
    """
    if not 1 <= n <= L + 1:
        raise InvalidParameterError(f"need 1 <= n <= L+1, got n={n}, L={L}")
    family = [x_polarized_state(L)]
    base = 2.0 ** (-L / 2.0)
    idx = np.arange(1 << L)
    for m in range(1, n):
        signs = 1.0 - 2.0 * ((idx >> (m - 1)) & 1)
        family.append(StateVector(L, base * signs.astype(np.complex128)))
    return family


# ---------------------------------------------------------------------------
# in-place kernels
# ---------------------------------------------------------------------------

def apply_kick(state: StateVector, b: float) -> StateVector:
    """Apply exp(-i b sx) to every site, in place."""
    _kick_view(state.amps.view(np.float64), state.L, np.cos(b), -np.sin(b))
    return state


def apply_ising_phase(state: StateVector, params: ChainParams,
                      sign: int) -> StateVector:
    """Multiply by exp(-i * sign * H^z), in place."""
    if state.L != params.L:
        raise InvalidParameterError("state and params disagree on L")
    _phase_view(state.amps.view(np.float64),
                params.phase_diagonal(sign).view(np.float64))
    return state


def floquet_step(state: StateVector, params: ChainParams,
                 direction: Direction = Direction.FORWARD) -> StateVector:
    """One period of the drive (or its exact adjoint), in place."""
    return evolve(state, params, 1, direction)


def evolve(state: StateVector, params: ChainParams, steps: int,
           direction: Direction = Direction.FORWARD) -> StateVector:
    """Apply `steps` Floquet periods in place.

    Forward:  kick(b) then phase(-iH^z) each period.
    Backward: phase(+iH^z) then kick(-b), the exact adjoint of forward.
    """
    if state.L != params.L:
        raise InvalidParameterError("state and params disagree on L")
    if steps < 0:
        raise InvalidParameterError(f"steps must be >= 0, got {steps}")
    if steps == 0:
        return state
    forward = direction is Direction.FORWARD
    phase = params.phase_diagonal(1 if forward else -1)
    m = -np.sin(params.b) if forward else np.sin(params.b)
    _evolve_view(state.amps.view(np.float64), phase.view(np.float64),
                 state.L, np.cos(params.b), m, steps, forward)
    return state


def apply_local(state: StateVector, obs, L_A: int) -> StateVector:
    """Apply a subsystem-A operator (sites 1..L_A, the low bits) in place.

    `obs` is anything with a 2^L_A x 2^L_A `.matrix`, or a bare ndarray.
    """
    d_a = 1 << L_A
    mat = getattr(obs, "matrix", obs)
    mat = np.asarray(mat, dtype=np.complex128)
    if L_A < 1 or L_A > state.L:
        raise InvalidParameterError(f"need 1 <= L_A <= L, got L_A={L_A}")
    if mat.shape != (d_a, d_a):
        raise InvalidParameterError(
            f"operator shape {mat.shape} does not match L_A={L_A}")
    resh = state.amps.reshape(-1, d_a)
    resh[:] = resh @ mat.T
    return state


# ---------------------------------------------------------------------------
# deterministic reductions
# ---------------------------------------------------------------------------

def _tree_sum(arr: np.ndarray):
    """Blocked pairwise sum with a fixed tree, independent of scheduling."""
    n = arr.shape[0]
    if n <= REDUCTION_BLOCK:
        return arr.sum()
    partials = [arr[i:i + REDUCTION_BLOCK].sum()
                for i in range(0, n, REDUCTION_BLOCK)]
    while len(partials) > 1:
        nxt = [partials[i] + partials[i + 1]
               for i in range(0, len(partials) - 1, 2)]
        if len(partials) % 2:
            nxt.append(partials[-1])
        partials = nxt
    return partials[0]


def inner(a: StateVector, b: StateVector) -> complex:
    """<a|b>, conjugate-linear in the first argument."""
    if a.L != b.L:
        raise InvalidParameterError("states disagree on L")
    return complex(_tree_sum(np.conj(a.amps) * b.amps))


def norm(state: StateVector) -> float:
    view = state.amps.view(np.float64)
    return float(np.sqrt(_tree_sum(view * view)))
