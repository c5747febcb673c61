"""Higher-order out-of-time-order correlators of local observables.

The order-k correlator of X on subsystem A is

    F_k(t) = Re <psi0| (X(t) X)^k |psi0>,    X(t) = U^-t X U^t,

evaluated without ever forming U: each factor X(t)X is realized as
apply X, evolve forward t periods, apply X, evolve backward t periods.
Every time point restarts from psi0, so one point costs 2*k*t Floquet
steps and no approximation enters anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidParameterError, SizeRefusalError
from .observables import LocalObservable
from .series import TimeSeries, validate_time_grid
from .statevector import (ChainParams, Direction, StateVector, apply_local,
                          basis_state, evolve, inner, orthogonal_family)

EXACT_TRACE_MAX_L = 14


@dataclass
class OtocRequest:
    """Everything needed to evaluate one F_k series for one realization."""

    psi0: StateVector
    params: ChainParams
    X: LocalObservable
    L_A: int
    k: int
    times: Sequence[int]
    realization: int | None = None

    def __post_init__(self) -> None:
        self.times = validate_time_grid(self.times)
        if self.k < 1:
            raise InvalidParameterError(f"k must be >= 1, got {self.k}")
        if self.psi0.L != self.params.L:
            raise InvalidParameterError("psi0 and params disagree on L")
        if self.X.dim != (1 << self.L_A):
            raise InvalidParameterError(
                f"observable dim {self.X.dim} does not match L_A={self.L_A}")
        if self.L_A >= self.params.L:
            raise InvalidParameterError("need L_A < L")


def _otoc_value(psi0: StateVector, params: ChainParams, X: LocalObservable,
                L_A: int, k: int, t: int) -> float:
    v = psi0.copy()
    for _ in range(k):
        apply_local(v, X, L_A)
        evolve(v, params, t, Direction.FORWARD)
        apply_local(v, X, L_A)
        evolve(v, params, t, Direction.BACKWARD)
    return inner(psi0, v).real


def f_k_pure(req: OtocRequest) -> TimeSeries:
    """F_k(t) for a pure initial state, exact to machine precision."""
    values = [_otoc_value(req.psi0, req.params, req.X, req.L_A, req.k, int(t))
              for t in req.times]
    return TimeSeries("Fk", req.params.L, req.L_A, req.k, req.X.label,
                      req.times, np.array(values), req.realization)


def f_k_batch(psi0: StateVector, params: ChainParams,
              observables: Sequence[LocalObservable], k_list: Sequence[int],
              times: Sequence[int], L_A: int,
              realization: int | None = None) -> list[TimeSeries]:
    """F_k series for several observables and orders.

    Evolution cannot be shared across observables without changing the
    floating-point stream, so this is a plain deterministic loop whose
    output is bit-identical to individual f_k_pure calls.
    """
    out = []
    for X in observables:
        for k in k_list:
            req = OtocRequest(psi0, params, X, L_A, int(k), times, realization)
            out.append(f_k_pure(req))
    return out


def _trace_value_k1(params: ChainParams, X: LocalObservable, L_A: int,
                    t: int) -> float:
    """(1/D) tr(X(t) X) via evolved basis-state blocks.

    For k = 1 only the z-diagonal blocks of the Heisenberg operator enter
    the trace: with V_a = U^t |a, z>, the z-slice contributes
    tr(G_z X) where G_z[a, a'] = <V_a| X |V_{a'}>.  Costs D evolutions of
    t steps, half the naive per-basis-state schedule.
    """
    d_a = 1 << L_A
    d_b = 1 << (params.L - L_A)
    acc = 0.0
    for z in range(d_b):
        evolved = np.empty((d_a, params.dim), dtype=np.complex128)
        for a in range(d_a):
            st = basis_state(params.L, a + d_a * z)
            evolve(st, params, t, Direction.FORWARD)
            evolved[a] = st.amps
        applied = (evolved.reshape(d_a, d_b, d_a) @ X.matrix.T).reshape(d_a, -1)
        gram = np.conj(evolved) @ applied.T
        acc += np.trace(gram @ X.matrix).real
    return acc / params.dim


def _trace_value(params: ChainParams, X: LocalObservable, L_A: int, k: int,
                 t: int) -> float:
    """(1/D) tr((X(t) X)^k) by running the OTOC circuit over the full basis."""
    if k == 1:
        return _trace_value_k1(params, X, L_A, t)
    acc = 0.0
    for i in range(params.dim):
        v = basis_state(params.L, i)
        for _ in range(k):
            apply_local(v, X, L_A)
            evolve(v, params, t, Direction.FORWARD)
            apply_local(v, X, L_A)
            evolve(v, params, t, Direction.BACKWARD)
        acc += v.amps[i].real
    return acc / params.dim


def f_k_infinite_temperature(params: ChainParams, X: LocalObservable,
                             L_A: int, k: int, times: Sequence[int],
                             mode: str = "exact-trace",
                             n_states: int = 3) -> TimeSeries:
    """Infinite-temperature F_k, either exactly or via a small state average.

    mode "exact-trace" computes (1/D) tr((X(t) X)^k) and is refused above
    L = 14; mode "orthogonal-average" averages f_k_pure over n_states
    mutually orthogonal x-basis product states.
    """
    grid = validate_time_grid(times)
    if X.dim != (1 << L_A):
        raise InvalidParameterError(
            f"observable dim {X.dim} does not match L_A={L_A}")
    if L_A >= params.L:
        raise InvalidParameterError("need L_A < L")
    if k < 1:
        raise InvalidParameterError(f"k must be >= 1, got {k}")
    if mode == "exact-trace":
        if params.L > EXACT_TRACE_MAX_L:
            raise SizeRefusalError(
                f"exact trace refused for L={params.L} > {EXACT_TRACE_MAX_L}")
        values = [_trace_value(params, X, L_A, k, int(t)) for t in grid]
        return TimeSeries("FkInf", params.L, L_A, k, X.label, grid,
                          np.array(values))
    if mode == "orthogonal-average":
        family = orthogonal_family(params.L, n_states)
        acc = np.zeros(grid.size)
        for member in family:
            acc += [_otoc_value(member, params, X, L_A, k, int(t))
                    for t in grid]
        return TimeSeries("FkAvg", params.L, L_A, k, X.label, grid,
                          acc / n_states)
    raise InvalidParameterError(f"unknown mode {mode!r}")
