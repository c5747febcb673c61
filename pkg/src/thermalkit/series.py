"""Time-series container shared by the correlator and ensemble modules."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidParameterError


@dataclass
class TimeSeries:
    """One scalar quantity sampled on an integer time grid.

    `realization` is the disorder-realization index, or None for a series
    averaged over realizations (serialized as "mean").
    """

    quantity: str
    L: int
    L_A: int
    k: int
    label: str
    times: np.ndarray
    values: np.ndarray
    realization: int | None = None

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=np.int64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.times.ndim != 1 or self.times.shape != self.values.shape:
            raise InvalidParameterError("times and values must be equal-length 1D")
        if self.times.size and (np.any(np.diff(self.times) <= 0)
                                or self.times[0] < 0):
            raise InvalidParameterError(
                "times must be strictly increasing and non-negative")

    def key(self) -> tuple:
        """Grouping key identifying the quantity independent of realization."""
        return (self.quantity, self.L, self.L_A, self.k, self.label)


def validate_time_grid(times) -> np.ndarray:
    grid = np.asarray(times, dtype=np.int64)
    if grid.ndim != 1 or grid.size == 0:
        raise InvalidParameterError("time grid must be a non-empty 1D sequence")
    if grid[0] < 0 or np.any(np.diff(grid) <= 0):
        raise InvalidParameterError(
            "time grid must be non-negative and strictly increasing")
    return grid


def mean_over_realizations(group: list[TimeSeries]) -> TimeSeries:
    """Plain arithmetic mean of per-realization series with identical keys."""
    if not group:
        raise InvalidParameterError("cannot average an empty group")
    first = group[0]
    for s in group[1:]:
        if s.key() != first.key() or not np.array_equal(s.times, first.times):
            raise InvalidParameterError("series in a group must share key and grid")
    stacked = np.stack([s.values for s in group])
    return replace(first, values=stacked.mean(axis=0), realization=None)
