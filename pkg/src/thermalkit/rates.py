"""Decay-rate extraction by exact least-absolute-deviations fitting.

Rates are read off from log-magnitude series on a time window chosen to
end well above the finite-size plateau.  The L1 line fit enumerates all
point pairs (an optimal L1 line always interpolates at least two points),
so it is exact, deterministic, and robust to a minority of outliers; no
iterative solver is involved.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import (DegenerateInputError, InsufficientDataError,
                     InvalidParameterError)
from .series import TimeSeries

MIN_FIT_POINTS = 4
PLATEAU_DROP_FACTOR = 3.0
WINDOW_PLATEAU_FACTOR = 3.0
FALLBACK_WINDOW = (5, 25)
EARLY_WINDOW = (2, 7)
_PAIR_CHUNK = 2048


@dataclass
class PlateauEstimate:
    """Mean |value| over a late-time window, across series and times."""

    value: float
    window: tuple[int, int]
    n_samples: int


@dataclass
class RateFit:
    """An exponential decay rate gamma fitted as -slope of ln|v| vs t."""

    quantity: str
    L: int
    L_A: int
    k: int
    window: tuple[int, int]
    gamma: float
    intercept: float
    n_points: int
    l1_residual: float
    pooling_mode: str
    config_hash: str = ""

    def to_dict(self) -> dict:
        return {
            "quantity": self.quantity,
            "L": self.L,
            "L_A": self.L_A,
            "k": self.k,
            "window_lo": int(self.window[0]),
            "window_hi": int(self.window[1]),
            "gamma": self.gamma,
            "intercept": self.intercept,
            "n_points": self.n_points,
            "l1_residual": self.l1_residual,
            "pooling_mode": self.pooling_mode,
            "config_hash": self.config_hash,
        }


def lad_line_fit(t: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    """Exact L1 line fit by pair enumeration.

    Evaluates the summed absolute residual of the line through every pair
    of points with distinct abscissae and returns (slope, intercept,
    residual) of the best; residual ties within 1e-12 relative are broken
    by smaller |slope|, then smaller |intercept|, then by value, which
    makes the result independent of enumeration order.
    """
    t = np.asarray(t, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if t.ndim != 1 or t.shape != y.shape or t.size < 2:
        raise DegenerateInputError("need at least two 1D points")
    if np.unique(t).size < 2:
        raise DegenerateInputError("need at least two distinct abscissae")
    ii, jj = np.triu_indices(t.size, k=1)
    keep = t[ii] != t[jj]
    ii, jj = ii[keep], jj[keep]
    slopes = (y[jj] - y[ii]) / (t[jj] - t[ii])
    intercepts = y[ii] - slopes * t[ii]
    residuals = np.empty(slopes.size)
    for lo in range(0, slopes.size, _PAIR_CHUNK):
        hi = min(lo + _PAIR_CHUNK, slopes.size)
        pred = intercepts[lo:hi, None] + slopes[lo:hi, None] * t[None, :]
        residuals[lo:hi] = np.sum(np.abs(y[None, :] - pred), axis=1)
    best = residuals.min()
    cand = np.flatnonzero(residuals <= best + 1e-12 * (1.0 + abs(best)))
    order = np.lexsort((intercepts[cand], slopes[cand],
                        np.abs(intercepts[cand]), np.abs(slopes[cand])))
    pick = cand[order[0]]
    return float(slopes[pick]), float(intercepts[pick]), float(residuals[pick])


def plateau_value(series_list: list[TimeSeries],
                  window: tuple[int, int] = (45, 50)) -> PlateauEstimate:
    """Mean |value| over the window, pooled across all given series."""
    lo, hi = window
    samples = []
    for s in series_list:
        mask = (s.times >= lo) & (s.times <= hi)
        samples.append(np.abs(s.values[mask]))
    pooled = np.concatenate(samples) if samples else np.empty(0)
    if pooled.size == 0:
        raise InsufficientDataError(
            f"no samples inside plateau window {window}")
    return PlateauEstimate(float(pooled.mean()), (int(lo), int(hi)),
                           int(pooled.size))


def default_window(series_list: list[TimeSeries],
                   plateau: PlateauEstimate | None,
                   mode: str = "auto") -> tuple[int, int]:
    """Fit window for rate extraction.

    "auto": starts at t = 5 and ends at the largest time where the median
    over series of |v(t)|, after subtracting the plateau estimate, still
    exceeds 3x the plateau; the end is clamped to at least t_lo + 5.
    "early": the fixed early-time window (2, 7).  Degenerate inputs fall
    back to (5, 25) instead of raising.
    """
    if mode == "early":
        return EARLY_WINDOW
    if mode != "auto":
        raise InvalidParameterError(f"unknown window mode {mode!r}")
    if not series_list or plateau is None or plateau.value <= 0:
        return FALLBACK_WINDOW
    grid = series_list[0].times
    for s in series_list[1:]:
        if not np.array_equal(s.times, grid):
            return FALLBACK_WINDOW
    t_lo = 5
    med = np.median(np.abs(np.stack([s.values for s in series_list])), axis=0)
    above = grid[(med - plateau.value)
                 >= WINDOW_PLATEAU_FACTOR * plateau.value]
    if above.size == 0:
        return FALLBACK_WINDOW
    t_hi = int(above.max())
    return (t_lo, max(t_hi, t_lo + 5))


def _fit_points(series_list: list[TimeSeries], window: tuple[int, int],
                plateau: PlateauEstimate | None):
    """Per-series (t, ln|v|) points inside the window, plateau-filtered."""
    lo, hi = window
    floor = PLATEAU_DROP_FACTOR * plateau.value if plateau is not None else 0.0
    per_series = []
    for s in series_list:
        mask = (s.times >= lo) & (s.times <= hi) & (np.abs(s.values) > floor)
        per_series.append((s.times[mask].astype(np.float64),
                           np.log(np.abs(s.values[mask]))))
    return per_series


def extract_rate(series_list: list[TimeSeries], window: tuple[int, int],
                 plateau: PlateauEstimate | None = None,
                 pooling: str = "pooled") -> RateFit:
    """Fit gamma = -slope of ln|v(t)| on the window.

    "pooled" fits one line through the points of every series at once;
    "per-observable-median" fits each series separately and takes the
    median slope and intercept.  Points with |v| below PLATEAU_DROP_FACTOR
    times the plateau estimate are dropped first (the same 3x factor the
    window rule uses, so the window never admits points the fit would
    discard); fewer than 4 surviving points raise.
    """
    if not series_list:
        raise InsufficientDataError("no series given")
    head = series_list[0]
    for s in series_list[1:]:
        if (s.quantity, s.L, s.L_A, s.k) != (head.quantity, head.L,
                                             head.L_A, head.k):
            raise InvalidParameterError(
                "series in one fit must share quantity, L, L_A, k")
    per_series = _fit_points(series_list, window, plateau)
    t_all = np.concatenate([p[0] for p in per_series])
    y_all = np.concatenate([p[1] for p in per_series])
    if t_all.size < MIN_FIT_POINTS:
        raise InsufficientDataError(
            f"only {t_all.size} usable points in window {window}, "
            f"need {MIN_FIT_POINTS}")
    if pooling == "pooled":
        slope, intercept, resid = lad_line_fit(t_all, y_all)
    elif pooling == "per-observable-median":
        slopes, intercepts = [], []
        for ts, ys in per_series:
            if np.unique(ts).size < 2:
                continue
            s_i, a_i, _ = lad_line_fit(ts, ys)
            slopes.append(s_i)
            intercepts.append(a_i)
        if not slopes:
            raise InsufficientDataError("no series had two distinct times")
        slope = float(np.median(slopes))
        intercept = float(np.median(intercepts))
        resid = float(np.sum(np.abs(y_all - (intercept + slope * t_all))))
    else:
        raise InvalidParameterError(f"unknown pooling mode {pooling!r}")
    return RateFit(head.quantity, head.L, head.L_A, head.k,
                   (int(window[0]), int(window[1])), -slope, intercept,
                   int(t_all.size), resid, pooling)


def saturation_scaling_fit(L_values, plateau_values) -> tuple[float, float]:
    """Least-squares slope and intercept of log2(plateau) against L."""
    L_arr = np.asarray(L_values, dtype=np.float64)
    p_arr = np.asarray(plateau_values, dtype=np.float64)
    if L_arr.shape != p_arr.shape or np.unique(L_arr).size < 3:
        raise InsufficientDataError("need plateaus for at least 3 distinct L")
    if np.any(p_arr <= 0):
        raise InvalidParameterError("plateau values must be positive")
    slope, intercept = np.polyfit(L_arr, np.log2(p_arr), 1)
    return float(slope), float(intercept)
