"""Disorder-averaged experiment orchestration and serialization.

A run is fully described by a flat key=value config.  Realization r draws
its longitudinal fields from a stream seeded by hash(master_seed, r), so
any subset of realizations can be recomputed in isolation and byte-identical
output does not depend on execution order or thread count.  Output files
carry no timestamps or environment details for the same reason.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import projected, rates
from .errors import (DegenerateInputError, InsufficientDataError,
                     InvalidParameterError, SizeRefusalError)
from .observables import (LocalObservable, MultiReplicaObservable,
                          gell_mann_basis, gue_observable, pauli_string_basis)
from .otoc import (EXACT_TRACE_MAX_L, f_k_batch, f_k_infinite_temperature)
from .rng import (NORMAL_TRANSFORM, RNG_ALGORITHM, hash_seed, make_rng,
                  normal_box_muller)
from .series import TimeSeries, mean_over_realizations
from .statevector import (ChainParams, StateVector, floquet_step,
                          product_state, x_polarized_state)

VALID_QUANTITIES = ("Fk", "FkInf", "FkAvg", "Dk", "DeltaK", "deltaKFrob",
                    "framePotential")
FITTABLE_QUANTITIES = ("Fk", "FkInf", "FkAvg", "DeltaK", "deltaKFrob")
LOCAL_ONLY_QUANTITIES = ("Fk", "FkInf", "FkAvg", "Dk")
MOMENT_LABEL = "none"
CSV_HEADER = ("quantity", "L", "L_A", "k", "observable_label", "realization",
              "t", "value")


@dataclass
class ExperimentConfig:
    """Everything that defines a disorder-averaged run."""

    L: int
    L_A: int
    realizations: int
    master_seed: int
    k_list: tuple[int, ...]
    quantities: tuple[str, ...]
    t_max: int = 50
    J: float = 0.7
    b: float = 0.65
    field_mean: float = 0.6
    field_std: float = math.pi / 4
    basis: str = "gellmann"
    initial_state: str = "x_polarized"
    window: str = "auto"
    plateau_window: tuple[int, int] = (45, 50)
    pooling: str = "pooled"

    def __post_init__(self) -> None:
        self.k_list = tuple(int(k) for k in self.k_list)
        self.quantities = tuple(self.quantities)
        self.plateau_window = (int(self.plateau_window[0]),
                               int(self.plateau_window[1]))
        validate_config(self)


def validate_config(cfg: ExperimentConfig) -> None:
    if cfg.L < 2:
        raise InvalidParameterError(f"L must be >= 2, got {cfg.L}")
    if not 1 <= cfg.L_A < cfg.L:
        raise InvalidParameterError(f"need 1 <= L_A < L, got L_A={cfg.L_A}")
    if cfg.realizations < 1:
        raise InvalidParameterError("realizations must be >= 1")
    if cfg.t_max < 0:
        raise InvalidParameterError("t_max must be >= 0")
    if not cfg.k_list or any(k < 1 for k in cfg.k_list):
        raise InvalidParameterError("k_list must be non-empty, all k >= 1")
    if len(set(cfg.k_list)) != len(cfg.k_list):
        raise InvalidParameterError("k_list entries must be unique")
    if not cfg.quantities:
        raise InvalidParameterError("quantities must be non-empty")
    for q in cfg.quantities:
        if q not in VALID_QUANTITIES:
            raise InvalidParameterError(
                f"unknown quantity {q!r}, valid: {VALID_QUANTITIES}")
    if cfg.field_std < 0:
        raise InvalidParameterError("field_std must be >= 0")
    kind = cfg.basis.split("(")[0]
    if kind not in ("gellmann", "pauli", "gue"):
        raise InvalidParameterError(f"unknown basis {cfg.basis!r}")
    if kind == "gue":
        _parse_call(cfg.basis, "gue", 2)
        bad = [q for q in cfg.quantities if q in LOCAL_ONLY_QUANTITIES]
        if bad:
            raise InvalidParameterError(
                f"quantities {bad} need a local-observable basis, not gue")
    if not (cfg.initial_state == "x_polarized"
            or cfg.initial_state.startswith(("product(",
                                             "orthogonal_family("))):
        raise InvalidParameterError(
            f"unknown initial_state {cfg.initial_state!r}")
    if cfg.initial_state.startswith("product("):
        _parse_call(cfg.initial_state, "product", 2)
    if cfg.initial_state.startswith("orthogonal_family("):
        n = int(_parse_call(cfg.initial_state, "orthogonal_family", 1)[0])
        if not 1 <= n <= cfg.L + 1:
            raise InvalidParameterError(
                f"orthogonal_family needs 1 <= n <= L+1, got {n}")
    if not (cfg.window in ("auto", "early")
            or cfg.window.startswith("explicit(")):
        raise InvalidParameterError(f"unknown window {cfg.window!r}")
    if cfg.window.startswith("explicit("):
        lo, hi = (int(x) for x in _parse_call(cfg.window, "explicit", 2))
        if not 0 <= lo < hi:
            raise InvalidParameterError(f"bad explicit window ({lo}, {hi})")
    if not 0 <= cfg.plateau_window[0] <= cfg.plateau_window[1]:
        raise InvalidParameterError("bad plateau_window")
    if cfg.pooling not in ("pooled", "per-observable-median"):
        raise InvalidParameterError(f"unknown pooling {cfg.pooling!r}")
    if "FkInf" in cfg.quantities and cfg.L > EXACT_TRACE_MAX_L:
        raise SizeRefusalError(
            f"FkInf exact trace refused for L={cfg.L} > {EXACT_TRACE_MAX_L}")
    max_k = max(cfg.k_list)
    needs_moment = (kind == "gue"
                    or any(q in cfg.quantities
                           for q in ("deltaKFrob", "framePotential")))
    if needs_moment and (1 << cfg.L_A) ** max_k > projected.MAX_REPLICA_DIM:
        raise SizeRefusalError(
            f"replica dimension {1 << cfg.L_A}^{max_k} exceeds "
            f"{projected.MAX_REPLICA_DIM}")


def _parse_call(text: str, name: str, n_args: int) -> list[str]:
    m = re.fullmatch(rf"{name}\(([^)]*)\)", text.strip())
    if not m:
        raise InvalidParameterError(f"cannot parse {text!r} as {name}(...)")
    parts = [p.strip() for p in m.group(1).split(",")]
    if len(parts) != n_args:
        raise InvalidParameterError(
            f"{name}(...) needs {n_args} arguments, got {len(parts)}")
    return parts


# ---------------------------------------------------------------------------
# config file round trip
# ---------------------------------------------------------------------------

_LIST_KEYS = {"k_list", "quantities", "plateau_window"}
_INT_KEYS = {"L", "L_A", "realizations", "master_seed", "t_max"}
_FLOAT_KEYS = {"J", "b", "field_mean", "field_std"}
_STR_KEYS = {"basis", "initial_state", "window", "pooling"}
_REQUIRED_KEYS = {"L", "L_A", "realizations", "master_seed", "k_list",
                  "quantities"}


def parse_config(text: str) -> ExperimentConfig:
    """Parse a flat key=value config; '#' starts a comment."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidParameterError(f"line {lineno}: expected key=value")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key in values:
            raise InvalidParameterError(f"line {lineno}: duplicate key {key}")
        try:
            if key in _INT_KEYS:
                values[key] = int(val)
            elif key in _FLOAT_KEYS:
                values[key] = float(val)
            elif key == "k_list":
                values[key] = tuple(int(p) for p in val.split(","))
            elif key == "quantities":
                values[key] = tuple(p.strip() for p in val.split(","))
            elif key == "plateau_window":
                lo, hi = (int(p) for p in val.split(","))
                values[key] = (lo, hi)
            elif key in _STR_KEYS:
                values[key] = val
            else:
                raise InvalidParameterError(f"unknown key {key!r}")
        except (ValueError, TypeError) as exc:
            raise InvalidParameterError(
                f"line {lineno}: bad value for {key}: {exc}") from exc
    missing = _REQUIRED_KEYS - values.keys()
    if missing:
        raise InvalidParameterError(f"missing required keys: {sorted(missing)}")
    return ExperimentConfig(**values)


def canonical_config_lines(cfg: ExperimentConfig) -> str:
    """Round-trippable key=value text in fixed key order."""
    out = []
    for f in sorted(fields(ExperimentConfig), key=lambda f: f.name):
        val = getattr(cfg, f.name)
        if isinstance(val, tuple):
            val = ",".join(str(v) for v in val)
        elif isinstance(val, float):
            val = repr(val)
        out.append(f"{f.name} = {val}")
    return "\n".join(out) + "\n"


def config_hash(cfg: ExperimentConfig) -> str:
    return hashlib.sha256(canonical_config_lines(cfg).encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# per-realization ingredients
# ---------------------------------------------------------------------------

def sample_disorder(cfg: ExperimentConfig, r: int) -> ChainParams:
    """Fields for realization r, reproducible in isolation."""
    if not 0 <= r < cfg.realizations:
        raise InvalidParameterError(
            f"realization {r} outside 0..{cfg.realizations - 1}")
    rng = make_rng(hash_seed(cfg.master_seed, r))
    h = normal_box_muller(rng, cfg.field_mean, cfg.field_std, cfg.L)
    return ChainParams(cfg.L, cfg.J, cfg.b, h)


def build_initial_state(cfg: ExperimentConfig) -> StateVector:
    if cfg.initial_state == "x_polarized" \
            or cfg.initial_state.startswith("orthogonal_family("):
        return x_polarized_state(cfg.L)
    parts = _parse_call(cfg.initial_state, "product", 2)
    try:
        local = [complex(p.replace(" ", "")) for p in parts]
    except ValueError as exc:
        raise InvalidParameterError(f"bad product amplitudes: {parts}") from exc
    return product_state(local, cfg.L)


def average_states(cfg: ExperimentConfig) -> int:
    """Family size used by the FkAvg quantity (default 3)."""
    if cfg.initial_state.startswith("orthogonal_family("):
        return int(_parse_call(cfg.initial_state, "orthogonal_family", 1)[0])
    return 3


def local_basis(cfg: ExperimentConfig) -> list[LocalObservable]:
    kind = cfg.basis.split("(")[0]
    if kind == "gellmann":
        return gell_mann_basis(1 << cfg.L_A)
    if kind == "pauli":
        return pauli_string_basis(cfg.L_A)
    raise InvalidParameterError(f"basis {cfg.basis!r} has no local elements")


def gue_basis(cfg: ExperimentConfig, k: int,
              realization: int) -> list[MultiReplicaObservable]:
    """Per-realization GUE replica observables, labeled by slot index.

    A fresh matrix is drawn for every (realization, k, slot) so averaging
    over realizations also averages over observables; the slot label stays
    fixed so series group across realizations.
    """
    n, seed = (int(x) for x in _parse_call(cfg.basis, "gue", 2))
    dim = (1 << cfg.L_A) ** k
    out = []
    for idx in range(n):
        y = gue_observable(dim, hash_seed(seed, realization, k, idx), k)
        out.append(MultiReplicaObservable(f"gue:i{idx:02d}", k, y.matrix))
    return out


# ---------------------------------------------------------------------------
# running
# ---------------------------------------------------------------------------

def run_realization(cfg: ExperimentConfig, r: int) -> list[TimeSeries]:
    """All requested series for one disorder realization."""
    params = sample_disorder(cfg, r)
    psi0 = build_initial_state(cfg)
    times = np.arange(cfg.t_max + 1, dtype=np.int64)
    kind = cfg.basis.split("(")[0]
    is_local = kind != "gue"
    out: list[TimeSeries] = []

    proj_wanted = [q for q in ("Dk", "DeltaK", "deltaKFrob", "framePotential")
                   if q in cfg.quantities]
    if proj_wanted:
        out.extend(_projected_series(cfg, params, psi0, times, r, is_local))
    if "Fk" in cfg.quantities:
        out.extend(f_k_batch(psi0, params, local_basis(cfg), cfg.k_list,
                             times, cfg.L_A, realization=r))
    for quantity, mode in (("FkInf", "exact-trace"),
                           ("FkAvg", "orthogonal-average")):
        if quantity in cfg.quantities:
            for X in local_basis(cfg):
                for k in cfg.k_list:
                    s = f_k_infinite_temperature(
                        params, X, cfg.L_A, k, times, mode,
                        n_states=average_states(cfg))
                    out.append(replace(s, realization=r))
    return out


def _projected_series(cfg: ExperimentConfig, params: ChainParams,
                      psi0: StateVector, times: np.ndarray, r: int,
                      is_local: bool) -> list[TimeSeries]:
    wants = set(cfg.quantities)
    needs_moment = bool(wants & {"deltaKFrob", "framePotential"}) \
        or (not is_local and "DeltaK" in wants)
    observables = local_basis(cfg) if is_local else []
    gue_sets = {k: gue_basis(cfg, k, r) for k in cfg.k_list} \
        if (not is_local and "DeltaK" in wants) else {}
    haar_const = {(X.label, k): projected.d_k_haar(X, k)
                  for X in observables for k in cfg.k_list} \
        if wants & {"DeltaK"} and is_local else {}

    store: dict[tuple, np.ndarray] = {}

    def slot(quantity: str, k: int, label: str) -> np.ndarray:
        key = (quantity, k, label)
        if key not in store:
            store[key] = np.empty(times.size)
        return store[key]

    state = psi0.copy()
    for ti, t in enumerate(times):
        if ti:
            floquet_step(state, params)
        decomp = projected.conditional_decomposition(state, cfg.L_A)
        if is_local and wants & {"Dk", "DeltaK"}:
            for X in observables:
                raw = projected.conditional_expectations(decomp, X)
                for k in cfg.k_list:
                    val = projected.d_k_from_expectations(raw, decomp.probs, k)
                    if "Dk" in wants:
                        slot("Dk", k, X.label)[ti] = val
                    if "DeltaK" in wants:
                        slot("DeltaK", k, X.label)[ti] = \
                            val - haar_const[(X.label, k)]
        if needs_moment:
            for k in cfg.k_list:
                moment = projected.rho_k(decomp, k)
                if "deltaKFrob" in wants:
                    slot("deltaKFrob", k, MOMENT_LABEL)[ti] = \
                        projected.delta_k_frobenius_from_moment(moment)
                if "framePotential" in wants:
                    slot("framePotential", k, MOMENT_LABEL)[ti] = \
                        projected.frame_potential_from_moment(moment)
                for Y in gue_sets.get(k, ()):
                    slot("DeltaK", k, Y.label)[ti] = \
                        projected.delta_k_generic_from_moment(moment, Y)
    return [TimeSeries(q, cfg.L, cfg.L_A, k, label, times, vals, r)
            for (q, k, label), vals in sorted(store.items())]


@dataclass
class ResultBundle:
    """In-memory result of a run: per-realization series plus their mean."""

    config: ExperimentConfig
    per_realization: dict[int, list[TimeSeries]]
    mean: list[TimeSeries] = field(default_factory=list)

    def mean_series(self, quantity: str, k: int) -> list[TimeSeries]:
        out = [s for s in self.mean if s.quantity == quantity and s.k == k]
        return sorted(out, key=lambda s: s.label)

    def realization_series(self, quantity: str, k: int) -> list[TimeSeries]:
        out = []
        for r in sorted(self.per_realization):
            out.extend(s for s in self.per_realization[r]
                       if s.quantity == quantity and s.k == k)
        return out


def run_experiment(cfg: ExperimentConfig, out_dir=None, threads: int = 1,
                   realization_indices=None) -> ResultBundle:
    """Run all (or a subset of) realizations; optionally write CSV files.

    The mean over realizations is produced only when the full set is run.
    Threads only distribute whole realizations; each series is computed
    sequentially, so output bytes are independent of the thread count.
    """
    if realization_indices is None:
        indices = list(range(cfg.realizations))
    else:
        indices = sorted(set(int(i) for i in realization_indices))
    if threads == "auto":
        threads = max(1, os.cpu_count() or 1)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda r: run_realization(cfg, r),
                                    indices))
        per_real = dict(zip(indices, results))
    else:
        per_real = {r: run_realization(cfg, r) for r in indices}
    bundle = ResultBundle(cfg, per_real)
    if len(indices) == cfg.realizations:
        groups: dict[tuple, list[TimeSeries]] = {}
        for r in indices:
            for s in per_real[r]:
                groups.setdefault(s.key(), []).append(s)
        bundle.mean = [mean_over_realizations(groups[key])
                       for key in sorted(groups)]
    if out_dir is not None:
        write_bundle(bundle, out_dir)
    return bundle


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def _format_value(v: float) -> str:
    return f"{v:.17g}"


def _series_rows(series: TimeSeries):
    tag = "mean" if series.realization is None else str(series.realization)
    for t, v in zip(series.times, series.values):
        yield (series.quantity, str(series.L), str(series.L_A),
               str(series.k), series.label, tag, str(int(t)),
               _format_value(float(v)))


def serialize_series(series_list: list[TimeSeries]) -> str:
    """CSV text with a fixed row order, 17 significant digits per value."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    ordered = sorted(series_list,
                     key=lambda s: (s.quantity, s.L, s.L_A, s.k, s.label,
                                    -1 if s.realization is None
                                    else s.realization))
    for series in ordered:
        writer.writerows(_series_rows(series))
    return buf.getvalue()


def write_bundle(bundle: ResultBundle, out_dir) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for r in sorted(bundle.per_realization):
        path = out / f"realization_{r:04d}.csv"
        path.write_text(serialize_series(bundle.per_realization[r]),
                        newline="\n")
    if bundle.mean:
        (out / "mean.csv").write_text(serialize_series(bundle.mean),
                                      newline="\n")
    meta = {
        "config": canonical_config_lines(bundle.config),
        "config_hash": config_hash(bundle.config),
        "rng_algorithm": RNG_ALGORITHM,
        "normal_transform": NORMAL_TRANSFORM,
        "realizations_present": sorted(bundle.per_realization),
    }
    (out / "run.json").write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n", newline="\n")


# ---------------------------------------------------------------------------
# rate fitting and saturation scaling on bundles
# ---------------------------------------------------------------------------

def run_rates(bundle: ResultBundle) -> tuple[list[rates.RateFit],
                                             list[dict]]:
    """Rate fits per fittable (quantity, k) present in the bundle.

    The plateau estimate that truncates the fit comes from the same
    disorder-averaged curves that are fitted, so the usable range extends
    down to the noise floor of the mean, not of a single realization.

    Combinations whose curves never rise far enough above the fit floor
    (quantities that relax below it before the window opens, or whose
    plateau is their physical saturation value, like the Frobenius
    distance) are skipped and reported in the second return value as
    dicts with keys quantity, k, reason.  If no combination at all can
    be fitted, the last error is re-raised.
    """
    cfg = bundle.config
    digest = config_hash(cfg)
    fits: list[rates.RateFit] = []
    skipped: list[dict] = []
    last_error: Exception | None = None
    for quantity in FITTABLE_QUANTITIES:
        if quantity not in cfg.quantities:
            continue
        for k in cfg.k_list:
            mean_series = bundle.mean_series(quantity, k)
            if not mean_series:
                continue
            plateau = rates.plateau_value(mean_series, cfg.plateau_window)
            window = resolve_window(cfg, mean_series, plateau)
            try:
                fit = rates.extract_rate(mean_series, window, plateau,
                                         pooling=cfg.pooling)
            except (InsufficientDataError, DegenerateInputError) as exc:
                skipped.append({"quantity": quantity, "k": int(k),
                                "reason": str(exc)})
                last_error = exc
                continue
            fit.config_hash = digest
            fits.append(fit)
    if not fits and last_error is not None:
        raise last_error
    return fits, skipped


def resolve_window(cfg: ExperimentConfig, mean_series, plateau):
    if cfg.window == "auto":
        return rates.default_window(mean_series, plateau, "auto")
    if cfg.window == "early":
        return rates.default_window(mean_series, plateau, "early")
    lo, hi = (int(x) for x in _parse_call(cfg.window, "explicit", 2))
    return (lo, hi)


def serialize_rates(fits: list[rates.RateFit]) -> str:
    payload = [f.to_dict() for f in fits]
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def run_saturation(cfg: ExperimentConfig, L_values,
                   threads: int = 1) -> dict:
    """Plateau levels and their log2 scaling with L, per (quantity, k)."""
    L_values = sorted(int(L) for L in L_values)
    plateaus: dict[tuple, dict[int, float]] = {}
    for L in L_values:
        cfg_L = replace(cfg, L=L)
        bundle = run_experiment(cfg_L, threads=threads)
        for quantity in cfg.quantities:
            for k in cfg.k_list:
                real_series = bundle.realization_series(quantity, k)
                if not real_series:
                    continue
                est = rates.plateau_value(real_series, cfg.plateau_window)
                plateaus.setdefault((quantity, k), {})[L] = est.value
    report: dict = {"L_values": L_values, "plateaus": {}, "fits": {}}
    for (quantity, k), by_L in sorted(plateaus.items()):
        tag = f"{quantity}:k={k}"
        report["plateaus"][tag] = {str(L): by_L[L] for L in L_values}
        slope, intercept = rates.saturation_scaling_fit(
            L_values, [by_L[L] for L in L_values])
        report["fits"][tag] = {"slope_log2": slope, "intercept": intercept}
    return report
