"""Command-line interface.

Exit codes: 0 success, 1 failed verification check, 2 invalid config,
3 size refusal, 4 insufficient data for a fit.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import baselines, experiment, otoc
from .errors import (InsufficientDataError, InvalidParameterError,
                     SizeRefusalError)
from .observables import gell_mann_basis
from .otoc import OtocRequest, f_k_infinite_temperature, f_k_pure
from .rng import make_rng
from .statevector import x_polarized_state


def _load_config(args) -> experiment.ExperimentConfig:
    try:
        text = Path(args.config).read_text()
    except OSError as exc:
        raise InvalidParameterError(f"cannot read config: {exc}") from exc
    cfg = experiment.parse_config(text)
    if args.seed is not None:
        cfg = replace(cfg, master_seed=args.seed)
    return cfg


def _parse_threads(value: str):
    if value == "auto":
        return "auto"
    try:
        n = int(value)
    except ValueError as exc:
        raise InvalidParameterError(
            f"--threads must be an integer or 'auto', got {value!r}") from exc
    if n < 1:
        raise InvalidParameterError("--threads must be >= 1")
    return n


def _cmd_simulate(args) -> int:
    cfg = _load_config(args)
    subset = None
    if args.subset:
        subset = [int(x) for x in args.subset.split(",")]
    experiment.run_experiment(cfg, out_dir=args.out,
                              threads=_parse_threads(args.threads),
                              realization_indices=subset)
    print(f"wrote {args.out}")
    return 0


def _cmd_rates(args) -> int:
    cfg = _load_config(args)
    bundle = experiment.run_experiment(cfg, out_dir=args.out,
                                       threads=_parse_threads(args.threads))
    fits, skipped = experiment.run_rates(bundle)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "rates.json").write_text(experiment.serialize_rates(fits),
                                    newline="\n")
    for fit in fits:
        print(f"{fit.quantity} k={fit.k}: gamma={fit.gamma:.6f} "
              f"window={fit.window} n={fit.n_points}")
    for skip in skipped:
        print(f"{skip['quantity']} k={skip['k']}: skipped ({skip['reason']})")
    return 0


def _cmd_saturation(args) -> int:
    cfg = _load_config(args)
    L_values = [int(x) for x in args.L_list.split(",")]
    report = experiment.run_saturation(cfg, L_values,
                                       threads=_parse_threads(args.threads))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "saturation.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n", newline="\n")
    for tag, fit in report["fits"].items():
        print(f"{tag}: log2 plateau slope {fit['slope_log2']:.4f}")
    return 0


def _cmd_disorder_preview(args) -> int:
    cfg = _load_config(args)
    count = min(args.count, cfg.realizations)
    for r in range(count):
        params = experiment.sample_disorder(cfg, r)
        fields = " ".join(f"{h:+.6f}" for h in params.h)
        print(f"realization {r}: h = [{fields}]")
    return 0


def _cmd_oracle_check(args) -> int:
    """Compare streaming OTOCs against dense matrix algebra at L = 6."""
    cfg = experiment.ExperimentConfig(
        L=6, L_A=2, realizations=1, master_seed=args.seed or 20,
        k_list=(1, 2), quantities=("Fk",), t_max=8)
    params = experiment.sample_disorder(cfg, 0)
    psi0 = x_polarized_state(cfg.L)
    unitary = baselines.dense_floquet(params)
    ref = baselines.dense_floquet_from_matrices(params)
    dev_build = float(np.max(np.abs(unitary.matrix - ref.matrix)))
    times = list(range(cfg.t_max + 1))
    worst_pure = 0.0
    worst_trace = 0.0
    for X in gell_mann_basis(4)[:3]:
        x_full = baselines.embed_observable(X, cfg.L)
        for k in cfg.k_list:
            series = f_k_pure(OtocRequest(psi0, params, X, cfg.L_A, k, times))
            inf = f_k_infinite_temperature(params, X, cfg.L_A, k, times)
            for i, t in enumerate(times):
                oracle = baselines.dense_otoc(unitary, psi0, x_full, k, t)
                worst_pure = max(worst_pure, abs(series.values[i] - oracle))
                tr_oracle = baselines.dense_trace_otoc(unitary, x_full, k, t)
                worst_trace = max(worst_trace, abs(inf.values[i] - tr_oracle))
    report = {"dense_build_dev": dev_build, "pure_dev": worst_pure,
              "trace_dev": worst_trace, "tolerance": 1e-10}
    ok = max(dev_build, worst_pure, worst_trace) <= 1e-10
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2,
                                             sort_keys=True) + "\n")
    print(json.dumps(report, indent=2, sort_keys=True))
    print("oracle-check: " + ("PASS" if ok else "FAIL"))
    return 0 if ok else 1


def _cmd_haar_check(args) -> int:
    rng = make_rng(args.seed if args.seed is not None else 7)
    freeness = baselines.freeness_magnitude_check(1, rng, args.samples)
    conditionals = baselines.projected_haar_conditionals_check(
        4, 64, 2, rng, 40 * args.samples)
    concentration = baselines.delta_k_concentration_check(
        2, (256, 1024), 2, rng, 2 * args.samples)
    checks = {
        "freeness_slope": freeness["passed_slope"],
        "freeness_flat": freeness["passed_flat"],
        "conditional_moment": conditionals["max_moment_standardized_dev"] < 6,
        "conditional_prob": conditionals["p0_standardized_dev"] < 6,
        "concentration": abs(concentration["ratio"]
                             / concentration["expected_ratio"] - 1) < 0.2,
    }
    report = {"freeness": freeness, "conditionals": conditionals,
              "concentration": concentration, "checks": checks}
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2,
                                             sort_keys=True) + "\n")
    print(json.dumps(report, indent=2, sort_keys=True))
    ok = all(checks.values())
    print("haar-check: " + ("PASS" if ok else "FAIL"))
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thermalkit",
        description="Thermalization timescales in the kicked Ising chain")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True, needs_out=True):
        if needs_config:
            p.add_argument("--config", required=True,
                           help="path to key=value config file")
        if needs_out:
            p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--threads", default="1",
                       help="worker threads over realizations, or 'auto'")
        p.add_argument("--seed", type=int, default=None,
                       help="override the master seed")

    p = sub.add_parser("simulate", help="run and write per-realization CSVs")
    common(p)
    p.add_argument("--subset", default=None,
                   help="comma-separated realization indices to (re)compute")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("rates", help="run, fit decay rates, write rates.json")
    common(p)
    p.set_defaults(func=_cmd_rates)

    p = sub.add_parser("saturation",
                       help="plateau scaling with L, write saturation.json")
    common(p)
    p.add_argument("--L-list", required=True, dest="L_list",
                   help="comma-separated chain lengths, e.g. 8,10,12")
    p.set_defaults(func=_cmd_saturation)

    p = sub.add_parser("disorder-preview",
                       help="print disorder fields for the first realizations")
    common(p, needs_out=False)
    p.add_argument("--count", type=int, default=3)
    p.set_defaults(func=_cmd_disorder_preview)

    p = sub.add_parser("oracle-check",
                       help="verify kernels against dense oracles")
    common(p, needs_config=False, needs_out=False)
    p.add_argument("--out", default=None, help="optional JSON report path")
    p.set_defaults(func=_cmd_oracle_check)

    p = sub.add_parser("haar-check",
                       help="verify Haar-ensemble analytics by Monte Carlo")
    common(p, needs_config=False, needs_out=False)
    p.add_argument("--out", default=None, help="optional JSON report path")
    p.add_argument("--samples", type=int, default=100,
                   help="base sample count per check")
    p.set_defaults(func=_cmd_haar_check)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InvalidParameterError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 2
    except SizeRefusalError as exc:
        print(f"size refusal: {exc}", file=sys.stderr)
        return 3
    except InsufficientDataError as exc:
        print(f"insufficient data: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
