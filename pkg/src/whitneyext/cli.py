"""Command line runner: norm experiments, diagnostics, and figures.

Exit codes: 0 success, 1 computation error (the failing experiment is
named), 2 configuration error.  Given the same config and seed the CSV
output is byte-identical across runs and thread counts.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

from .chains import ChainBuilder, estimate_uniformity, maximal_sum_diagnostics, rho_epsilon, shadow, shadow_sum_diagnostics
from .config import ConfigError, ExperimentConfig, load_config
from .covering import build_families
from .domains import make_domain
from .extension import extend
from .fields import make_field
from .norms import (
    NormParams,
    Region,
    SeminormEstimator,
    inequality_diagnostics,
    norm_A_spq,
    norm_extension_global,
)
from .render import render_svg

CSV_COLUMNS = [
    "domain",
    "function",
    "k",
    "sigma",
    "p",
    "q",
    "region",
    "rho",
    "depth",
    "r",
    "lp_norm",
    "wkp_norm",
    "seminorm_total",
    "composite",
    "seminorm_error",
    "extension_global",
    "extension_ratio",
    "tail_bound",
    "validity",
    "drift_vs_prev_depth",
]


def _fmt_val(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (int,)):
        return str(v)
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _csv_rows(cfg: ExperimentConfig) -> list[dict]:
    oracle = make_domain(cfg.domain)
    rows: list[dict] = []
    prev_composite: dict = {}
    for depth in cfg.depths:
        params_w = type(cfg.whitney)(
            c_w=cfg.whitney.c_w, max_generation=depth, ell0=cfg.whitney.ell0
        )
        fam = build_families(oracle, params_w, cfg.quadrature.computation_box_factor)
        est_in = SeminormEstimator(fam.w1, cfg.quadrature, oracle=fam.oracle)
        est_gl = None
        for f_spec in cfg.functions:
            fieldfn = make_field(f_spec)
            ef_cache: dict[int, object] = {}
            for params in cfg.norm_params:
                for region in cfg.regions:
                    rep = norm_A_spq(
                        fieldfn, fam, params, region, cfg.quadrature, estimator=est_in
                    )
                    if cfg.extension:
                        if params.k not in ef_cache:
                            ef_cache[params.k] = extend(fieldfn, fam, k=params.k)
                        if est_gl is None:
                            est_gl = SeminormEstimator(fam.w1 + fam.w2, cfg.quadrature)
                        rep_gl = norm_extension_global(
                            ef_cache[params.k], fam, params, cfg.quadrature, estimator=est_gl
                        )
                        rep.extension_global = rep_gl.composite
                        rep.tail_bound = rep_gl.tail_bound
                        if rep.composite > 0:
                            rep.extension_ratio = rep_gl.composite / rep.composite
                    row = rep.to_json()
                    key = (row["function"], row["k"], row["sigma"], row["p"], row["q"], row["region"])
                    prev = prev_composite.get(key)
                    row["drift_vs_prev_depth"] = (
                        abs(row["composite"] - prev) / prev if prev else None
                    )
                    prev_composite[key] = row["composite"]
                    row["rho"] = region.rho
                    rows.append(row)
    return rows


def _write_csv(rows: list[dict], path: Path) -> None:
    lines = [",".join(CSV_COLUMNS)]
    for row in rows:
        lines.append(",".join(_fmt_val(row.get(col)) for col in CSV_COLUMNS))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def cmd_run(cfg: ExperimentConfig) -> int:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = _csv_rows(cfg)
    _write_csv(rows, out / "norms.csv")
    return 0


def cmd_diagnose(cfg: ExperimentConfig) -> int:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    oracle = make_domain(cfg.domain)
    fam = build_families(oracle, cfg.whitney, cfg.quadrature.computation_box_factor)
    builder = ChainBuilder(fam)
    report = estimate_uniformity(fam, pair_budget=cfg.pair_budget, seed=cfg.seed)
    chains = [builder.build(fam.w1[i], fam.w1[k]) for i, k in report.pairs[: min(400, len(report.pairs))]]
    rho = rho_epsilon(fam, chains)
    shadow_sums = shadow_sum_diagnostics(fam, [0.25, 0.5, 1.0], rho, chains)
    maximal = maximal_sum_diagnostics(fam, [0.25, 0.5, 1.0], rho)
    lemma = {}
    for f_spec in cfg.functions:
        fieldfn = make_field(f_spec)
        for params in cfg.norm_params:
            if params.q == float("inf"):
                continue
            key = f"{fieldfn.label}|sigma={params.sigma},p={params.p},q={params.q}"
            lemma[key] = inequality_diagnostics(fam, fieldfn, params, cfg.quadrature, rho)
    diag = {
        "domain": oracle.label,
        "epsilon_hat": report.epsilon_hat,
        "rho_epsilon": rho,
        "whitney": {
            "margins_interior": fam.whitney_margins("interior"),
            "margins_exterior": fam.whitney_margins("exterior"),
            "superposition_50Q": fam.superposition_count(50.0),
            "superposition_11_10Q": fam.superposition_count(1.1),
            "eqwhitney5_min_ratio": fam.eqwhitney5_min_ratio(),
            "uncovered_interior": fam.uncovered_interior,
            "uncovered_exterior": fam.uncovered_exterior,
        },
        "symmetrization": {
            "overlap_max": fam.sym_overlap_max(),
            "distance_max": fam.sym_distance_max(),
        },
        "realized_constants": {
            "shadow_sums": {str(k): v for k, v in shadow_sums.items()},
            "maximal_sums": maximal,
            "lemma": lemma,
        },
    }
    (out / "diagnostics.json").write_text(
        json.dumps(diag, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return 0


def cmd_render(cfg: ExperimentConfig, figure: str) -> int:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    oracle = make_domain(cfg.domain)
    fam = build_families(oracle, cfg.whitney, cfg.quadrature.computation_box_factor)
    chain = None
    shade = None
    if figure == "chain":
        builder = ChainBuilder(fam)
        chain = builder.build(fam.w1[0], fam.w1[-1])
    elif figure == "shadow":
        p = max(fam.w1, key=lambda c: (c.side, c.key()))
        cubes, _ = shadow(fam, p, 3.0)
        shade = (cubes, (p.center, 3.0 * p.side))
    render_svg(fam, str(out / f"{figure}.svg"), chain=chain, shadow=shade)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="whitneyext")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "diagnose"):
        pc = sub.add_parser(name)
        pc.add_argument("config")
    pr = sub.add_parser("render")
    pr.add_argument("config")
    pr.add_argument("--figure", choices=["covering", "chain", "shadow"], default="covering")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            if args.command == "run":
                return cmd_run(cfg)
            if args.command == "diagnose":
                return cmd_diagnose(cfg)
            return cmd_render(cfg, args.figure)
    except Exception as exc:  # noqa: BLE001 - report and signal exit 1
        print(f"computation error ({args.command}): {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
