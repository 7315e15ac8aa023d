"""Experiment configuration: a single JSON or TOML file, strictly validated."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .covering import WhitneyParams
from .norms import NormParams, QuadratureSpec, Region


class ConfigError(ValueError):
    pass


_TOP_KEYS = {
    "domain",
    "functions",
    "norm_params",
    "whitney",
    "quadrature",
    "regions",
    "depths",
    "output_dir",
    "seed",
    "extension",
    "pair_budget",
}

_DOMAIN_KINDS = {"square", "disk", "lshape", "snowflake", "slit", "cusp", "box"}
_FIELD_KINDS = {"const", "poly", "sinprod", "cusp", "slit_jump"}


@dataclass
class ExperimentConfig:
    domain: dict
    functions: list[dict]
    norm_params: list[NormParams]
    whitney: WhitneyParams
    quadrature: QuadratureSpec
    regions: list[Region]
    depths: list[int]
    output_dir: str
    seed: int = 0
    extension: bool = False
    pair_budget: int = 2000


def _as_q(value) -> float:
    if value in ("inf", "Inf", "INF"):
        return math.inf
    return float(value)


def _region_from(spec) -> Region:
    if isinstance(spec, str):
        return Region(spec)
    if isinstance(spec, dict):
        extra = set(spec) - {"mode", "rho"}
        if extra:
            raise ConfigError(f"unknown region keys: {sorted(extra)}")
        return Region(spec.get("mode", "full"), spec.get("rho"))
    raise ConfigError(f"bad region spec: {spec!r}")


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        if path.suffix == ".toml":
            raw = tomllib.loads(text)
        else:
            raw = json.loads(text)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    return parse_config(raw)


def parse_config(raw: dict) -> ExperimentConfig:
    extra = set(raw) - _TOP_KEYS
    if extra:
        raise ConfigError(f"unknown config keys: {sorted(extra)}")
    for key in ("domain", "functions", "norm_params", "output_dir"):
        if key not in raw:
            raise ConfigError(f"missing config key: {key}")

    dom = dict(raw["domain"])
    if dom.get("kind") not in _DOMAIN_KINDS:
        raise ConfigError(f"domain.kind must be one of {sorted(_DOMAIN_KINDS)}")

    functions = []
    for fn in raw["functions"]:
        fn = dict(fn)
        if fn.get("kind") not in _FIELD_KINDS:
            raise ConfigError(f"functions[].kind must be one of {sorted(_FIELD_KINDS)}")
        functions.append(fn)

    norm_params = []
    for np_spec in raw["norm_params"]:
        np_spec = dict(np_spec)
        extra = set(np_spec) - {"k", "sigma", "p", "q"}
        if extra:
            raise ConfigError(f"unknown norm_params keys: {sorted(extra)}")
        try:
            norm_params.append(
                NormParams(
                    k=int(np_spec.get("k", 0)),
                    sigma=float(np_spec.get("sigma", 0.5)),
                    p=float(np_spec.get("p", 2.0)),
                    q=_as_q(np_spec.get("q", 2.0)),
                )
            )
        except ValueError as exc:
            raise ConfigError(f"invalid norm parameters: {exc}") from exc

    wh = dict(raw.get("whitney", {}))
    extra = set(wh) - {"c_w", "max_generation", "ell0"}
    if extra:
        raise ConfigError(f"unknown whitney keys: {sorted(extra)}")
    whitney = WhitneyParams(
        c_w=float(wh.get("c_w", 2.0)),
        max_generation=int(wh.get("max_generation", 6)),
        ell0=float(wh.get("ell0", 1.0)),
    )

    qd = dict(raw.get("quadrature", {}))
    extra = set(qd) - {"nodes_per_axis", "diag_refine_depth", "computation_box_factor"}
    if extra:
        raise ConfigError(f"unknown quadrature keys: {sorted(extra)}")
    quad = QuadratureSpec(
        nodes_per_axis=int(qd.get("nodes_per_axis", 3)),
        diag_refine_depth=int(qd.get("diag_refine_depth", 3)),
        computation_box_factor=float(qd.get("computation_box_factor", 3.0)),
    )

    try:
        regions = [_region_from(r) for r in raw.get("regions", ["full"])]
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    depths = [int(t) for t in raw.get("depths", [whitney.max_generation])]
    if not depths:
        raise ConfigError("depths must be nonempty")

    return ExperimentConfig(
        domain=dom,
        functions=functions,
        norm_params=norm_params,
        whitney=whitney,
        quadrature=quad,
        regions=regions,
        depths=depths,
        output_dir=str(raw["output_dir"]),
        seed=int(raw.get("seed", 0)),
        extension=bool(raw.get("extension", False)),
        pair_budget=int(raw.get("pair_budget", 2000)),
    )
