"""Scenario configuration files (JSON, schema version 1).

See docs/config-schema.md for the field reference. Parsing only validates
shape and ranges; it never touches numerics.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from .core import TruncationConfig
from .errors import ConfigError

SCHEMA_VERSION = 1
SEED_ENV = "HARDY_LAB_SEED"

KINDS = (
    "decompose",
    "sarason",
    "forward_dual",
    "almost_bridge",
    "nearly",
    "toeplitz_kernel",
    "counterexample",
    "c0_profile",
)

DEFAULT_TAGS = {
    "decompose": "invariant-decomposition",
    "sarason": "sarason-converse",
    "forward_dual": "forward-dual",
    "almost_bridge": "almost-invariance",
    "nearly": "nearly-characterization",
    "toeplitz_kernel": "perturbed-toeplitz-kernel",
    "counterexample": "counterexample",
    "c0_profile": "c0-decay",
}

# allowed keys in "params" per kind
PARAM_KEYS = {
    "decompose": {"phi", "m", "subspace", "support", "samples", "shifts", "require_exact_zero"},
    "sarason": {"phi", "m", "subspace", "support", "samples"},
    "forward_dual": {"m", "support", "samples"},
    "almost_bridge": {"m", "support", "directions", "span"},
    "nearly": {"B", "source", "M_zeros", "span", "dim", "samples"},
    "toeplitz_kernel": {"phi", "B", "bases"},
    "counterexample": {"B_minor"},
    "c0_profile": {"phi", "fs", "m", "support", "g", "n_max"},
}


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    kind: str
    tag: str
    truncation: TruncationConfig
    seed: int = 0
    repetitions: int = 1
    params: dict[str, Any] = field(default_factory=dict)
    source: str = "<memory>"


def parse_complex(value: Any, where: str) -> complex:
    if isinstance(value, bool):
        raise ConfigError(f"{where}: expected a number or [re, im]", field=where)
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        return complex(value[0], value[1])
    raise ConfigError(f"{where}: expected a number or [re, im], got {value!r}", field=where)


def parse_zeros(value: Any, where: str) -> tuple[complex, ...]:
    if not isinstance(value, list):
        raise ConfigError(f"{where}: expected a list of zeros", field=where)
    zs = tuple(parse_complex(v, f"{where}[{i}]") for i, v in enumerate(value))
    for i, z in enumerate(zs):
        if abs(z) >= 1:
            raise ConfigError(f"{where}[{i}]: zero {z} is not inside the unit disc", field=f"{where}[{i}]")
    return zs


def parse_coeffs(value: Any, where: str) -> list[complex]:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{where}: expected a non-empty coefficient list", field=where)
    return [parse_complex(v, f"{where}[{i}]") for i, v in enumerate(value)]


def _int(d: dict, key: str, where: str, default: int | None = None, lo: int | None = None, hi: int | None = None) -> int:
    if key not in d:
        if default is None:
            raise ConfigError(f"{where}.{key}: required", field=f"{where}.{key}")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{where}.{key}: expected an integer, got {v!r}", field=f"{where}.{key}")
    if (lo is not None and v < lo) or (hi is not None and v > hi):
        raise ConfigError(f"{where}.{key}: {v} outside [{lo}, {hi}]", field=f"{where}.{key}")
    return v


def _float(d: dict, key: str, where: str, default: float) -> float:
    v = d.get(key, default)
    if isinstance(v, bool) or not isinstance(v, (int, float)) or v < 0:
        raise ConfigError(f"{where}.{key}: expected a non-negative number, got {v!r}", field=f"{where}.{key}")
    return float(v)


def _truncation(d: Any) -> TruncationConfig:
    if not isinstance(d, dict):
        raise ConfigError("truncation: expected an object", field="truncation")
    unknown = set(d) - {"degree", "guard", "eps_residual", "eps_rank"}
    if unknown:
        raise ConfigError(f"truncation: unknown keys {sorted(unknown)}", field="truncation")
    degree = _int(d, "degree", "truncation", lo=2, hi=4096)
    guard = d.get("guard")
    if guard is not None:
        guard = _int(d, "guard", "truncation", lo=0, hi=degree)
    return TruncationConfig(
        degree=degree,
        guard=guard,
        eps_residual=_float(d, "eps_residual", "truncation", 1e-8),
        eps_rank=_float(d, "eps_rank", "truncation", 1e-10),
    )


def _check_phi(v: Any, where: str) -> None:
    if isinstance(v, str):
        if v not in ("z", "z2", "random2", "conj_z"):
            raise ConfigError(f"{where}: unknown symbol shorthand {v!r}", field=where)
        return
    if not isinstance(v, dict) or len(v) != 1:
        raise ConfigError(f"{where}: expected a shorthand string or a one-key object", field=where)
    (key, val), = v.items()
    if key == "zeros":
        parse_zeros(val, f"{where}.zeros")
    elif key == "coanalytic":
        parse_coeffs(val, f"{where}.coanalytic")
    elif key == "random_coanalytic":
        _int(v, key, where, lo=0, hi=8)
    else:
        raise ConfigError(f"{where}: unknown symbol key {key!r}", field=where)


def _check_blaschke(v: Any, where: str) -> None:
    if isinstance(v, list):
        zs = parse_zeros(v, where)
        if not zs:
            raise ConfigError(f"{where}: needs at least one zero", field=where)
        return
    if isinstance(v, dict) and set(v) == {"random"}:
        _int(v, "random", where, lo=1, hi=12)
        return
    raise ConfigError(f"{where}: expected a zero list or {{\"random\": n}}", field=where)


def _check_span(v: Any, where: str) -> None:
    if not isinstance(v, list) or not v:
        raise ConfigError(f"{where}: expected a non-empty list of coefficient lists", field=where)
    for i, c in enumerate(v):
        parse_coeffs(c, f"{where}[{i}]")


def _validate_params(kind: str, p: Any) -> dict:
    where = "params"
    if not isinstance(p, dict):
        raise ConfigError("params: expected an object", field="params")
    unknown = set(p) - PARAM_KEYS[kind]
    if unknown:
        raise ConfigError(f"params: unknown keys {sorted(unknown)} for kind {kind!r}", field="params")
    if "phi" in p:
        _check_phi(p["phi"], "params.phi")
    for key, lo, hi in (("m", 0, 8), ("support", 1, 64), ("samples", 0, 256), ("shifts", 0, 8), ("dim", 1, 64),
                        ("bases", 1, 64), ("g", 1, 1000), ("n_max", 1, 100000), ("M_zeros", None, None)):
        if key in p and key != "M_zeros":
            _int(p, key, where, lo=lo, hi=hi)
    if "subspace" in p and p["subspace"] not in ("full", "invariant"):
        raise ConfigError("params.subspace: expected 'full' or 'invariant'", field="params.subspace")
    if "require_exact_zero" in p and not isinstance(p["require_exact_zero"], bool):
        raise ConfigError("params.require_exact_zero: expected a boolean", field="params.require_exact_zero")
    if "directions" in p:
        d = p["directions"]
        if not isinstance(d, list) or not d or any(x not in ("forward", "reverse") for x in d):
            raise ConfigError("params.directions: expected a subset of ['forward', 'reverse']", field="params.directions")
    for key in ("B", "B_minor", "M_zeros"):
        if key in p:
            _check_blaschke(p[key], f"params.{key}")
    if "span" in p:
        _check_span(p["span"], "params.span")
    if "fs" in p:
        _check_span(p["fs"], "params.fs")
    if "source" in p and p["source"] not in ("model_space", "corollary", "span"):
        raise ConfigError("params.source: expected 'model_space', 'corollary' or 'span'", field="params.source")
    if kind == "nearly" and p.get("source") == "span" and "span" not in p:
        raise ConfigError("params.span: required when source is 'span'", field="params.span")
    if kind == "counterexample" and "B_minor" not in p:
        raise ConfigError("params.B_minor: required", field="params.B_minor")
    return dict(p)


def parse_config(data: Any, source: str = "<memory>") -> ScenarioConfig:
    if not isinstance(data, dict):
        raise ConfigError("top level: expected an object")
    unknown = set(data) - {"schema_version", "name", "kind", "tag", "truncation", "seed", "repetitions", "params", "description"}
    if unknown:
        raise ConfigError(f"top level: unknown keys {sorted(unknown)}")
    if data.get("schema_version") != SCHEMA_VERSION:
        raise ConfigError(
            f"schema_version: expected {SCHEMA_VERSION}, got {data.get('schema_version')!r}", field="schema_version"
        )
    kind = data.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"kind: expected one of {list(KINDS)}, got {kind!r}", field="kind")
    name = data.get("name", Path(source).stem)
    tag = data.get("tag", DEFAULT_TAGS[kind])
    for key, val in (("name", name), ("tag", tag)):
        if not isinstance(val, str) or not val:
            raise ConfigError(f"{key}: expected a non-empty string", field=key)
    if "truncation" not in data:
        raise ConfigError("truncation: required", field="truncation")
    return ScenarioConfig(
        name=name,
        kind=kind,
        tag=tag,
        truncation=_truncation(data["truncation"]),
        seed=_int(data, "seed", "top level", default=0, lo=0),
        repetitions=_int(data, "repetitions", "top level", default=1, lo=1, hi=10000),
        params=_validate_params(kind, data.get("params", {})),
        source=source,
    )


def load_config(path: str | os.PathLike) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror})") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    try:
        return parse_config(data, str(path))
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}", field=exc.field) from exc


def apply_overrides(
    cfg: ScenarioConfig,
    degree: int | None = None,
    guard: int | None = None,
    eps_residual: float | None = None,
    eps_rank: float | None = None,
    env: dict[str, str] | None = None,
) -> ScenarioConfig:
    """Command-line overrides, then the seed from HARDY_LAB_SEED if set."""
    t = cfg.truncation
    if degree is not None:
        # the guard default scales with the degree unless pinned
        t = TruncationConfig(degree, t.guard if guard is None and degree == t.degree else guard, t.eps_residual, t.eps_rank)
    if guard is not None:
        t = replace(t, guard=guard)
    if eps_residual is not None:
        t = replace(t, eps_residual=eps_residual)
    if eps_rank is not None:
        t = replace(t, eps_rank=eps_rank)
    seed = cfg.seed
    env = os.environ if env is None else env
    raw = env.get(SEED_ENV)
    if raw is not None and raw.strip():
        try:
            seed = int(raw)
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV}: expected an integer, got {raw!r}", field=SEED_ENV) from exc
        if seed < 0:
            raise ConfigError(f"{SEED_ENV}: must be non-negative", field=SEED_ENV)
    return replace(cfg, truncation=t, seed=seed)
