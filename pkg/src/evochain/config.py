"""JSON chain configurations and the bundled preset library.

A configuration is a JSON object with a top-level ``generator`` field naming
one of the builders in :mod:`evochain.generators`, a generator-specific
``params`` map (``blocks`` for direct sums), and optional ``name`` and
``window`` [lo, hi] fields.  Function-valued parameters are expression
strings in the scalar DSL.  Presets bundled under ``evochain/presets`` can
be referenced by bare name anywhere a config path is accepted, including
inside direct-sum blocks.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .chain import ChainFamily, direct_sum
from .errors import ConfigError, ExpressionSyntaxError
from .generators import (
    PermutationSpec,
    SymmetricParams,
    Triangular111Params,
    Triangular112Params,
    Triangular122Params,
    Triangular222Params,
    constant_chain,
    permutation_chain,
    symmetric_chain,
    triangular3_case111,
    triangular3_case112,
    triangular3_case122,
    triangular3_case222,
)
from .scalar_fn import ScalarFn, StepSpec, parse

GENERATOR_NAMES = (
    "permutation",
    "triangular3-111",
    "triangular3-112",
    "triangular3-122",
    "triangular3-222",
    "symmetric",
    "direct-sum",
    "constant",
)


@dataclass
class LoadedConfig:
    """A parsed config document plus provenance for run reports."""

    data: dict
    source: str
    sha256: str
    base_dir: Path | None


def _preset_dir():
    return resources.files("evochain").joinpath("presets")


def list_presets() -> list[str]:
    """Names of the bundled preset configs, usable in place of file paths."""
    return sorted(
        entry.name[: -len(".json")]
        for entry in _preset_dir().iterdir()
        if entry.name.endswith(".json")
    )


def _read_ref(ref) -> tuple[bytes, str, Path | None]:
    text = str(ref)
    path = Path(text)
    looks_like_path = (
        isinstance(ref, Path)
        or path.suffix != ""
        or "/" in text
        or "\\" in text
        or path.exists()
    )
    if looks_like_path:
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        return path.read_bytes(), str(path), path.resolve().parent
    candidate = _preset_dir().joinpath(f"{text}.json")
    if not candidate.is_file():
        known = ", ".join(list_presets()) or "none bundled"
        raise ConfigError(
            f"no config file or bundled preset named {text!r} (presets: {known})"
        )
    return candidate.read_bytes(), f"preset:{text}", None


def load_config(ref) -> LoadedConfig:
    """Read a config by filesystem path or bundled preset name."""
    raw, source, base_dir = _read_ref(ref)
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: invalid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a JSON object")
    return LoadedConfig(
        data=data,
        source=source,
        sha256=hashlib.sha256(raw).hexdigest(),
        base_dir=base_dir,
    )


# --- field readers ----------------------------------------------------------------
#
# Every reader raises ConfigError with the dotted key path of the offending
# field, which the CLI surfaces verbatim.

def _require(mapping: dict, key: str, path: str):
    if key not in mapping:
        raise ConfigError("missing required key", key_path=f"{path}.{key}")
    return mapping[key]


def _expr(raw, path: str) -> ScalarFn:
    if not isinstance(raw, str):
        raise ConfigError(
            f"expected an expression string, got {type(raw).__name__}", key_path=path
        )
    try:
        return parse(raw)
    except ExpressionSyntaxError as exc:
        raise ConfigError(f"bad expression: {exc}", key_path=path) from exc


def _number(raw, path: str, positive: bool = False) -> float:
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        raise ConfigError(
            f"expected a number, got {type(raw).__name__}", key_path=path
        )
    value = float(raw)
    if not math.isfinite(value):
        raise ConfigError("expected a finite number", key_path=path)
    if positive and value <= 0:
        raise ConfigError("expected a positive number", key_path=path)
    return value


def _params_map(data: dict) -> dict:
    params = data.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("params must be an object", key_path="params")
    return params


def _reject_unknown(mapping: dict, allowed, path: str):
    unknown = sorted(set(mapping) - set(allowed))
    if unknown:
        first = f"{path}.{unknown[0]}" if path else unknown[0]
        raise ConfigError(
            f"unknown key(s) {unknown}; allowed: {sorted(allowed)}", key_path=first
        )


def _collect(params: dict, required_exprs, optional_exprs, numbers, splits, path="params"):
    """Read a triangular param map into dataclass kwargs.

    ``numbers`` are required positive thresholds, ``splits`` optional plain
    floats.  Unknown keys are rejected so typos fail loudly instead of
    silently falling back to a zero default.
    """
    _reject_unknown(
        params, list(required_exprs) + list(optional_exprs) + list(numbers) + list(splits), path
    )
    kwargs = {}
    for key in required_exprs:
        kwargs[key] = _expr(_require(params, key, path), f"{path}.{key}")
    for key in optional_exprs:
        if key in params:
            kwargs[key] = _expr(params[key], f"{path}.{key}")
    for key in numbers:
        kwargs[key] = _number(_require(params, key, path), f"{path}.{key}", positive=True)
    for key in splits:
        if key in params:
            kwargs[key] = _number(params[key], f"{path}.{key}")
    return kwargs


# --- generator builders -----------------------------------------------------------

def _build_triangular111(data: dict, base_dir) -> ChainFamily:
    kwargs = _collect(
        _params_map(data),
        required_exprs=("diag1", "diag2", "diag3"),
        optional_exprs=("drift12", "drift23", "drift13"),
        numbers=(),
        splits=("split",),
    )
    return triangular3_case111(Triangular111Params(**kwargs))


def _build_triangular112(data: dict, base_dir) -> ChainFamily:
    kwargs = _collect(
        _params_map(data),
        required_exprs=("diag1", "diag2"),
        optional_exprs=("drift12", "drift23", "tail23", "drift13", "tail13"),
        numbers=("cutoff3",),
        splits=("split", "tail_split"),
    )
    return triangular3_case112(Triangular112Params(**kwargs))


def _build_triangular122(data: dict, base_dir) -> ChainFamily:
    kwargs = _collect(
        _params_map(data),
        required_exprs=("diag1",),
        optional_exprs=("drift12", "tail12", "drift23", "mid23", "drift13", "mid13", "tail13"),
        numbers=("cutoff2", "cutoff3"),
        splits=("split",),
    )
    return triangular3_case122(Triangular122Params(**kwargs))


def _build_triangular222(data: dict, base_dir) -> ChainFamily:
    kwargs = _collect(
        _params_map(data),
        required_exprs=(),
        optional_exprs=(
            "drift12", "mid12", "drift23", "mid23", "drift13", "mid13", "late13",
        ),
        numbers=("cutoff1", "cutoff2", "cutoff3"),
        splits=("split", "mid_split"),
    )
    return triangular3_case222(Triangular222Params(**kwargs))


def _build_permutation(data: dict, base_dir) -> ChainFamily:
    params = _params_map(data)
    _reject_unknown(params, ("images", "fixed_points"), "params")
    images = _require(params, "images", "params")
    if not isinstance(images, list) or not images or not all(
        isinstance(v, int) and not isinstance(v, bool) for v in images
    ):
        raise ConfigError("images must be a non-empty array of integers", key_path="params.images")

    raw_fixed = params.get("fixed_points", {})
    if not isinstance(raw_fixed, dict):
        raise ConfigError("fixed_points must be an object", key_path="params.fixed_points")
    choices = {}
    for key, val in raw_fixed.items():
        path = f"params.fixed_points.{key}"
        try:
            index = int(key)
        except ValueError:
            raise ConfigError("keys must be basis indices", key_path=path) from None
        if not isinstance(val, dict) or len(val) != 1 or next(iter(val)) not in ("ratio", "step"):
            raise ConfigError(
                'expected exactly one of {"ratio": <expr>} or {"step": <threshold>}',
                key_path=path,
            )
        if "ratio" in val:
            choices[index] = _expr(val["ratio"], f"{path}.ratio")
        else:
            choices[index] = StepSpec(_number(val["step"], f"{path}.step", positive=True))

    try:
        spec = PermutationSpec(tuple(images), choices)
        return permutation_chain(spec)
    except ValueError as exc:
        raise ConfigError(str(exc), key_path="params") from exc


def _build_symmetric(data: dict, base_dir) -> ChainFamily:
    params = _params_map(data)
    _reject_unknown(params, ("scales", "offsets", "check_tol", "check_samples", "seed"), "params")
    raw_scales = _require(params, "scales", "params")
    raw_offsets = _require(params, "offsets", "params")
    if not isinstance(raw_scales, list) or not raw_scales:
        raise ConfigError("scales must be a non-empty array", key_path="params.scales")
    n = len(raw_scales)
    if not isinstance(raw_offsets, list) or len(raw_offsets) != n or not all(
        isinstance(row, list) and len(row) == n for row in raw_offsets
    ):
        raise ConfigError(
            f"offsets must be a {n}x{n} array of expressions", key_path="params.offsets"
        )
    scales = [_expr(v, f"params.scales[{i}]") for i, v in enumerate(raw_scales)]
    offsets = [
        [_expr(v, f"params.offsets[{i}][{k}]") for k, v in enumerate(row)]
        for i, row in enumerate(raw_offsets)
    ]
    tol = _number(params["check_tol"], "params.check_tol", positive=True) if "check_tol" in params else 1e-9
    samples = int(_number(params["check_samples"], "params.check_samples", positive=True)) if "check_samples" in params else 64
    seed = int(_number(params["seed"], "params.seed")) if "seed" in params else 1729
    chain, _diagnostics = symmetric_chain(
        SymmetricParams(scales, offsets), tol=tol, samples=samples, seed=seed
    )
    return chain


def _build_constant(data: dict, base_dir) -> ChainFamily:
    params = _params_map(data)
    _reject_unknown(params, ("matrix",), "params")
    raw = _require(params, "matrix", "params")
    if not isinstance(raw, list) or not raw or not all(
        isinstance(row, list) and len(row) == len(raw) for row in raw
    ):
        raise ConfigError("matrix must be a square array of numbers", key_path="params.matrix")
    for i, row in enumerate(raw):
        for j, v in enumerate(row):
            _number(v, f"params.matrix[{i}][{j}]")
    return constant_chain(np.array(raw, dtype=float))


def _build_direct_sum(data: dict, base_dir) -> ChainFamily:
    blocks = data.get("blocks")
    if not isinstance(blocks, list) or not blocks:
        raise ConfigError("direct-sum needs a non-empty blocks array", key_path="blocks")
    parts = []
    for i, block in enumerate(blocks):
        path = f"blocks[{i}]"
        if isinstance(block, dict):
            parts.append(build_chain(block, base_dir=base_dir))
        elif isinstance(block, str):
            ref = block
            if ("/" in block or "\\" in block or Path(block).suffix) and base_dir is not None:
                candidate = Path(block)
                if not candidate.is_absolute():
                    ref = base_dir / candidate
            try:
                loaded = load_config(ref)
            except ConfigError as exc:
                raise ConfigError(str(exc), key_path=path) from exc
            parts.append(build_chain(loaded.data, base_dir=loaded.base_dir))
        else:
            raise ConfigError(
                "each block must be a config object, path, or preset name", key_path=path
            )
    return direct_sum(parts)


_BUILDERS = {
    "permutation": _build_permutation,
    "triangular3-111": _build_triangular111,
    "triangular3-112": _build_triangular112,
    "triangular3-122": _build_triangular122,
    "triangular3-222": _build_triangular222,
    "symmetric": _build_symmetric,
    "direct-sum": _build_direct_sum,
    "constant": _build_constant,
}


def build_chain(data: dict, base_dir: Path | None = None) -> ChainFamily:
    """Instantiate the chain family a config document describes."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    generator = data.get("generator")
    if generator is None:
        raise ConfigError("missing required key", key_path="generator")
    if generator not in _BUILDERS:
        raise ConfigError(
            f"unknown generator {generator!r}; expected one of {', '.join(GENERATOR_NAMES)}",
            key_path="generator",
        )
    body_key = "blocks" if generator == "direct-sum" else "params"
    _reject_unknown(data, ("generator", "name", "window", body_key), "")

    chain = _BUILDERS[generator](data, base_dir)

    if "window" in data:
        raw = data["window"]
        if not isinstance(raw, list) or len(raw) != 2:
            raise ConfigError("window must be [lo, hi]", key_path="window")
        lo = _number(raw[0], "window[0]")
        hi = _number(raw[1], "window[1]")
        if not 0.0 <= lo < hi:
            raise ConfigError("window needs 0 <= lo < hi", key_path="window")
        lo, hi = max(lo, chain.window[0]), min(hi, chain.window[1])
        if not lo < hi:
            raise ConfigError(
                "window does not overlap the generator's domain", key_path="window"
            )
        chain.window = (lo, hi)

    if "name" in data:
        if not isinstance(data["name"], str) or not data["name"]:
            raise ConfigError("name must be a non-empty string", key_path="name")
        chain.name = data["name"]
    return chain


def load_chain(ref) -> tuple[ChainFamily, LoadedConfig]:
    """Convenience wrapper: load a config reference and build its chain."""
    loaded = load_config(ref)
    chain = build_chain(loaded.data, base_dir=loaded.base_dir)
    return chain, loaded
