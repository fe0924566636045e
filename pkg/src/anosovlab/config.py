"""TOML experiment configuration: schema, defaults, strict validation.

A config has an [endomorphism] table (integer matrix plus optional
shear list), an optional [run] table (seed, out_dir, threads), and one
optional table per subcommand holding its parameters.  Unknown tables
or keys are errors: a typo in a tolerance should never silently run
with the default.
"""

import dataclasses
import hashlib

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

import numpy as np

from .smooth import REFERENCE_MATRIX, SHIPPED_COMPOSITIONS, ShearMap, build_endo

__all__ = ["ConfigError", "load_config", "resolve", "build_endomorphism",
           "config_digest", "SCHEMAS"]


class ConfigError(ValueError):
    """Raised for unreadable, unknown, or ill-typed configuration."""


# key -> (expected type(s), default); None default means required
_ENDO_SCHEMA = {
    "matrix": ((str, list), None),
    "tol_hyp": (float, 1e-9),
}

_SHEAR_SCHEMA = {
    "axis": (int, None),
    "driver": (int, None),
    "amplitude": (float, None),
    "frequency": (int, 1),
    "phase": (float, 0.0),
}

_RUN_SCHEMA = {
    "seed": (int, 0),
    "out_dir": (str, "runs/out"),
    "threads": (int, 1),
}

SCHEMAS = {
    "verify_anosov": {
        "halfangle_u": (float, 0.3),
        "halfangle_s": (float, 0.3),
        "grid_resolution": (int, 256),
        "cone_samples": (int, 9),
        "c1_resolution": (int, 128),
    },
    "preimage_tree": {
        "point": (list, [0.5, 0.5]),
        "depth": (int, 12),
        "mode": (str, "exhaustive"),     # "exhaustive" or "sampled"
        "samples": (int, 200),
        "cap": (int, 2 ** 20),
    },
    "dichotomy_scan": {
        "points": (int, 100),
        "samples": (int, 200),
        "depth": (int, 40),
        "cluster_tolerance": (float, 1e-4),
        "dispersion_threshold": (float, 1e-3),
        "monotonicity_steps": (int, 0),
    },
    "angle_decay": {
        "pairs": (int, 20),
        "steps": (int, 30),
        "final_tol": (float, 1e-8),
    },
    "lyapunov_census": {
        "count": (int, 100),
        "steps": (int, 20000),
        "depth": (int, 40),
        "burn_in": (int, 100),
        "slack": (float, 0.01),
    },
    "quasi_iso": {
        "point": (list, [0.5, 0.5]),
        "arclength": (float, 50.0),
        "step": (float, 0.01),
        "depth": (int, 30),
        "max_turn": (float, 0.1),
        "pair_floor": (float, 1.0),
        "ratio_floor": (float, 10.0),
        "ratio_bound": (float, 1.1),
        "direction_floors": (list, [5.0, 10.0, 20.0, 40.0]),
        "growth_pairs": (int, 10),
        "growth_k": (int, 8),
        "growth_sep": (float, 10.0),
        "growth_bound": (float, 1.2),
        "sandwich_n": (int, 12),
        "sandwich_eps": (float, 0.01),
        "sandwich_offset": (float, 1e-3),
    },
    "ergodic_test": {
        "observables": (list, ["cos:1,0", "sin:0,1", "cos:1,1"]),
        "starts": (int, 100),
        "steps": (int, 100000),
        "mean_tol": (float, 0.01),
        "std_tol": (float, 0.02),
        "scaling_steps": (list, [1000, 10000, 100000]),
        "dither": (float, 2.0 ** -30),
    },
}


def load_config(path):
    """Read and parse a TOML config file; raw text is kept for hashing."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = tomllib.loads(raw.decode("utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from exc
    return data, raw.decode("utf-8")


def config_digest(text):
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _coerce(value, expected, where):
    if expected is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    types = expected if isinstance(expected, tuple) else (expected,)
    if isinstance(value, bool) and bool not in types:
        raise ConfigError(f"{where}: expected {expected}, got boolean")
    if not isinstance(value, types):
        raise ConfigError(
            f"{where}: expected {'/'.join(t.__name__ for t in types)}, "
            f"got {type(value).__name__}"
        )
    return value


def _apply_schema(table, schema, where):
    out = {}
    for key, value in table.items():
        if key not in schema:
            known = ", ".join(sorted(schema))
            raise ConfigError(f"unknown key '{where}.{key}' (known: {known})")
        out[key] = _coerce(value, schema[key][0], f"{where}.{key}")
    for key, (_, default) in schema.items():
        if key not in out:
            if default is None:
                raise ConfigError(f"missing required key '{where}.{key}'")
            out[key] = default
    return out


def resolve(data, command=None, overrides=None):
    """Validate a parsed config against the schemas and fill defaults.

    command selects which experiment table to resolve (others may be
    present in the file and are validated but ignored).  overrides is a
    dict like {'seed': 3} applied on top of [run].
    """
    if not isinstance(data, dict):
        raise ConfigError("config root must be a table")
    known_tables = {"endomorphism", "run", *SCHEMAS}
    for name in data:
        if name not in known_tables:
            raise ConfigError(
                f"unknown table [{name}] (known: {', '.join(sorted(known_tables))})"
            )
    if "endomorphism" not in data:
        raise ConfigError("missing required table [endomorphism]")

    endo_table = dict(data["endomorphism"])
    composition = endo_table.pop("composition", None)
    shear_tables = endo_table.pop("shears", [])
    if composition is not None:
        if composition not in SHIPPED_COMPOSITIONS:
            raise ConfigError(
                f"unknown endomorphism.composition {composition!r} "
                f"(known: {', '.join(sorted(SHIPPED_COMPOSITIONS))})"
            )
        if "matrix" in endo_table or shear_tables:
            raise ConfigError(
                "endomorphism.composition already fixes matrix and shears; "
                "remove the explicit ones"
            )
        endo_table["matrix"] = [list(row) for row in REFERENCE_MATRIX]
        shear_tables = [
            dataclasses.asdict(s) for s in SHIPPED_COMPOSITIONS[composition]
        ]
    endo = _apply_schema(endo_table, _ENDO_SCHEMA, "endomorphism")
    if not isinstance(shear_tables, list):
        raise ConfigError("endomorphism.shears must be an array of tables")
    endo["shears"] = [
        _apply_schema(s, _SHEAR_SCHEMA, f"endomorphism.shears[{i}]")
        for i, s in enumerate(shear_tables)
    ]
    if composition is not None:
        endo["composition"] = composition

    run = _apply_schema(data.get("run", {}), _RUN_SCHEMA, "run")
    if overrides:
        for key, value in overrides.items():
            if value is not None:
                run[key] = value

    resolved = {"endomorphism": endo, "run": run}
    for name, schema in SCHEMAS.items():
        if command is not None and name != command:
            if name in data:
                _apply_schema(data[name], schema, name)  # validate anyway
            continue
        resolved[name] = _apply_schema(data.get(name, {}), schema, name)
    return resolved


def _parse_matrix(spec):
    """Integer matrix from nested lists or whitespace/row-delimited text."""
    if isinstance(spec, str):
        rows = [line.split() for line in spec.splitlines() if line.strip()]
        if len(rows) == 1 and ";" in spec:
            rows = [part.split() for part in spec.split(";")]
        try:
            mat = [[int(tok) for tok in row] for row in rows]
        except ValueError as exc:
            raise ConfigError(f"matrix entries must be integers: {exc}") from exc
    else:
        mat = spec
    arr = np.asarray(mat)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.size == 0:
        raise ConfigError(f"matrix must be square, got shape {arr.shape}")
    return arr


def build_endomorphism(resolved):
    """Construct the SmoothEndo described by a resolved config."""
    endo = resolved["endomorphism"]
    matrix = _parse_matrix(endo["matrix"])
    shears = [ShearMap(**s) for s in endo["shears"]]
    try:
        return build_endo(matrix, shears, tol_hyp=endo["tol_hyp"])
    except ValueError as exc:
        raise ConfigError(f"endomorphism rejected: {exc}") from exc
