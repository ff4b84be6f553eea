"""Experiment configuration: TOML files, ``key=value`` overrides, validation and seeds.

Precedence is flag > file > default. Required fields have no default and must come
from the file or an override; every field is checked before any compute starts.
"""

from __future__ import annotations

import copy
import sys
import zlib
from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .grid import BurgersConfig, GridSpec
from .optim import OptimizerConfig
from .qpinn.training import DEFAULT_PINN_OPTIMIZER

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "Solver",
    "apply_overrides",
    "default_config",
    "load_config",
    "module_seed",
    "parse_override",
]

Solver = str
SOLVERS = ("fdm", "tt", "vqa", "qpinn")
REQUIRED = object()


class ConfigError(ValueError):
    """Invalid or incomplete experiment configuration."""


# field -> (kind, default); kinds: int, float, bool, str, list, or a tuple of allowed strings
_SCHEMA: dict[str, dict[str, tuple[Any, Any]]] = {
    "grid": {
        "L": (int, REQUIRED),
        "domain_length": (float, 1.0),
        "boundary": (("periodic", "dirichlet"), "periodic"),
        "bc_values": (list, None),
    },
    "burgers": {
        "nu": (float, REQUIRED),
        "dt": (float, REQUIRED),
        "t_final": (float, REQUIRED),
        "initial_condition": (("sin", "neg_sin_half"), "sin"),
        "allow_unstable": (bool, False),
        "snapshot_stride": (int, None),
    },
    "tt": {
        "max_chi": (int, None),
        "svd_cutoff": (float, 1e-12),
        "per_op_truncation": (bool, False),
        "chis": (list, [2, 4, 8, 16]),
    },
    "vqa": {
        "layout": (("cascade", "mps_brick"), "cascade"),
        "layers": (int, 4),
        "mode": (("dense", "hadamard"), "dense"),
        "shots": (int, None),
        "seed": (int, None),
    },
    "optimizer": {
        "method": (("adam", "gd"), None),
        "learning_rate": (float, None),
        "beta1": (float, None),
        "beta2": (float, None),
        "eps": (float, None),
        "iterations": (int, None),
        "tolerance": (float, None),
        "divergence_patience": (int, None),
    },
    "qpinn": {
        "architecture": (("hybrid", "classical"), "hybrid"),
        "width": (int, 20),
        "hidden": (int, 4),
        "n_qubits": (int, 5),
        "sublayers": (int, 3),
        "feature_map": (("identity", "chebyshev"), "identity"),
        "chebyshev_order": (int, 1),
        "reupload": (bool, False),
        "lambdas": (list, [1.0, 1.0, 1.0]),
        "n_interior": (int, 2000),
        "n_boundary": (int, 200),
        "n_initial": (int, 200),
        "fd_step": (float, 1e-4),
        "eval_times": (int, 21),
        "compare_classical": (bool, True),
        "init_seed": (int, None),
        "collocation_seed": (int, None),
    },
}
_TOP = {"solver": (SOLVERS, None), "seed": (int, None), "out": (str, None)}
_REQUIRED_SECTIONS = ("grid", "burgers")

# library seeds used when no global seed is given
_DEFAULT_SEEDS = {"vqa.seed": 42, "qpinn.init_seed": 42, "qpinn.collocation_seed": 7}


def module_seed(global_seed: int, name: str) -> int:
    """Deterministic 32-bit seed for module ``name`` split off ``global_seed``."""
    return int(np.random.SeedSequence([global_seed, zlib.crc32(name.encode())]).generate_state(1)[0])


def default_config(solver: Solver) -> dict[str, Any]:
    """Built-in experiment used when no config file is given."""
    if solver == "vqa":
        grid, burgers = {"L": 3}, {"nu": 0.05, "dt": 1e-3, "t_final": 5e-3}
    else:
        grid, burgers = {"L": 8}, {"nu": 0.05, "dt": 1e-4, "t_final": 0.2}
    if solver == "qpinn":
        grid["boundary"] = "dirichlet"
    return {"grid": grid, "burgers": burgers}


def parse_override(text: str) -> tuple[str, Any]:
    """``section.key=value`` with the value read as a TOML literal, else as a string."""
    key, sep, raw = text.partition("=")
    key = key.strip()
    if not sep or not key:
        raise ConfigError(f"override {text!r} is not of the form key=value")
    try:
        value = tomllib.loads(f"v = {raw.strip()}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw.strip()
    return key, value


def apply_overrides(raw: Mapping[str, Any], overrides: list[str]) -> dict[str, Any]:
    out = copy.deepcopy(dict(raw))
    for text in overrides:
        key, value = parse_override(text)
        parts = key.split(".")
        if len(parts) > 2:
            raise ConfigError(f"override key {key!r} nests deeper than section.field")
        if len(parts) == 2:
            section = out.setdefault(parts[0], {})
            if not isinstance(section, dict):
                raise ConfigError(f"{parts[0]!r} is not a section")
            section[parts[1]] = value
        else:
            out[key] = value
    return out


def load_config(path: str | None, solver: Solver, overrides: list[str] = ()) -> ExperimentConfig:
    """Read ``path`` (or the built-in default), apply overrides and validate."""
    if path is None:
        raw: dict[str, Any] = default_config(solver)
    else:
        try:
            with open(path, "rb") as fh:
                raw = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"config {path} is not valid TOML: {exc}") from exc
    return ExperimentConfig.from_dict(apply_overrides(raw, list(overrides)), solver)


def _coerce(name: str, kind: Any, value: Any) -> Any:
    if isinstance(kind, tuple):
        if value not in kind:
            raise ConfigError(f"field {name!r} must be one of {', '.join(kind)}; got {value!r}")
        return value
    ok = {
        int: isinstance(value, int) and not isinstance(value, bool),
        float: isinstance(value, (int, float)) and not isinstance(value, bool),
        bool: isinstance(value, bool),
        str: isinstance(value, str),
        list: isinstance(value, list),
    }[kind]
    if not ok:
        raise ConfigError(f"field {name!r} must be of type {kind.__name__}; got {value!r}")
    return float(value) if kind is float else value


def _validate(raw: Mapping[str, Any], solver: Solver) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for key, value in raw.items():
        if key in _TOP:
            out[key] = None if value is None else _coerce(key, _TOP[key][0], value)
        elif key not in _SCHEMA:
            raise ConfigError(f"unknown field {key!r}")
        elif not isinstance(value, dict):
            raise ConfigError(f"{key!r} must be a section")
    if out.get("solver") not in (None, solver):
        raise ConfigError(f"config is for solver {out['solver']!r} but the command runs {solver!r}")
    out["solver"] = solver
    for name in _REQUIRED_SECTIONS:
        if name not in raw:
            raise ConfigError(f"missing required section {name!r}")
    for section, fields in _SCHEMA.items():
        given = raw.get(section, {})
        for key in given:
            if key not in fields:
                raise ConfigError(f"unknown field '{section}.{key}'")
        resolved = {}
        for key, (kind, default) in fields.items():
            full = f"{section}.{key}"
            if key in given and given[key] is not None:
                resolved[key] = _coerce(full, kind, given[key])
            elif default is REQUIRED:
                raise ConfigError(f"missing required field '{full}'")
            else:
                resolved[key] = copy.deepcopy(default)
        out[section] = resolved
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated configuration. ``data`` holds every field with defaults filled in."""

    solver: Solver
    data: dict[str, Any]

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any], solver: Solver) -> ExperimentConfig:
        if solver not in SOLVERS:
            raise ConfigError(f"unknown solver {solver!r}")
        data = _validate(raw, solver)
        seed = data.get("seed")
        for name, default in _DEFAULT_SEEDS.items():
            section, key = name.split(".")
            if data[section][key] is None:
                data[section][key] = default if seed is None else module_seed(seed, name)
        if data["optimizer"]["method"] is None and solver == "qpinn":
            base = DEFAULT_PINN_OPTIMIZER
        else:
            base = OptimizerConfig()
        for key, value in data["optimizer"].items():
            if value is None:
                value = getattr(base, key)
                data["optimizer"][key] = value.value if key == "method" else value
        cfg = cls(solver, data)
        # build everything once so that bad values fail before compute
        cfg.burgers()
        cfg.optimizer()
        cfg._check_solver()
        return cfg

    def _check_solver(self) -> None:
        d = self.data
        if self.solver == "tt":
            if d["grid"]["boundary"] != "periodic":
                raise ConfigError("the TT solver needs grid.boundary = 'periodic'")
            chis = d["tt"]["chis"]
            if not chis or not all(isinstance(c, int) and not isinstance(c, bool) and c >= 1 for c in chis):
                raise ConfigError("field 'tt.chis' must be a non-empty list of positive integers")
            if d["tt"]["max_chi"] is not None and d["tt"]["max_chi"] < 1:
                raise ConfigError("field 'tt.max_chi' must be >= 1")
        if self.solver == "vqa":
            if d["grid"]["boundary"] != "periodic":
                raise ConfigError("the VQA solver needs grid.boundary = 'periodic'")
            if d["vqa"]["layers"] < 1:
                raise ConfigError("field 'vqa.layers' must be >= 1")
            if d["vqa"]["shots"] is not None and d["vqa"]["shots"] < 1:
                raise ConfigError("field 'vqa.shots' must be >= 1")
            if d["grid"]["L"] > 10:
                raise ConfigError("field 'grid.L' is the VQA qubit count and must be <= 10")
        if self.solver == "qpinn":
            q = d["qpinn"]
            if d["grid"]["boundary"] != "dirichlet":
                raise ConfigError("the physics-informed solver needs grid.boundary = 'dirichlet'")
            if len(q["lambdas"]) != 3 or any(not isinstance(v, (int, float)) or v < 0 for v in q["lambdas"]):
                raise ConfigError("field 'qpinn.lambdas' must be three non-negative numbers")
            for key in ("width", "hidden", "n_qubits", "sublayers", "n_interior", "n_boundary", "n_initial", "eval_times"):
                if q[key] < 1:
                    raise ConfigError(f"field 'qpinn.{key}' must be >= 1")
            if not q["fd_step"] > 0:
                raise ConfigError("field 'qpinn.fd_step' must be > 0")

    def burgers(self) -> BurgersConfig:
        g, b = self.data["grid"], self.data["burgers"]
        try:
            bc = None if g["boundary"] == "periodic" else g["bc_values"]
            if bc is not None:
                bc = tuple(bc)
            spec = GridSpec(g["L"], g["domain_length"], g["boundary"], bc)
            return BurgersConfig(
                spec, b["nu"], b["dt"], b["t_final"], b["initial_condition"], b["allow_unstable"], b["snapshot_stride"]
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    def optimizer(self) -> OptimizerConfig:
        try:
            return OptimizerConfig(**self.data["optimizer"])
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"optimizer: {exc}") from exc

    def seeds(self) -> dict[str, int | None]:
        d = self.data
        return {
            "global": d.get("seed"),
            "vqa.seed": d["vqa"]["seed"],
            "qpinn.init_seed": d["qpinn"]["init_seed"],
            "qpinn.collocation_seed": d["qpinn"]["collocation_seed"],
        }
