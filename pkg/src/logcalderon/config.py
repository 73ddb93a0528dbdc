"""Strict JSON experiment configuration.

Every section is a fixed set of keys; anything unknown, missing or of the
wrong type raises :class:`ConfigError` carrying a dotted field path.
Resolution against a grid (building regions, potentials) happens in
:meth:`ExperimentConfig.resolve` so geometric errors carry paths too.
"""

from __future__ import annotations

import hashlib
import json
import numbers
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .forms import QuadratureSpec
from .grid import CellField, Grid, RegionError, RegionSet, build_grid, define_regions, resolve_cells

SCHEMA_VERSION = 1
EXPERIMENTS = (
    "assemble",
    "solve",
    "dnmap",
    "identity",
    "monotone",
    "reconstruct",
    "runge",
    "localize",
    "spectrum",
    "fraclimit",
)

_NUM = (numbers.Real,)
_ANY = object

# kind -> {param: (accepted types, default)}; a default of ... marks the key required
PARAMS: dict[str, dict] = {
    "assemble": {"forms": (list, ["log_B0"]), "routes": (list, ["singular"]), "s": (_NUM, 0.25)},
    "solve": {
        "potential": (str, None),
        "data": (dict, {"window": "w1", "values": "ones"}),
        "source": (_NUM + (list,), 0.0),
        "stability_draws": (int, 0),
        "seed": (int, 0),
    },
    "dnmap": {"potential": (str, None), "precision_bits": (int, 53)},
    "identity": {"q1": (str, ...), "q2": (str, ...), "draws": (int, 20), "seed": (int, 0)},
    "monotone": {"q1": (str, ...), "q2": (str, ...), "precision_bits": (int, 53)},
    "reconstruct": {
        "truth": (str, ...),
        "q_bound": (_NUM, ...),
        "precision_bits": (int, 170),
    },
    "runge": {
        "potential": (str, None),
        "target_block": (int, 0),
        "alpha": (_NUM, None),
        "window_groups": (list, [1]),
    },
    "localize": {
        "potential": (str, None),
        "M": (_ANY, ...),
        "steps": (int, 4),
        "alphas": ((list, type(None)), None),
    },
    "spectrum": {"potential": (str, None), "k": (int, 6), "rayleigh_samples": (int, 1000), "seed": (int, 0)},
    "fraclimit": {"s_list": (list, [0.2, 0.1, 0.05]), "ratio_bound": (_NUM, 0.6)},
}


class ConfigError(ValueError):
    """Schema violation; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


def _section(data, path: str, required: set, optional: dict) -> dict:
    if not isinstance(data, dict):
        raise ConfigError(path, f"expected an object, got {type(data).__name__}")
    unknown = set(data) - required - set(optional)
    if unknown:
        raise ConfigError(f"{path}.{sorted(unknown)[0]}", "unknown field")
    missing = required - set(data)
    if missing:
        raise ConfigError(f"{path}.{sorted(missing)[0]}", "missing required field")
    out = dict(optional)
    out.update(data)
    return out


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise ConfigError(path, f"expected a number, got {value!r}")
    return float(value)


@dataclass(frozen=True)
class Tolerances:
    psd_tol: float | None = None
    bis_tol: float = 1e-3
    solver_tol: float = 1e-10
    alpha: float = 1e-12
    route_tol: float = 1e-3
    identity_tol: float = 1e-9
    symmetry_tol: float = 1e-10


def _tolerances(data, path: str) -> Tolerances:
    defaults = asdict(Tolerances())
    d = _section(data or {}, path, set(), defaults)
    for key, value in d.items():
        if key == "psd_tol" and value is None:
            continue
        if _number(value, f"{path}.{key}") < 0:
            raise ConfigError(f"{path}.{key}", "must be nonnegative")
    return Tolerances(**{k: (None if v is None else float(v)) for k, v in d.items()})


def _quadrature(data, path: str) -> QuadratureSpec:
    defaults = QuadratureSpec().to_dict()
    d = _section(data or {}, path, set(), defaults)
    try:
        return QuadratureSpec(**d)
    except (TypeError, ValueError) as exc:
        raise ConfigError(path, str(exc)) from None


def _potential_spec(data, path: str) -> dict:
    if not isinstance(data, dict) or len(data) != 1:
        raise ConfigError(path, "potential must be one of {constant}, {blocks}, {values}")
    (key, value), = data.items()
    if key == "constant":
        _number(value, f"{path}.constant")
    elif key in ("blocks", "values"):
        if not isinstance(value, list) or not value:
            raise ConfigError(f"{path}.{key}", "expected a nonempty list of numbers")
        for i, v in enumerate(value):
            _number(v, f"{path}.{key}[{i}]")
    else:
        raise ConfigError(f"{path}.{key}", "unknown potential kind (use constant, blocks or values)")
    return data


def _params(kind: str, data, path: str) -> dict:
    schema = PARAMS[kind]
    required = {k for k, (_, default) in schema.items() if default is ...}
    optional = {k: default for k, (_, default) in schema.items() if default is not ...}
    d = _section(data or {}, path, required, optional)
    for key, value in d.items():
        types, default = schema[key]
        if types is _ANY or (value is None and default is None):
            continue
        types = types if isinstance(types, tuple) else (types,)
        if isinstance(value, bool) or not isinstance(value, types):
            raise ConfigError(f"{path}.{key}", f"wrong type {type(value).__name__}")
    return d


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    grid: dict
    regions: dict
    quadrature: QuadratureSpec
    potentials: dict
    tolerances: Tolerances
    params: dict
    output_dir: str | None = None
    schema_version: int = SCHEMA_VERSION
    raw: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def config_hash(self) -> str:
        return config_hash(self.raw)

    def resolve(self) -> "ResolvedExperiment":
        try:
            grid = build_grid(self.grid["box"], self.grid["cells_per_axis"])
        except (RegionError, TypeError, ValueError) as exc:
            raise ConfigError("grid", str(exc)) from None
        r = self.regions
        try:
            regions = define_regions(grid, r["omega"], r["w1"], r.get("w2"), r.get("partition"))
        except (RegionError, TypeError, ValueError, IndexError) as exc:
            raise ConfigError("regions", str(exc)) from None
        pots = {}
        for name, spec in self.potentials.items():
            pots[name] = _build_potential(grid, regions, spec, f"potentials.{name}")
        for key in ("potential", "q1", "q2", "truth"):
            name = self.params.get(key)
            if name is not None and name not in pots:
                raise ConfigError(f"params.{key}", f"unknown potential {name!r}")
        _check_params(self.experiment, self.params, grid, regions)
        return ResolvedExperiment(self, grid, regions, pots)


_FORMS = ("log_B0", "mass", "potential", "fractional_Bs", "abslog_gram", "h0_seminorm")


def _check_params(kind: str, p: dict, grid: Grid, regions: RegionSet) -> None:
    """Grid-dependent parameter checks, done before anything is written."""
    if kind == "assemble":
        for i, f in enumerate(p["forms"]):
            if f not in _FORMS:
                raise ConfigError(f"params.forms[{i}]", f"unknown form {f!r}")
        for i, r in enumerate(p["routes"]):
            if r not in ("singular", "fourier"):
                raise ConfigError(f"params.routes[{i}]", f"unknown route {r!r}")
        if "fractional_Bs" in p["forms"] and not 0.0 < p["s"] < 0.5:
            raise ConfigError("params.s", "fractional order must lie in (0, 1/2)")
    elif kind == "solve":
        data = p["data"]
        _section(data, "params.data", set(), {"window": "w1", "values": "ones"})
        window = data.get("window", "w1")
        if window not in ("w1", "w2"):
            raise ConfigError("params.data.window", "expected 'w1' or 'w2'")
        values = data.get("values", "ones")
        size = (regions.w1 if window == "w1" else regions.w2).size
        ok = (
            values == "ones"
            or (isinstance(values, dict) and set(values) == {"random"} and isinstance(values["random"], int))
            or (isinstance(values, list) and len(values) == size)
        )
        if not ok:
            raise ConfigError("params.data.values", "expected 'ones', {'random': seed} or one value per window cell")
        if isinstance(p["source"], list) and len(p["source"]) != regions.omega.size:
            raise ConfigError("params.source", f"{len(p['source'])} values for {regions.omega.size} Omega cells")
    elif kind == "reconstruct":
        if _number(p["q_bound"], "params.q_bound") <= 0:
            raise ConfigError("params.q_bound", "must be positive")
    elif kind == "runge":
        if not 0 <= p["target_block"] < len(regions.partition):
            raise ConfigError("params.target_block", f"no partition block {p['target_block']}")
        groups = p["window_groups"]
        if not groups or not all(isinstance(k, int) and not isinstance(k, bool) and k >= 1 for k in groups):
            raise ConfigError("params.window_groups", "expected a nonempty list of positive integers")
    elif kind == "localize":
        try:
            M = resolve_cells(grid, p["M"])
        except (RegionError, TypeError, ValueError) as exc:
            raise ConfigError("params.M", str(exc)) from None
        if M.size == 0 or not np.all(np.isin(M, regions.omega)):
            raise ConfigError("params.M", "M must be a nonempty subset of Omega")
        if M.size == regions.omega.size:
            raise ConfigError("params.M", "M equals Omega; Omega \\ M must be nonempty")
    elif kind == "fraclimit":
        for i, s in enumerate(p["s_list"]):
            if not 0.0 < _number(s, f"params.s_list[{i}]") < 0.5:
                raise ConfigError(f"params.s_list[{i}]", "fractional order must lie in (0, 1/2)")


@dataclass(frozen=True)
class ResolvedExperiment:
    config: ExperimentConfig
    grid: Grid
    regions: RegionSet
    potentials: dict

    def potential(self, name: str | None) -> CellField:
        if name is None:
            return CellField.zeros(self.grid, self.regions.omega, "omega")
        return self.potentials[name]


def _build_potential(grid: Grid, regions: RegionSet, spec: dict, path: str) -> CellField:
    (key, value), = spec.items()
    omega = regions.omega
    if key == "constant":
        return CellField.on(grid, omega, float(value), "omega")
    if key == "blocks":
        if len(value) != len(regions.partition):
            raise ConfigError(
                f"{path}.blocks", f"{len(value)} values for {len(regions.partition)} partition blocks"
            )
        values = np.zeros(grid.num_cells)
        for block, v in zip(regions.partition, value):
            values[block] = float(v)
        return CellField(values, "omega", np.isin(np.arange(grid.num_cells), omega))
    if len(value) != omega.size:
        raise ConfigError(f"{path}.values", f"{len(value)} values for {omega.size} Omega cells")
    return CellField.on(grid, omega, np.asarray(value, dtype=float), "omega")


def canonical_json(data) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def config_hash(raw: dict) -> str:
    return hashlib.sha256(canonical_json(raw).encode()).hexdigest()[:16]


def parse_config(data, experiment: str | None = None) -> ExperimentConfig:
    top = _section(
        data,
        "config",
        {"grid", "regions"},
        {
            "schema_version": SCHEMA_VERSION,
            "experiment": experiment,
            "quadrature": None,
            "potentials": {},
            "tolerances": None,
            "params": None,
            "output_dir": None,
        },
    )
    if top["schema_version"] != SCHEMA_VERSION:
        raise ConfigError("config.schema_version", f"unsupported version {top['schema_version']!r}")
    kind = top["experiment"]
    if kind is None:
        raise ConfigError("config.experiment", "missing experiment kind")
    if kind not in EXPERIMENTS:
        raise ConfigError("config.experiment", f"unknown experiment {kind!r}")
    if experiment is not None and kind != experiment:
        raise ConfigError("config.experiment", f"config is for {kind!r} but {experiment!r} was requested")
    grid = _section(top["grid"], "grid", {"box", "cells_per_axis"}, {})
    cells = np.atleast_1d(np.asarray(grid["cells_per_axis"], dtype=object))
    for i, c in enumerate(cells):
        if isinstance(c, bool) or not isinstance(c, int) or c < 1:
            raise ConfigError(f"grid.cells_per_axis[{i}]", f"expected a positive integer, got {c!r}")
    regions = _section(top["regions"], "regions", {"omega", "w1"}, {"w2": None, "partition": None})
    if not isinstance(top["potentials"], dict):
        raise ConfigError("potentials", "expected an object of named potentials")
    pots = {name: _potential_spec(spec, f"potentials.{name}") for name, spec in top["potentials"].items()}
    if top["output_dir"] is not None and not isinstance(top["output_dir"], str):
        raise ConfigError("config.output_dir", "expected a string")
    return ExperimentConfig(
        experiment=kind,
        grid=grid,
        regions=regions,
        quadrature=_quadrature(top["quadrature"], "quadrature"),
        potentials=pots,
        tolerances=_tolerances(top["tolerances"], "tolerances"),
        params=_params(kind, top["params"], "params"),
        output_dir=top["output_dir"],
        raw=data,
    )


def load_config(path, experiment: str | None = None) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError("config", f"file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return parse_config(data, experiment)
